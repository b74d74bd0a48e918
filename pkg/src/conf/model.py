import inspect
import json
from copy import deepcopy
from pathlib import Path
from types import UnionType
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, ValidationError, create_model
from pydantic._internal._model_construction import ModelMetaclass as PydanticModelMetaclass
from pydantic.fields import FieldInfo

from exc.exc import ConfigError

BaseModelT = TypeVar("BaseModelT", bound=BaseModel)
AppModelT = TypeVar("AppModelT", bound="AppModel")


class AppModel(BaseModel):
    """Base of every configuration and metadata model: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    @classmethod
    def from_dict(cls: type[AppModelT], data: dict[str, Any]) -> AppModelT:
        try:
            return cls.model_validate(data)
        except ValidationError as error:
            raise config_error_from(error) from error

    @classmethod
    def from_json_file(cls: type[AppModelT], path: str | Path) -> AppModelT:
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as error:
            raise ConfigError(field="config", message=f"config file not found: {path}") from error
        except json.JSONDecodeError as error:
            raise ConfigError(field="config", message=f"{path}: invalid JSON ({error.msg} at line {error.lineno})") from error
        return cls.from_dict(data)


class UpdateBaseModel(BaseModel):

    def model_dump(self, *args, exclude_unset: bool = True, **kwargs) -> dict:
        """Generate a dictionary representation of the model.

        The parameter `exclude_unset` is set as True by default in order to update only those fields that
        have been set by the user.
        In this way, it is easy to distinguish the fields that the user has indicated as null from those that
        the user has not set and are null because they are optional.
        """
        return super().model_dump(exclude_unset=exclude_unset, *args, **kwargs)  # noqa: B026


def config_error_from(error: ValidationError) -> ConfigError:
    """Collapse a pydantic validation error into a single ConfigError naming every offending field."""
    problems = []
    for item in error.errors():
        field = ".".join(str(part) for part in item["loc"]) or "<root>"
        problems.append((field, item["msg"]))
    field = ", ".join(p[0] for p in problems)
    message = "; ".join(f"{f}: {m}" for f, m in problems)
    return ConfigError(field=field, message=message)


def merge_update(model: AppModelT, update: UpdateBaseModel | dict[str, Any]) -> AppModelT:
    """Apply the fields set in `update` over `model` and re-validate the result."""
    data = update.model_dump() if isinstance(update, UpdateBaseModel) else update
    data = {k: v for k, v in data.items() if v is not None}
    if not data:
        return model
    return type(model).from_dict({**model.model_dump(mode="json"), **data})


def optional(cls: type[BaseModelT]) -> type[BaseModelT]:
    """Decorator to define all the BaseModel fields as Optional and to set their default value to None"""

    def is_model(field: Any) -> bool:
        return inspect.isclass(field) and issubclass(field, BaseModel)

    def set_optional_field(field: FieldInfo) -> tuple[UnionType, FieldInfo]:
        _field = deepcopy(field)
        _field.default = None
        _field.default_factory = None
        if is_model(_field.annotation):
            return dec(_cls=_field.annotation, _fields=_field.annotation.model_fields) | None, _field  # type: ignore
        return _field.annotation | None, _field

    def dec(_cls: PydanticModelMetaclass, _fields: dict) -> type[BaseModelT]:
        fields_dict = {field_name: set_optional_field(field=field) for field_name, field in _fields.items()}
        return create_model(_cls.__name__, __base__=UpdateBaseModel, __module__=_cls.__module__, **fields_dict)

    if is_model(cls):
        return dec(_cls=cls, _fields=cls.model_fields)

    return cls
