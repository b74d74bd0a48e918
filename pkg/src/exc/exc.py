from dataclasses import asdict, dataclass

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


@dataclass
class TsDiffuseError(Exception):
    """
    A base exception for all things tsdiffuse, you shouldn't be really raising this.
    Instead, inherit from and override its default values.
    """

    _type = "undefined_error"
    _exit_code = EXIT_CONFIG

    @property
    def exit_code(self) -> int:
        return self._exit_code

    @property
    def type(self) -> str:
        return self._type

    @property
    def detail(self) -> dict:
        return {"type": self._type}

    def __str__(self):
        return self.__repr__()

    def to_dict(self) -> dict:
        """
        Convert this error into a justifiable dict.
        """
        return asdict(self)


@dataclass
class ConfigError(TsDiffuseError):
    """
    A configuration field is missing or invalid.
    """

    field: str
    message: str

    _type = "config_invalid"

    @property
    def detail(self) -> dict:
        return {"type": self._type, "content": {"field": self.field, "message": self.message}}


@dataclass
class ResourceError(TsDiffuseError):
    resource: str
    params: str

    _type = "resource_error"
    _exit_code = EXIT_DATA

    @property
    def detail(self) -> dict:
        return {"type": self._type, "content": {"resource": self.resource, "params": self.params}}


@dataclass
class InvalidInputError(ResourceError):
    """
    An operation was called with arguments violating its preconditions (shapes, ranges).
    """

    _type = "invalid_input"
    _exit_code = EXIT_CONFIG


@dataclass
class DataError(ResourceError):
    """
    Input data could not be turned into sequences.
    """

    _type = "data_error"


@dataclass
class ResourceMissingError(DataError):
    """
    A resource doesn't exist.
    """

    _type = "resource_missing"


@dataclass
class InsufficientDataError(DataError):
    """
    Fewer rows than one window needs.
    """

    _type = "insufficient_data"


@dataclass
class MissingColumnError(DataError):
    column: str = ""

    _type = "missing_column"

    @property
    def detail(self) -> dict:
        return {"type": self._type, "content": {"resource": self.resource, "column": self.column}}


@dataclass
class DataParseError(DataError):
    """
    A selected column holds no numeric value at all.
    """

    row: int = -1
    column: str = ""

    _type = "data_parse"

    @property
    def detail(self) -> dict:
        return {"type": self._type, "content": {"resource": self.resource, "row": self.row, "column": self.column}}


@dataclass
class CheckpointError(DataError):
    """
    A checkpoint container is unreadable or of an unsupported format version.
    """

    _type = "checkpoint_invalid"


@dataclass
class NumericalError(TsDiffuseError):
    message: str

    _type = "numerical_failure"
    _exit_code = EXIT_NUMERICAL

    @property
    def detail(self) -> dict:
        return {"type": self._type, "content": {"message": self.message}}


@dataclass
class TrainingDivergedError(NumericalError):
    step: int = -1
    consecutive: int = 0

    _type = "training_diverged"


@dataclass
class SamplingDivergedError(NumericalError):
    t: int = -1

    _type = "sampling_diverged"
