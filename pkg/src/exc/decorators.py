import functools
import json
import logging
from collections.abc import Callable
from typing import TypeVar

import pandas as pd
from typing_extensions import ParamSpec

from exc.exc import DataError, ResourceError, ResourceMissingError, TsDiffuseError

P = ParamSpec("P")
T = TypeVar("T")

logger = logging.getLogger(__name__)

# content that was read but could not be decoded
_DECODE_ERRORS = (UnicodeDecodeError, json.JSONDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError)


def catch_exception(resource: str) -> Callable[[Callable[P, T]], Callable[P, T]]:
    def inner_catch_exception(run_func: Callable[P, T]) -> Callable[P, T]:
        """Decorator for artifact repository methods.

        Project errors pass through untouched. A missing file becomes ResourceMissingError,
        undecodable content a DataError and anything else a ResourceError, all tagged with the
        repository's resource name.
        """

        @functools.wraps(run_func)
        def wrapper(*args, **kwargs):
            try:
                return run_func(*args, **kwargs)
            except TsDiffuseError:
                raise
            except FileNotFoundError as error:
                raise ResourceMissingError(_retrieve_resource(args), str(error.filename or error)) from error
            except _DECODE_ERRORS as error:
                raise DataError(_retrieve_resource(args), str(error)) from error
            except Exception as error:
                _resource = _retrieve_resource(args)
                logger.debug("Wrapping %s raised by %s", type(error).__name__, _resource)
                raise ResourceError(_resource, str(error)) from error

        def _retrieve_resource(args: tuple) -> str:
            return getattr(args[0], "resource", resource) if args else resource

        return wrapper

    return inner_catch_exception
