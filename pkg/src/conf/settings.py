import os
from pathlib import Path

from dotenv import dotenv_values, load_dotenv

load_dotenv()
env = dotenv_values()

OUTPUT_ROOT_VAR = "TSDIFFUSE_OUTPUT_ROOT"
LOG_LEVEL_VAR = "TSDIFFUSE_LOG_LEVEL"


def _get(name: str, default: str) -> str:
    # process environment wins over the .env file
    return os.environ.get(name) or env.get(name) or default


def output_root() -> Path:
    return Path(_get(OUTPUT_ROOT_VAR, "runs"))


def log_level() -> str:
    return _get(LOG_LEVEL_VAR, "INFO").upper()
