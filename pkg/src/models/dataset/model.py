from dataclasses import dataclass, field
from typing import Annotated, Literal

import numpy as np
from pydantic import Field, model_validator

from conf.conf_types import DatasetKind, DatasetPreset
from conf.model import AppModel
from exc.exc import InvalidInputError

__all__ = [
    "ScalerState",
    "WindowSpec",
    "SequenceBatch",
    "SequenceMetadata",
    "SineDatasetConfig",
    "CsvDatasetConfig",
    "DatasetConfig",
    "SEQUENCE_ID",
    "STEP_INDEX",
]

SEQUENCE_ID = "sequence_id"
STEP_INDEX = "step_index"


class ScalerState(AppModel):
    """Per-feature affine map of [min, max] onto [lo, hi]; constant features map to the midpoint."""

    minimum: list[float]
    maximum: list[float]
    lo: float = -1.0
    hi: float = 1.0

    @model_validator(mode="after")
    def check_bounds(self) -> "ScalerState":
        if len(self.minimum) != len(self.maximum):
            raise ValueError("minimum and maximum must have the same length")
        if any(mx < mn for mn, mx in zip(self.minimum, self.maximum)):
            raise ValueError("maximum must be >= minimum for every feature")
        if not self.hi > self.lo:
            raise ValueError("hi must be greater than lo")
        return self

    @property
    def feature_dim(self) -> int:
        return len(self.minimum)


class WindowSpec(AppModel):
    seq_len: int = Field(100, ge=2, description="Window length N")
    stride: int = Field(1, ge=1, description="Window stride s")
    heldout_fraction: float = Field(0.2, gt=0.0, lt=1.0, description="Contiguous tail kept for evaluation")


@dataclass
class SequenceBatch:
    """Fixed-length multivariate sequences [B, N, D] plus the scaler that produced them, if any."""

    values: np.ndarray
    scaler: ScalerState | None = None
    feature_names: list[str] | None = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise InvalidInputError("sequences", f"expected [B, N, D] values, got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise InvalidInputError("sequences", "values must be finite")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def seq_len(self) -> int:
        return self.values.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.values.shape[2]

    def take(self, count: int) -> "SequenceBatch":
        return SequenceBatch(self.values[:count], self.scaler, self.feature_names)


class SequenceMetadata(AppModel):
    """JSON sidecar written next to every sequence CSV."""

    count: int
    seq_len: int
    feature_dim: int
    feature_names: list[str] | None = None
    scaler: ScalerState | None = None
    window: WindowSpec | None = None
    seed: int | None = None
    source: str | None = None


class SineDatasetConfig(AppModel):
    kind: Literal[DatasetKind.SINE] = DatasetKind.SINE
    num_sequences: int = Field(10000, ge=2)
    seq_len: int = Field(24, ge=2)
    dims: int = Field(5, ge=1)
    heldout_fraction: float = Field(0.2, gt=0.0, lt=1.0)


class CsvDatasetConfig(AppModel):
    kind: Literal[DatasetKind.CSV] = DatasetKind.CSV
    path: str = Field(description="CSV file with a header row, rows in temporal order")
    preset: DatasetPreset | None = Field(None, description="Column list and parsing conventions of a known corpus")
    feature_columns: list[str] | None = Field(None, min_length=1, description="Overrides the preset column list")
    window: WindowSpec = Field(default_factory=WindowSpec)
    separator: str | None = None
    decimal: str | None = None
    missing_values: list[float] | None = Field(None, description="Sentinels treated as missing")

    @model_validator(mode="after")
    def check_columns(self) -> "CsvDatasetConfig":
        if self.preset is None and not self.feature_columns:
            raise ValueError("either feature_columns or preset must be given")
        return self


DatasetConfig = Annotated[SineDatasetConfig | CsvDatasetConfig, Field(discriminator="kind")]
