from dataclasses import dataclass
from typing import Any

import numpy as np
from pydantic import Field, field_validator, model_validator

from conf.conf_types import MetricName
from conf.model import AppModel
from exc.exc import InvalidInputError
from models.dataset.model import ScalerState, SequenceBatch
from models.dataset.service import fit_scaler, scale_array

__all__ = ["MetricConfig", "MetricReport", "EvalPair", "DEFAULT_ALPHA_GRID"]

DEFAULT_ALPHA_GRID = [round(0.05 * i, 2) for i in range(1, 20)]
STATS_TOLERANCE = 1e-12


class MetricConfig(AppModel):
    metrics: list[MetricName] = Field(default_factory=lambda: list(MetricName))
    repetitions: int = Field(10, ge=1, description="Independent runs per stochastic metric")
    hidden_dim: int = Field(64, ge=1, description="Width of the LDS classifier and LPS predictor")
    num_layers: int = Field(2, ge=1)
    num_heads: int = Field(2, ge=1)
    epochs: int = Field(50, ge=1)
    batch_size: int = Field(128, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    train_fraction: float = Field(0.8, gt=0, lt=1)
    max_imbalance: float = Field(0.1, ge=0, lt=1, description="Largest tolerated class imbalance after splitting")
    min_sequences: int = Field(32, ge=2, description="Minimum sequences per side for LDS")
    horizons: list[int] = Field(default_factory=lambda: [1, 5])
    jsd_bins: int = Field(50, ge=2)
    k: int = Field(5, ge=1, description="Neighbour rank defining coverage radii")
    alpha_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_ALPHA_GRID), min_length=1)

    @field_validator("alpha_grid")
    @classmethod
    def grid_inside_unit_interval(cls, grid: list[float]) -> list[float]:
        if any(not 0 < a < 1 for a in grid):
            raise ValueError("alpha_grid values must lie in (0, 1)")
        return grid

    @field_validator("horizons")
    @classmethod
    def known_horizons(cls, horizons: list[int]) -> list[int]:
        if any(h not in (1, 5) for h in horizons):
            raise ValueError("horizons must be 1 (LPS) and/or 5 (+5 steps)")
        return horizons

    @model_validator(mode="after")
    def heads_divide_hidden(self) -> "MetricConfig":
        if self.hidden_dim % self.num_heads:
            raise ValueError(f"hidden_dim={self.hidden_dim} is not divisible by num_heads={self.num_heads}")
        return self


class MetricReport(AppModel):
    metric: MetricName
    runs: list[float] = Field(min_length=1)
    mean: float
    std: float
    run_count: int
    seed: int
    config_digest: str
    auxiliary: dict[str, Any] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def stats_match_runs(self) -> "MetricReport":
        runs = np.asarray(self.runs, dtype=np.float64)
        if self.run_count != len(runs):
            raise ValueError(f"run_count={self.run_count} but {len(runs)} runs recorded")
        if abs(float(runs.mean()) - self.mean) > STATS_TOLERANCE or abs(float(runs.std()) - self.std) > STATS_TOLERANCE:
            raise ValueError("mean/std do not match the recorded runs")
        return self

    @classmethod
    def from_runs(cls, metric: MetricName, runs: list[float], seed: int, config_digest: str, **kwargs: Any) -> "MetricReport":
        values = np.asarray(runs, dtype=np.float64)
        return cls(
            metric=metric,
            runs=[float(v) for v in values],
            mean=float(values.mean()),
            std=float(values.std()),
            run_count=len(values),
            seed=seed,
            config_digest=config_digest,
            **kwargs,
        )


@dataclass
class EvalPair:
    """Held-out real and synthetic sequences in original units; metrics read them through `scaler`."""

    real: SequenceBatch
    synthetic: SequenceBatch
    scaler: ScalerState | None = None

    def __post_init__(self):
        if len(self.real) == 0 or len(self.synthetic) == 0:
            raise InvalidInputError("eval_pair", "real and synthetic sets must be non-empty")
        if self.real.values.shape[1:] != self.synthetic.values.shape[1:]:
            raise InvalidInputError(
                "eval_pair", f"shape mismatch: real {self.real.values.shape[1:]} vs synthetic {self.synthetic.values.shape[1:]}"
            )
        if self.scaler is None:
            self.scaler = fit_scaler(self.real.values)

    def scaled(self) -> tuple[np.ndarray, np.ndarray]:
        return scale_array(self.real.values, self.scaler), scale_array(self.synthetic.values, self.scaler)
