from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import Field

from conf.conf_types import ProjectionLabel, ProjectionMethod
from conf.model import AppModel
from exc.exc import InvalidInputError

__all__ = ["ProjectionConfig", "EmbeddingProjection", "ProjectionMetadata"]


class ProjectionConfig(AppModel):
    method: ProjectionMethod = ProjectionMethod.PCA
    perplexity: float = Field(30.0, gt=0)
    iterations: int = Field(1000, ge=250)
    learning_rate: float | None = Field(None, gt=0, description="Defaults to n / 12")
    max_points: int = Field(1000, ge=2, description="Sequences taken from each side")


@dataclass
class EmbeddingProjection:
    """2-D coordinates of the pooled real + synthetic set in one shared embedding space."""

    coords: np.ndarray
    labels: list[ProjectionLabel]
    method: ProjectionMethod
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 2 or self.coords.shape[1] != 2:
            raise InvalidInputError("projection", f"coords must be [n, 2], got {self.coords.shape}")
        if len(self.labels) != len(self.coords):
            raise InvalidInputError("projection", f"{len(self.labels)} labels for {len(self.coords)} points")
        if not np.isfinite(self.coords).all():
            raise InvalidInputError("projection", "coords must be finite")


class ProjectionMetadata(AppModel):
    method: ProjectionMethod
    count: int
    real_count: int
    synthetic_count: int
    seed: int | None = None
    details: dict[str, Any] = Field(default_factory=dict)
