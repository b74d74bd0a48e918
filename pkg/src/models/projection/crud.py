import json
import logging
from pathlib import Path

import pandas as pd

from conf.conf_types import ProjectionLabel, ProjectionMethod
from exc.decorators import catch_exception
from exc.exc import ResourceMissingError
from models.projection.model import EmbeddingProjection, ProjectionMetadata
from storage.repository_interface import ArtifactRepository

__all__ = ["ProjectionRepository"]

logger = logging.getLogger(__name__)


class ProjectionRepository(ArtifactRepository[EmbeddingProjection]):
    """CSV (x, y, label) plus a JSON metadata sidecar; plotting is left to external tools."""

    suffix = ".csv"

    def __init__(self, root: str | Path = "."):
        super().__init__(resource="projection", root=root)

    def sidecar_for(self, name: str | Path) -> Path:
        return self.path_for(name).with_suffix(".json")

    @catch_exception(resource="projection")
    def save(self, name: str | Path, artifact: EmbeddingProjection, seed: int | None = None) -> Path:
        path = self._prepare(name)
        frame = pd.DataFrame(
            {"x": artifact.coords[:, 0], "y": artifact.coords[:, 1], "label": [str(label) for label in artifact.labels]}
        )
        frame.to_csv(path, index=False, float_format="%.17g")
        metadata = ProjectionMetadata(
            method=artifact.method,
            count=len(artifact.labels),
            real_count=sum(label == ProjectionLabel.REAL for label in artifact.labels),
            synthetic_count=sum(label == ProjectionLabel.SYNTHETIC for label in artifact.labels),
            seed=seed,
            details=artifact.metadata,
        )
        self.sidecar_for(name).write_text(json.dumps(metadata.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        logger.info("Wrote %s projection of %d points to %s", artifact.method, len(artifact.labels), path)
        return path

    @catch_exception(resource="projection")
    def load(self, name: str | Path) -> EmbeddingProjection:
        path = self.path_for(name)
        if not path.is_file():
            raise ResourceMissingError(self.resource, str(path))
        frame = pd.read_csv(path)
        metadata = ProjectionMetadata.from_dict(json.loads(self.sidecar_for(name).read_text()))
        return EmbeddingProjection(
            coords=frame[["x", "y"]].to_numpy(),
            labels=[ProjectionLabel(label) for label in frame["label"]],
            method=ProjectionMethod(metadata.method),
            metadata=metadata.details,
        )
