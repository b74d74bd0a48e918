import dataclasses
import logging
from pathlib import Path

import pandas as pd
import torch

from exc.decorators import catch_exception
from exc.exc import CheckpointError, ResourceMissingError
from models.diffusion.model import CHECKPOINT_FORMAT_VERSION, Checkpoint
from storage.repository_interface import ArtifactRepository

__all__ = ["CheckpointRepository", "LossLogRepository"]

logger = logging.getLogger(__name__)


class CheckpointRepository(ArtifactRepository[Checkpoint]):
    """`torch.save` of the Checkpoint fields as a plain dict; tensors round-trip bit-exactly."""

    suffix = ".pt"

    def __init__(self, root: str | Path = "."):
        super().__init__(resource="checkpoint", root=root)

    @catch_exception(resource="checkpoint")
    def save(self, name: str | Path, artifact: Checkpoint) -> Path:
        path = self._prepare(name)
        payload = dataclasses.asdict(artifact)
        payload["state_dict"] = {k: v.detach().cpu().clone() for k, v in artifact.state_dict.items()}
        torch.save(payload, path)
        logger.info("Saved checkpoint (epoch %d) to %s", artifact.epoch, path)
        return path

    @catch_exception(resource="checkpoint")
    def load(self, name: str | Path) -> Checkpoint:
        path = self.path_for(name)
        if not path.is_file():
            raise ResourceMissingError(self.resource, str(path))
        payload = torch.load(path, map_location="cpu", weights_only=True)
        version = payload.get("format_version") if isinstance(payload, dict) else None
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(self.resource, f"{path}: unsupported format version {version!r}")
        fields = {f.name for f in dataclasses.fields(Checkpoint)}
        unknown = set(payload) - fields
        if unknown:
            raise CheckpointError(self.resource, f"{path}: unexpected entries {sorted(unknown)}")
        return Checkpoint(**payload)


class LossLogRepository(ArtifactRepository[list[float]]):
    """Per-epoch loss CSV with columns (epoch, loss)."""

    suffix = ".csv"

    def __init__(self, root: str | Path = "."):
        super().__init__(resource="loss_log", root=root)

    @catch_exception(resource="loss_log")
    def save(self, name: str | Path, artifact: list[float]) -> Path:
        path = self._prepare(name)
        pd.DataFrame({"epoch": range(1, len(artifact) + 1), "loss": artifact}).to_csv(path, index=False, float_format="%.17g")
        return path

    @catch_exception(resource="loss_log")
    def load(self, name: str | Path) -> list[float]:
        return pd.read_csv(self.path_for(name))["loss"].astype(float).tolist()
