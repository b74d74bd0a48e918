import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from exc.decorators import catch_exception
from exc.exc import DataError, MissingColumnError, ResourceMissingError
from models.dataset.model import SEQUENCE_ID, STEP_INDEX, SequenceBatch, SequenceMetadata
from storage.repository_interface import ArtifactRepository

__all__ = ["read_table", "feature_column", "SequenceCsvRepository"]

logger = logging.getLogger(__name__)


@catch_exception(resource="csv")
def read_table(path: str | Path, separator: str = ",", decimal: str = ".") -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise ResourceMissingError("csv", str(path))
    return pd.read_csv(path, sep=separator, decimal=decimal, skipinitialspace=True)


def feature_column(index: int) -> str:
    return f"feature_{index}"


class SequenceCsvRepository(ArtifactRepository[SequenceBatch]):
    """Sequences as long-format CSV (sequence_id, step_index, feature_0..feature_{D-1}) plus a JSON sidecar."""

    suffix = ".csv"

    def __init__(self, root: str | Path = "."):
        super().__init__(resource="sequences", root=root)

    def sidecar_for(self, name: str | Path) -> Path:
        return self.path_for(name).with_suffix(".json")

    @catch_exception(resource="sequences")
    def save(self, name: str | Path, artifact: SequenceBatch, metadata: SequenceMetadata | None = None) -> Path:
        path = self._prepare(name)
        count, seq_len, dims = artifact.values.shape
        frame = pd.DataFrame(artifact.values.reshape(count * seq_len, dims), columns=[feature_column(i) for i in range(dims)])
        frame.insert(0, STEP_INDEX, np.tile(np.arange(seq_len), count))
        frame.insert(0, SEQUENCE_ID, np.repeat(np.arange(count), seq_len))
        frame.to_csv(path, index=False, float_format="%.17g")
        metadata = metadata or SequenceMetadata(count=count, seq_len=seq_len, feature_dim=dims)
        metadata = metadata.model_copy(
            update={"count": count, "seq_len": seq_len, "feature_dim": dims, "feature_names": artifact.feature_names}
        )
        self.sidecar_for(name).write_text(json.dumps(metadata.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        logger.info("Wrote %d sequences to %s", count, path)
        return path

    @catch_exception(resource="sequences")
    def load(self, name: str | Path) -> SequenceBatch:
        path = self.path_for(name)
        if not path.is_file():
            raise ResourceMissingError(self.resource, str(path))
        frame = pd.read_csv(path)
        for column in (SEQUENCE_ID, STEP_INDEX):
            if column not in frame.columns:
                raise MissingColumnError(self.resource, str(path), column=column)
        features = sorted(
            (c for c in frame.columns if c.startswith("feature_")), key=lambda c: int(c.removeprefix("feature_"))
        )
        if not features:
            raise MissingColumnError(self.resource, str(path), column=feature_column(0))
        missing = [feature_column(i) for i in range(len(features)) if feature_column(i) not in features]
        if missing:
            raise MissingColumnError(self.resource, str(path), column=missing[0])

        frame = frame.sort_values([SEQUENCE_ID, STEP_INDEX], kind="stable")
        lengths = frame.groupby(SEQUENCE_ID, sort=True).size()
        if lengths.nunique() != 1:
            raise DataError(self.resource, f"{path}: sequences have differing lengths {sorted(set(lengths))}")
        values = frame[features].to_numpy(dtype=np.float64).reshape(len(lengths), int(lengths.iloc[0]), len(features))

        metadata = self.load_metadata(name)
        return SequenceBatch(
            values,
            scaler=None,
            feature_names=metadata.feature_names if metadata else None,
        )

    def load_metadata(self, name: str | Path) -> SequenceMetadata | None:
        sidecar = self.sidecar_for(name)
        if not sidecar.is_file():
            return None
        return SequenceMetadata.from_dict(json.loads(sidecar.read_text()))
