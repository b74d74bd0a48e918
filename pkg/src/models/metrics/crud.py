import json
import logging
from pathlib import Path

from exc.decorators import catch_exception
from exc.exc import ResourceMissingError
from models.metrics.model import MetricReport
from storage.repository_interface import ArtifactRepository

__all__ = ["MetricReportRepository", "SummaryTableRepository"]

logger = logging.getLogger(__name__)


class MetricReportRepository(ArtifactRepository[list[MetricReport]]):
    """JSON array of reports: {metric, runs, mean, std, run_count, config_digest, seed, auxiliary, notes}."""

    suffix = ".json"

    def __init__(self, root: str | Path = "."):
        super().__init__(resource="metric_report", root=root)

    @catch_exception(resource="metric_report")
    def save(self, name: str | Path, artifact: list[MetricReport]) -> Path:
        path = self._prepare(name)
        payload = [report.model_dump(mode="json") for report in artifact]
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        logger.info("Wrote %d metric reports to %s", len(artifact), path)
        return path

    @catch_exception(resource="metric_report")
    def load(self, name: str | Path) -> list[MetricReport]:
        path = self.path_for(name)
        if not path.is_file():
            raise ResourceMissingError(self.resource, str(path))
        return [MetricReport.from_dict(item) for item in json.loads(path.read_text())]


class SummaryTableRepository(ArtifactRepository[str]):
    suffix = ".txt"

    def __init__(self, root: str | Path = "."):
        super().__init__(resource="summary_table", root=root)

    @catch_exception(resource="summary_table")
    def save(self, name: str | Path, artifact: str) -> Path:
        path = self._prepare(name)
        path.write_text(artifact if artifact.endswith("\n") else artifact + "\n")
        return path

    @catch_exception(resource="summary_table")
    def load(self, name: str | Path) -> str:
        return self.path_for(name).read_text()
