from pathlib import Path

from pydantic import Field, model_validator

from conf.model import AppModel
from models.dataset.model import CsvDatasetConfig, DatasetConfig, SineDatasetConfig
from models.dataset.presets import PRESETS
from models.denoiser.model import DenoiserConfig
from models.diffusion.model import TrainConfig
from models.metrics.model import MetricConfig
from models.projection.model import ProjectionConfig
from models.schedule.model import ScheduleConfig

__all__ = ["RunConfig", "dataset_shape"]


def dataset_shape(dataset: SineDatasetConfig | CsvDatasetConfig) -> tuple[int, int]:
    """(N, D) the dataset config produces."""
    if isinstance(dataset, SineDatasetConfig):
        return dataset.seq_len, dataset.dims
    columns = dataset.feature_columns or PRESETS[dataset.preset].feature_columns
    return dataset.window.seq_len, len(columns)


class RunConfig(AppModel):
    dataset: DatasetConfig = Field(default_factory=SineDatasetConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    denoiser: DenoiserConfig = Field(default_factory=DenoiserConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    metrics: MetricConfig = Field(default_factory=MetricConfig)
    projection: ProjectionConfig = Field(default_factory=ProjectionConfig)
    seed: int = Field(0, ge=0, description="Root seed every stochastic component derives from")
    output_dir: str | None = Field(None, description="Output root; defaults to $TSDIFFUSE_OUTPUT_ROOT")
    parallelism: int = Field(1, ge=1, description="Intra-op threads; results are reproducible at 1")
    sample_count: int | None = Field(None, ge=1, description="Sequences sampled for evaluation; defaults to the held-out size")

    @model_validator(mode="after")
    def align_denoiser(self) -> "RunConfig":
        """Fill the denoiser's N, D and T from the dataset and schedule unless set explicitly; reject conflicts."""
        seq_len, feature_dim = dataset_shape(self.dataset)
        explicit = self.denoiser.model_fields_set
        updates = {}
        for name, expected in (
            ("seq_len", seq_len),
            ("feature_dim", feature_dim),
            ("max_diffusion_steps", self.schedule.num_steps),
        ):
            value = getattr(self.denoiser, name)
            if name not in explicit:
                updates[name] = expected
            elif name == "max_diffusion_steps" and value < expected:
                raise ValueError(f"denoiser.max_diffusion_steps={value} is below schedule.num_steps={expected}")
            elif name != "max_diffusion_steps" and value != expected:
                raise ValueError(f"denoiser.{name}={value} does not match the dataset ({expected})")
        if updates:
            self.denoiser = self.denoiser.model_copy(update=updates)
        return self

    def output_root(self, default: Path) -> Path:
        return Path(self.output_dir) if self.output_dir else default
