import json
import logging
from dataclasses import dataclass
from pathlib import Path

from torch import nn

from conf import settings
from conf.conf_types import Backbone
from exc.exc import CheckpointError, ConfigError, InvalidInputError
from models.dataset.crud import SequenceCsvRepository
from models.dataset.model import ScalerState, SequenceBatch, SequenceMetadata
from models.dataset.service import LoadedCorpus, build_dataset, inverse_scale
from models.denoiser.model import DenoiserConfig
from models.denoiser.network import DenoiserModel
from models.denoiser.service import init_denoiser
from models.diffusion.crud import CheckpointRepository, LossLogRepository
from models.diffusion.model import Checkpoint, TrainResult
from models.diffusion.service import sample, train
from models.metrics.crud import MetricReportRepository, SummaryTableRepository
from models.metrics.model import EvalPair, MetricConfig, MetricReport
from models.metrics.service import evaluate
from models.metrics.table import render_table
from models.projection.crud import ProjectionRepository
from models.projection.model import EmbeddingProjection, ProjectionConfig
from models.projection.service import project
from models.run.model import RunConfig
from models.schedule.model import NoiseSchedule, ScheduleConfig
from models.schedule.service import schedule_from_config
from utils.date_utils import run_stamp
from utils.digest import state_dict_digest
from utils.seeding import configure_threads, derive_seed, numpy_rng, torch_generator

__all__ = ["RunService", "TrainOutcome", "LoadedModel", "create_run_dir", "eval_pair_from"]

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
ARGUMENTS_FILE = "arguments.json"
CHECKPOINT = "checkpoint"
LOSS_LOG = "loss"
HELDOUT = "heldout"
TRAIN_SET = "train"
SAMPLES = "samples"
METRICS = "metrics"
SUMMARY = "summary"
EMBEDDING = "embedding"


def create_run_dir(kind: str, root: str | Path | None = None) -> Path:
    """`<root>/<kind>-<UTC stamp>`, with a numeric suffix when two runs share a second."""
    root = Path(root) if root is not None else settings.output_root()
    base = root / f"{kind}-{run_stamp()}"
    path, suffix = base, 1
    while path.exists():
        path = base.with_name(f"{base.name}-{suffix}")
        suffix += 1
    path.mkdir(parents=True)
    logger.info("Run directory %s", path)
    return path


def eval_pair_from(real: SequenceBatch, synthetic: SequenceBatch, scaler: ScalerState | None = None) -> EvalPair:
    """Truncate both sets to the smaller count so the discriminative split stays balanced."""
    count = min(len(real), len(synthetic))
    if len(real) != len(synthetic):
        logger.info("Truncating real %d / synthetic %d sequences to %d", len(real), len(synthetic), count)
    return EvalPair(real=real.take(count), synthetic=synthetic.take(count), scaler=scaler)


@dataclass
class TrainOutcome:
    model: DenoiserModel
    corpus: LoadedCorpus
    schedule: NoiseSchedule
    result: TrainResult
    checkpoint_path: Path


@dataclass
class LoadedModel:
    model: DenoiserModel
    schedule: NoiseSchedule
    scaler: ScalerState | None
    checkpoint: Checkpoint


class RunService:
    """Train / sample / evaluate / project / ablate pipelines writing into one run directory."""

    def __init__(self, run_dir: str | Path) -> None:
        self.run_dir = Path(run_dir)
        self.checkpoints = CheckpointRepository(self.run_dir)
        self.loss_logs = LossLogRepository(self.run_dir)
        self.sequences = SequenceCsvRepository(self.run_dir)
        self.reports = MetricReportRepository(self.run_dir)
        self.tables = SummaryTableRepository(self.run_dir)
        self.projections = ProjectionRepository(self.run_dir)

    def write_config(self, config: RunConfig) -> Path:
        path = self.run_dir / CONFIG_FILE
        path.write_text(config.model_dump_json(indent=2) + "\n")
        return path

    def write_arguments(self, arguments: dict) -> Path:
        """Echo of the command-line arguments for commands that take no config file."""
        path = self.run_dir / ARGUMENTS_FILE
        path.write_text(json.dumps(arguments, indent=2, sort_keys=True, default=str) + "\n")
        return path

    def _checkpoint(self, model: nn.Module, config: RunConfig, schedule: NoiseSchedule, scaler: ScalerState, epoch: int,
                    loss_history: list[float]) -> Checkpoint:
        return Checkpoint(
            config=config.model_dump(mode="json"),
            denoiser=model.config.model_dump(mode="json"),
            schedule=schedule.to_config().model_dump(mode="json"),
            state_dict=model.state_dict(),
            epoch=epoch,
            root_seed=config.seed,
            scaler=scaler.model_dump(mode="json"),
            loss_history=list(loss_history),
        )

    def train(self, config: RunConfig, prefix: str = "") -> TrainOutcome:
        """Build the corpus, initialise and train the denoiser; store checkpoints, loss log and both splits."""
        configure_threads(config.parallelism)
        corpus = build_dataset(config.dataset, numpy_rng(derive_seed(config.seed, "dataset")))
        schedule = schedule_from_config(config.schedule)
        model = init_denoiser(config.denoiser, derive_seed(config.seed, "init", config.denoiser.backbone))

        def on_checkpoint(module: nn.Module, epoch: int, history: list[float]) -> None:
            self.checkpoints.save(
                f"{prefix}{CHECKPOINT}_epoch_{epoch:05d}", self._checkpoint(module, config, schedule, corpus.scaler, epoch, history)
            )

        result = train(model, corpus.train, schedule, config.train, config.seed, on_checkpoint=on_checkpoint)
        checkpoint = self._checkpoint(model, config, schedule, corpus.scaler, len(result.loss_history), result.loss_history)
        path = self.checkpoints.save(f"{prefix}{CHECKPOINT}", checkpoint)
        self.loss_logs.save(f"{prefix}{LOSS_LOG}", result.loss_history)
        for name, split in ((TRAIN_SET, corpus.train), (HELDOUT, corpus.heldout)):
            self.sequences.save(
                f"{prefix}{name}",
                inverse_scale(split, corpus.scaler),
                SequenceMetadata(
                    count=len(split), seq_len=split.seq_len, feature_dim=split.feature_dim,
                    scaler=corpus.scaler, seed=config.seed, source=name,
                    window=getattr(config.dataset, "window", None),
                ),
            )
        logger.info(
            "Trained %s for %d steps, final loss %s, model digest %s",
            config.denoiser.backbone, result.steps,
            f"{result.loss_history[-1]:.6f}" if result.loss_history else "n/a",
            state_dict_digest(model.state_dict())[:16],
        )
        return TrainOutcome(model=model, corpus=corpus, schedule=schedule, result=result, checkpoint_path=path)

    @staticmethod
    def load_model(checkpoint_path: str | Path) -> LoadedModel:
        checkpoint = CheckpointRepository().load_or_fail(checkpoint_path)
        try:
            denoiser = DenoiserConfig.from_dict(checkpoint.denoiser)
            schedule = schedule_from_config(ScheduleConfig.from_dict(checkpoint.schedule))
            scaler = ScalerState.from_dict(checkpoint.scaler) if checkpoint.scaler else None
        except ConfigError as error:
            raise CheckpointError("checkpoint", f"{checkpoint_path}: {error.message}") from error
        model = init_denoiser(denoiser, seed=0)
        try:
            model.load_state_dict(checkpoint.state_dict)
        except RuntimeError as error:
            raise CheckpointError("checkpoint", f"{checkpoint_path}: state dict does not fit the denoiser ({error})") from error
        model.eval()
        return LoadedModel(model=model, schedule=schedule, scaler=scaler, checkpoint=checkpoint)

    def sample(
        self,
        checkpoint_path: str | Path,
        count: int,
        seed: int,
        seq_len: int | None = None,
        batch_size: int | None = None,
        name: str = SAMPLES,
    ) -> SequenceBatch:
        """Draw `count` sequences from a stored model and write them in original units."""
        loaded = self.load_model(checkpoint_path)
        if seq_len is not None and seq_len != loaded.model.config.seq_len:
            raise ConfigError(
                field="seq_len", message=f"model was trained on N={loaded.model.config.seq_len}, requested N={seq_len}"
            )
        return self._sample(loaded.model, loaded.schedule, loaded.scaler, count, seed, batch_size, name)

    def _sample(
        self,
        model: DenoiserModel,
        schedule: NoiseSchedule,
        scaler: ScalerState | None,
        count: int,
        seed: int,
        batch_size: int | None,
        name: str,
    ) -> SequenceBatch:
        batch = sample(model, schedule, count, torch_generator(derive_seed(seed, "sample")), batch_size=batch_size)
        if scaler is not None:
            batch = inverse_scale(batch, scaler)
        self.sequences.save(name, batch, SequenceMetadata(count=len(batch), seq_len=batch.seq_len,
                                                         feature_dim=batch.feature_dim, scaler=scaler, seed=seed,
                                                         source="synthetic"))
        return batch

    def load_pair(self, real_path: str | Path, synthetic_path: str | Path) -> EvalPair:
        """Real and synthetic CSVs as an EvalPair, scaled with the real set's recorded scaler when present."""
        reader = SequenceCsvRepository()
        real = reader.load_or_fail(real_path)
        synthetic = reader.load_or_fail(synthetic_path)
        if real.values.shape[1:] != synthetic.values.shape[1:]:
            raise InvalidInputError(
                "evaluate", f"real {real.values.shape[1:]} and synthetic {synthetic.values.shape[1:]} shapes differ"
            )
        metadata = reader.load_metadata(real_path)
        return eval_pair_from(real, synthetic, metadata.scaler if metadata else None)

    def evaluate(self, pair: EvalPair, config: MetricConfig, seed: int, model: str = "model",
                 dataset: str = "") -> dict:
        reports = evaluate(pair, config, seed)
        self.reports.save(METRICS, list(reports.values()))
        self.tables.save(SUMMARY, render_table({model: reports}, dataset=dataset))
        return reports

    def project(self, pair: EvalPair, config: ProjectionConfig, seed: int) -> EmbeddingProjection:
        real, synthetic = (SequenceBatch(values) for values in pair.scaled())
        projection = project(real, synthetic, config, numpy_rng(derive_seed(seed, "projection", config.method)))
        self.projections.save(f"{EMBEDDING}_{config.method}", projection, seed=seed)
        return projection

    def ablate(self, config: RunConfig, backbones: tuple[Backbone, ...] = (Backbone.TRANSFORMER, Backbone.GRU)
               ) -> dict[str, dict[str, MetricReport]]:
        """Train, sample and evaluate each backbone under the same dataset, schedule, budget and seed."""
        rows = {}
        for backbone in backbones:
            variant = config.model_copy(update={"denoiser": config.denoiser.model_copy(update={"backbone": backbone})})
            prefix = f"{backbone}_"
            outcome = self.train(variant, prefix=prefix)
            real = inverse_scale(outcome.corpus.heldout, outcome.corpus.scaler)
            synthetic = self._sample(
                outcome.model, outcome.schedule, outcome.corpus.scaler, variant.sample_count or len(real),
                variant.seed, variant.train.sample_batch_size, f"{prefix}{SAMPLES}",
            )
            reports = evaluate(eval_pair_from(real, synthetic, outcome.corpus.scaler), variant.metrics, variant.seed)
            self.reports.save(f"{prefix}{METRICS}", list(reports.values()))
            rows[str(backbone)] = reports
        self.tables.save(SUMMARY, render_table(rows, dataset=_dataset_label(config)))
        return rows


def _dataset_label(config: RunConfig) -> str:
    dataset = config.dataset
    return str(getattr(dataset, "preset", None) or dataset.kind)
