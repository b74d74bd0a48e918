import logging
import math

import numpy as np
import torch
import torch.nn.functional as F
from scipy.spatial.distance import cdist
from scipy.special import rel_entr
from torch import nn
from torch.utils.data import DataLoader, TensorDataset

from conf.conf_types import MetricName
from exc.exc import InvalidInputError
from models.metrics.model import EvalPair, MetricConfig, MetricReport
from models.metrics.networks import HorizonPredictor, SequenceClassifier
from utils.digest import config_digest
from utils.seeding import derive_seed, numpy_rng, torch_generator

__all__ = [
    "PRECISION_RECALL_NOTE",
    "discriminative_score",
    "discriminative_run",
    "lds",
    "prediction_mae",
    "predictive_run",
    "lps",
    "lps_baseline",
    "jensen_shannon",
    "jsd",
    "alpha_precision_curve",
    "coverage_score",
    "precision_recall_coverage",
    "evaluate",
]

logger = logging.getLogger(__name__)

PRECISION_RECALL_NOTE = (
    "alpha-precision / beta-recall are reported as the mean over the alpha grid of the curve values; "
    "absolute values are only approximately comparable with curve summaries computed differently"
)


def discriminative_score(accuracy: float) -> float:
    return abs(0.5 - accuracy)


def _fit(model: nn.Module, inputs: torch.Tensor, targets: torch.Tensor, loss_fn, config: MetricConfig, seed: int) -> None:
    loader = DataLoader(
        TensorDataset(inputs, targets),
        batch_size=config.batch_size,
        shuffle=True,
        generator=torch_generator(derive_seed(seed, "shuffle")),
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    model.train()
    for _ in range(config.epochs):
        for batch_inputs, batch_targets in loader:
            optimizer.zero_grad(set_to_none=True)
            loss_fn(model(batch_inputs), batch_targets).backward()
            optimizer.step()
    model.eval()


def _build(factory, seed: int) -> nn.Module:
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(derive_seed(seed, "init"))
        return factory()


def _f1(predicted: np.ndarray, labels: np.ndarray, positive: int) -> float:
    tp = np.sum((predicted == positive) & (labels == positive))
    fp = np.sum((predicted == positive) & (labels != positive))
    fn = np.sum((predicted != positive) & (labels == positive))
    return float(2 * tp / (2 * tp + fp + fn)) if tp + fp + fn else 0.0


def _check_balance(real_count: int, synthetic_count: int, max_imbalance: float, split: str) -> None:
    imbalance = abs(real_count - synthetic_count) / max(real_count, synthetic_count)
    if imbalance > max_imbalance:
        raise InvalidInputError(
            "lds", f"{split} split imbalance {imbalance:.3f} exceeds {max_imbalance} ({real_count} real / {synthetic_count} synthetic)"
        )


def discriminative_run(real: np.ndarray, synthetic: np.ndarray, config: MetricConfig, seed: int) -> dict[str, float]:
    """Train a post-hoc transformer classifier (real = 1, synthetic = 0) on a stratified split and
    score it on the held-back part."""
    if len(real) < config.min_sequences or len(synthetic) < config.min_sequences:
        raise InvalidInputError("lds", f"need >= {config.min_sequences} sequences per side, got {len(real)} / {len(synthetic)}")
    rng = numpy_rng(derive_seed(seed, "split"))
    real, synthetic = real[rng.permutation(len(real))], synthetic[rng.permutation(len(synthetic))]
    real_cut = int(round(len(real) * config.train_fraction))
    synthetic_cut = int(round(len(synthetic) * config.train_fraction))
    _check_balance(real_cut, synthetic_cut, config.max_imbalance, "train")
    _check_balance(len(real) - real_cut, len(synthetic) - synthetic_cut, config.max_imbalance, "test")

    def stack(r: np.ndarray, s: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
        inputs = torch.as_tensor(np.concatenate([r, s]), dtype=torch.float32)
        labels = torch.cat([torch.ones(len(r), dtype=torch.long), torch.zeros(len(s), dtype=torch.long)])
        return inputs, labels

    train_x, train_y = stack(real[:real_cut], synthetic[:synthetic_cut])
    test_x, test_y = stack(real[real_cut:], synthetic[synthetic_cut:])
    _, seq_len, dims = real.shape
    model = _build(
        lambda: SequenceClassifier(dims, seq_len, config.hidden_dim, config.num_layers, config.num_heads), seed
    )
    _fit(model, train_x, train_y, F.cross_entropy, config, seed)
    with torch.no_grad():
        predicted = model(test_x).argmax(dim=1).numpy()
    labels = test_y.numpy()
    accuracy = float(np.mean(predicted == labels))
    return {
        "score": discriminative_score(accuracy),
        "accuracy": accuracy,
        "f1_real": _f1(predicted, labels, 1),
        "f1_synthetic": _f1(predicted, labels, 0),
    }


def lds(pair: EvalPair, config: MetricConfig, seed: int) -> MetricReport:
    """Long-sequence discriminative score |0.5 − accuracy| over `config.repetitions` runs."""
    real, synthetic = pair.scaled()
    runs = []
    for run in range(config.repetitions):
        runs.append(discriminative_run(real, synthetic, config, derive_seed(seed, "lds", run)))
        logger.info("LDS run %d/%d: %.4f", run + 1, config.repetitions, runs[-1]["score"])
    return MetricReport.from_runs(
        MetricName.LDS,
        [r["score"] for r in runs],
        seed,
        config_digest(config.model_dump(mode="json")),
        auxiliary={key: [r[key] for r in runs] for key in ("accuracy", "f1_real", "f1_synthetic")},
    )


def prediction_mae(predictor: nn.Module, sequences: np.ndarray, horizon: int) -> float:
    """MAE of `predictor` forecasting the last `horizon` steps from the preceding ones."""
    values = torch.as_tensor(sequences, dtype=torch.float32)
    with torch.no_grad():
        predicted = predictor(values[:, :-horizon])
    return float(torch.mean(torch.abs(predicted - values[:, -horizon:])).item())


def predictive_run(train: np.ndarray, test: np.ndarray, horizon: int, config: MetricConfig, seed: int) -> float:
    """Fit a transformer forecaster on `train`, report its MAE on `test` (both in scaled space)."""
    seq_len = train.shape[1]
    if horizon >= seq_len:
        raise InvalidInputError("lps", f"horizon {horizon} must be smaller than the sequence length {seq_len}")
    values = torch.as_tensor(train, dtype=torch.float32)
    dims = train.shape[2]
    model = _build(
        lambda: HorizonPredictor(dims, seq_len - horizon, horizon, config.hidden_dim, config.num_layers, config.num_heads),
        seed,
    )
    _fit(model, values[:, :-horizon], values[:, -horizon:], F.l1_loss, config, seed)
    return prediction_mae(model, test, horizon)


def _predictive_report(
    metric: MetricName, train: np.ndarray, test: np.ndarray, horizon: int, config: MetricConfig, seed: int
) -> MetricReport:
    runs = []
    for run in range(config.repetitions):
        runs.append(predictive_run(train, test, horizon, config, derive_seed(seed, "predictive", horizon, run)))
        logger.info("%s run %d/%d: %.4f", metric, run + 1, config.repetitions, runs[-1])
    return MetricReport.from_runs(
        metric, runs, seed, config_digest(config.model_dump(mode="json")), auxiliary={"horizon": horizon}
    )


def lps(pair: EvalPair, horizon: int, config: MetricConfig, seed: int) -> MetricReport:
    """Train on synthetic, test on real. horizon 1 is LPS, horizon 5 the +5-steps score."""
    if horizon not in (1, 5):
        raise InvalidInputError("lps", f"horizon must be 1 or 5, got {horizon}")
    real, synthetic = pair.scaled()
    metric = MetricName.LPS if horizon == 1 else MetricName.PLUS_FIVE_STEPS
    return _predictive_report(metric, synthetic, real, horizon, config, seed)


def lps_baseline(pair: EvalPair, config: MetricConfig, seed: int, horizon: int = 1) -> MetricReport:
    """Train on real, test on real: the reference an ideal synthetic set would reproduce."""
    real, _ = pair.scaled()
    return _predictive_report(MetricName.LPS_BASELINE, real, real, horizon, config, seed)


def jensen_shannon(p: np.ndarray, q: np.ndarray) -> float:
    """Base-2 Jensen-Shannon divergence of two histograms (normalized here), in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    p, q = p / p.sum(), q / q.sum()
    m = (p + q) / 2
    return float((0.5 * rel_entr(p, m).sum() + 0.5 * rel_entr(q, m).sum()) / math.log(2))


def jsd(pair: EvalPair, bins: int, seed: int = 0) -> MetricReport:
    """Per-feature JSD of pooled value histograms over the combined range, averaged over features."""
    if bins < 2:
        raise InvalidInputError("jsd", f"bins must be >= 2, got {bins}")
    real, synthetic = pair.scaled()
    per_feature = []
    for feature in range(real.shape[2]):
        r, s = real[..., feature].ravel(), synthetic[..., feature].ravel()
        lo, hi = min(r.min(), s.min()), max(r.max(), s.max())
        p, _ = np.histogram(r, bins=bins, range=(lo, hi))
        q, _ = np.histogram(s, bins=bins, range=(lo, hi))
        per_feature.append(jensen_shannon(p, q))
    return MetricReport.from_runs(
        MetricName.JSD,
        [float(np.mean(per_feature))],
        seed,
        config_digest({"bins": bins}),
        auxiliary={"per_feature": per_feature, "bins": bins},
    )


def alpha_precision_curve(support: np.ndarray, probe: np.ndarray, alpha_grid: list[float]) -> np.ndarray:
    """For each α, the fraction of `probe` inside the α-support ball of `support`: centred on the
    support mean, radius the α-quantile (upper order statistic) of support distances to the centre."""
    center = support.mean(axis=0, keepdims=True)
    support_radii = cdist(support, center).ravel()
    probe_radii = cdist(probe, center).ravel()
    radii = np.quantile(support_radii, alpha_grid, method="higher")
    return np.array([np.mean(probe_radii <= r) for r in radii])


def coverage_score(real: np.ndarray, synthetic: np.ndarray, k: int) -> float:
    """Fraction of real points whose k-th-nearest-real-neighbour ball holds at least one synthetic point."""
    if not 1 <= k < len(real):
        raise InvalidInputError("coverage", f"k must satisfy 1 <= k < {len(real)}, got {k}")
    real_distances = cdist(real, real)
    radii = np.sort(real_distances, axis=1)[:, k]
    nearest_synthetic = cdist(real, synthetic).min(axis=1)
    return float(np.mean(nearest_synthetic <= radii))


def precision_recall_coverage(
    pair: EvalPair, k: int, alpha_grid: list[float], seed: int = 0
) -> tuple[MetricReport, MetricReport, MetricReport]:
    """α-precision, β-recall and coverage on flattened scaled sequences."""
    real, synthetic = (values.reshape(len(values), -1) for values in pair.scaled())
    if not 1 <= k < len(real):
        raise InvalidInputError("coverage", f"k must satisfy 1 <= k < {len(real)}, got {k}")
    if any(not 0 < a < 1 for a in alpha_grid):
        raise InvalidInputError("precision_recall", "alpha_grid values must lie in (0, 1)")
    digest = config_digest({"k": k, "alpha_grid": list(alpha_grid)})
    precision = alpha_precision_curve(real, synthetic, alpha_grid)
    recall = alpha_precision_curve(synthetic, real, alpha_grid)
    return (
        MetricReport.from_runs(
            MetricName.ALPHA_PRECISION, [float(precision.mean())], seed, digest,
            auxiliary={"curve": precision.tolist(), "alpha_grid": list(alpha_grid)}, notes=[PRECISION_RECALL_NOTE],
        ),
        MetricReport.from_runs(
            MetricName.BETA_RECALL, [float(recall.mean())], seed, digest,
            auxiliary={"curve": recall.tolist(), "beta_grid": list(alpha_grid)}, notes=[PRECISION_RECALL_NOTE],
        ),
        MetricReport.from_runs(MetricName.COVERAGE, [coverage_score(real, synthetic, k)], seed, digest, auxiliary={"k": k}),
    )


def evaluate(pair: EvalPair, config: MetricConfig, seed: int) -> dict[MetricName, MetricReport]:
    """Run every metric named in `config.metrics`; returns reports keyed by metric."""
    wanted = set(config.metrics)
    reports: dict[MetricName, MetricReport] = {}
    if MetricName.LDS in wanted:
        reports[MetricName.LDS] = lds(pair, config, seed)
    if MetricName.LPS in wanted and 1 in config.horizons:
        reports[MetricName.LPS] = lps(pair, 1, config, seed)
    if MetricName.PLUS_FIVE_STEPS in wanted and 5 in config.horizons and pair.real.seq_len > 5:
        reports[MetricName.PLUS_FIVE_STEPS] = lps(pair, 5, config, seed)
    if MetricName.LPS_BASELINE in wanted:
        reports[MetricName.LPS_BASELINE] = lps_baseline(pair, config, seed)
    if MetricName.JSD in wanted:
        reports[MetricName.JSD] = jsd(pair, config.jsd_bins, seed)
    if wanted & {MetricName.ALPHA_PRECISION, MetricName.BETA_RECALL, MetricName.COVERAGE}:
        for report in precision_recall_coverage(pair, config.k, config.alpha_grid, seed):
            if report.metric in wanted:
                reports[report.metric] = report
    return reports
