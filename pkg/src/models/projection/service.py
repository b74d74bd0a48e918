import logging

import numpy as np
from scipy.spatial.distance import cdist

from conf.conf_types import ProjectionLabel, ProjectionMethod
from exc.exc import InvalidInputError
from models.dataset.model import SequenceBatch
from models.projection.model import EmbeddingProjection, ProjectionConfig

__all__ = [
    "EXAGGERATION",
    "EXAGGERATION_ITERATIONS",
    "pooled_embeddings",
    "pca_project",
    "conditional_affinities",
    "tsne_project",
    "project",
]

logger = logging.getLogger(__name__)

EXAGGERATION = 12.0
EXAGGERATION_ITERATIONS = 250
KL_WINDOW = 50
KL_TOLERANCE = 1e-3


def pooled_embeddings(real: SequenceBatch, synthetic: SequenceBatch) -> tuple[np.ndarray, list[ProjectionLabel]]:
    if len(real) == 0 or len(synthetic) == 0:
        raise InvalidInputError("projection", "real and synthetic sets must be non-empty")
    if real.values.shape[1:] != synthetic.values.shape[1:]:
        raise InvalidInputError("projection", f"shape mismatch {real.values.shape[1:]} vs {synthetic.values.shape[1:]}")
    points = np.concatenate([real.values.reshape(len(real), -1), synthetic.values.reshape(len(synthetic), -1)])
    labels = [ProjectionLabel.REAL] * len(real) + [ProjectionLabel.SYNTHETIC] * len(synthetic)
    return points, labels


def pca_project(real: SequenceBatch, synthetic: SequenceBatch) -> EmbeddingProjection:
    """Top-2 principal directions of the pooled, mean-centred set (SVD of the centred data).

    Each direction is signed so that its largest-magnitude loading is positive.
    """
    points, labels = pooled_embeddings(real, synthetic)
    if len(points) < 3:
        raise InvalidInputError("pca", f"need at least 3 sequences, got {len(points)}")
    centred = points - points.mean(axis=0)
    _, singular, vt = np.linalg.svd(centred, full_matrices=False)
    variance = singular**2
    total = variance.sum()
    ratios = variance / total if total > 0 else np.zeros_like(variance)

    components = np.zeros((2, points.shape[1]))
    take = min(2, vt.shape[0])
    components[:take] = vt[:take]
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1
    explained = np.zeros(2)
    explained[:take] = ratios[:take]
    return EmbeddingProjection(
        coords=centred @ components.T,
        labels=labels,
        method=ProjectionMethod.PCA,
        metadata={"explained_variance_ratio": explained.tolist(), "components": components.tolist()},
    )


def _entropy_and_row(distances: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    # shift by the minimum so exp never underflows to an all-zero row
    shifted = distances - distances.min()
    weights = np.exp(-shifted * beta)
    total = weights.sum()
    row = weights / total
    entropy = np.log(total) + beta * np.sum(shifted * row)
    return float(entropy), row


def conditional_affinities(
    squared_distances: np.ndarray, perplexity: float, tol: float = 1e-5, max_tries: int = 200
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Gaussian affinities p_{j|i} with each bandwidth binary-searched until the row entropy
    (nats) is within `tol` of log(perplexity). Returns the matrix and the achieved perplexities."""
    n = squared_distances.shape[0]
    target = np.log(perplexity)
    conditional = np.zeros((n, n))
    achieved = np.zeros(n)
    for i in range(n):
        others = np.concatenate([squared_distances[i, :i], squared_distances[i, i + 1:]])
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        entropy, row = _entropy_and_row(others, beta)
        for _ in range(max_tries):
            diff = entropy - target
            if abs(diff) <= tol:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2 if np.isinf(beta_max) else (beta + beta_max) / 2
            else:
                beta_max = beta
                beta = beta / 2 if np.isinf(beta_min) else (beta + beta_min) / 2
            entropy, row = _entropy_and_row(others, beta)
        conditional[i, :i] = row[:i]
        conditional[i, i + 1:] = row[i:]
        achieved[i] = np.exp(entropy)
    return conditional, achieved


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def tsne_project(
    real: SequenceBatch,
    synthetic: SequenceBatch,
    perplexity: float,
    iterations: int,
    rng: np.random.Generator,
    learning_rate: float | None = None,
) -> EmbeddingProjection:
    """Exact t-SNE: symmetrized perplexity-calibrated affinities, Student-t output kernel, gradient
    descent with momentum, per-coordinate gains and early exaggeration."""
    points, labels = pooled_embeddings(real, synthetic)
    n = len(points)
    if not 3 * perplexity < n:
        raise InvalidInputError("tsne", f"perplexity {perplexity} is infeasible for {n} points (need 3·perplexity < n)")
    if iterations < EXAGGERATION_ITERATIONS:
        raise InvalidInputError("tsne", f"iterations must be >= {EXAGGERATION_ITERATIONS}, got {iterations}")
    learning_rate = learning_rate or n / 12.0

    conditional, achieved = conditional_affinities(cdist(points, points, "sqeuclidean"), perplexity)
    p = np.maximum((conditional + conditional.T) / (2 * n), 1e-12)

    y = rng.normal(0.0, 1e-2, size=(n, 2))
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)
    kl_history: list[tuple[int, float]] = []

    for iteration in range(iterations):
        exaggerated = iteration < EXAGGERATION_ITERATIONS
        target = p * EXAGGERATION if exaggerated else p
        kernel = 1.0 / (1.0 + cdist(y, y, "sqeuclidean"))
        np.fill_diagonal(kernel, 0.0)
        q = np.maximum(kernel / kernel.sum(), 1e-12)

        weighted = (target - q) * kernel
        gradient = 4.0 * (np.diag(weighted.sum(axis=1)) - weighted) @ y

        momentum = 0.5 if exaggerated else 0.8
        same_sign = np.sign(gradient) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2).clip(min=0.01)
        velocity = momentum * velocity - learning_rate * gains * gradient
        y = y + velocity
        y = y - y.mean(axis=0)

        if not exaggerated and (iteration % 10 == 0 or iteration == iterations - 1):
            kl_history.append((iteration, _kl(p, q)))
            if iteration % 100 == 0:
                logger.debug("t-SNE iteration %d: KL %.5f", iteration, kl_history[-1][1])

    kernel = 1.0 / (1.0 + cdist(y, y, "sqeuclidean"))
    np.fill_diagonal(kernel, 0.0)
    final_kl = _kl(p, np.maximum(kernel / kernel.sum(), 1e-12))

    flagged = any(
        later - earlier > KL_TOLERANCE
        for (i, earlier) in kl_history
        for (j, later) in kl_history
        if 0 < j - i <= KL_WINDOW
    )
    if flagged:
        logger.warning("t-SNE KL divergence rose by more than %g within a %d-iteration window", KL_TOLERANCE, KL_WINDOW)
    return EmbeddingProjection(
        coords=y,
        labels=labels,
        method=ProjectionMethod.TSNE,
        metadata={
            "perplexity": perplexity,
            "kl_divergence": final_kl,
            "kl_increase_flagged": flagged,
            "iterations": iterations,
            "learning_rate": learning_rate,
            "perplexity_max_relative_error": float(np.max(np.abs(achieved - perplexity) / perplexity)),
        },
    )


def project(
    real: SequenceBatch, synthetic: SequenceBatch, config: ProjectionConfig, rng: np.random.Generator
) -> EmbeddingProjection:
    real, synthetic = real.take(config.max_points), synthetic.take(config.max_points)
    if config.method == ProjectionMethod.PCA:
        return pca_project(real, synthetic)
    return tsne_project(real, synthetic, config.perplexity, config.iterations, rng, config.learning_rate)
