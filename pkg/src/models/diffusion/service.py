import logging
import math
from collections.abc import Callable

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from torch.utils.data import DataLoader, TensorDataset

from exc.exc import InvalidInputError, NumericalError, SamplingDivergedError, TrainingDivergedError
from models.dataset.model import SequenceBatch
from models.diffusion.model import DiffusionStepSample, TrainConfig, TrainResult
from models.schedule.model import NoiseSchedule
from utils.seeding import derive_seed, seed_everything, torch_generator

__all__ = ["forward_diffuse", "training_loss", "train", "sample", "model_dtype"]

logger = logging.getLogger(__name__)

CheckpointCallback = Callable[[nn.Module, int, list[float]], None]


def model_dtype(model: nn.Module) -> torch.dtype:
    parameter = next(model.parameters(), None)
    return parameter.dtype if parameter is not None else torch.get_default_dtype()


def _model_device(model: nn.Module) -> torch.device:
    parameter = next(model.parameters(), None)
    return parameter.device if parameter is not None else torch.device("cpu")


def _broadcast(values: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    return values.to(dtype=like.dtype, device=like.device).view(-1, *([1] * (like.ndim - 1)))


def forward_diffuse(
    x0: torch.Tensor,
    t: torch.Tensor,
    schedule: NoiseSchedule,
    rng: torch.Generator,
    epsilon: torch.Tensor | None = None,
) -> DiffusionStepSample:
    """Sample q(x_t | x_0) = N(√ᾱ_t·x_0, (1−ᾱ_t)·I) for 1-based steps t [B]."""
    if t.ndim != 1 or t.shape[0] != x0.shape[0]:
        raise InvalidInputError("forward_diffuse", f"t shape {tuple(t.shape)} does not match batch size {x0.shape[0]}")
    if t.numel() and (int(t.min()) < 1 or int(t.max()) > schedule.num_steps):
        raise InvalidInputError("forward_diffuse", f"t must lie in 1..{schedule.num_steps}")
    if not torch.isfinite(x0).all():
        raise InvalidInputError("forward_diffuse", "x0 must be finite")
    if epsilon is None:
        epsilon = torch.randn(x0.shape, generator=rng, dtype=x0.dtype, device=rng.device).to(x0.device)
    alpha_bar = _broadcast(schedule.at(schedule.alpha_bars, t), x0)
    x_t = alpha_bar.sqrt() * x0 + (1 - alpha_bar).sqrt() * epsilon
    return DiffusionStepSample(x_t=x_t, t=t, epsilon=epsilon)


def training_loss(
    denoiser: nn.Module, x0: torch.Tensor, schedule: NoiseSchedule, rng: torch.Generator
) -> tuple[torch.Tensor, DiffusionStepSample]:
    """‖ε − ε_θ(x_t, t)‖² averaged over batch, sequence and feature axes, t ~ U{1..T} per element."""
    t = torch.randint(1, schedule.num_steps + 1, (x0.shape[0],), generator=rng, device=rng.device).to(x0.device)
    diffused = forward_diffuse(x0, t, schedule, rng)
    prediction = denoiser(diffused.x_t, diffused.t)
    return F.mse_loss(prediction, diffused.epsilon), diffused


def _as_tensor(data: SequenceBatch | np.ndarray | torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    values = data.values if isinstance(data, SequenceBatch) else data
    return torch.as_tensor(np.asarray(values) if not isinstance(values, torch.Tensor) else values).to(dtype)


def _parameters_finite(model: nn.Module) -> bool:
    return all(torch.isfinite(p).all() for p in model.parameters())


def train(
    denoiser: nn.Module,
    data: SequenceBatch | np.ndarray | torch.Tensor,
    schedule: NoiseSchedule,
    config: TrainConfig,
    seed: int,
    on_checkpoint: CheckpointCallback | None = None,
) -> TrainResult:
    """Adam on the simplified objective for a fixed epoch budget, shuffling without replacement each epoch.

    The loss history holds the mean step loss of every epoch. A non-finite loss skips the step;
    `max_nonfinite_steps` of them in a row abort training.
    """
    values = _as_tensor(data, model_dtype(denoiser))
    if values.shape[0] == 0:
        raise InvalidInputError("train", "training data is empty")
    result = TrainResult(model=denoiser)
    if config.epochs == 0 or config.max_steps == 0:
        return result

    seed_everything(derive_seed(seed, "train", "global"))
    loader = DataLoader(
        TensorDataset(values),
        batch_size=config.batch_size,
        shuffle=True,
        generator=torch_generator(derive_seed(seed, "train", "shuffle")),
        num_workers=config.num_workers,
    )
    noise_rng = torch_generator(derive_seed(seed, "train", "noise"))
    optimizer = torch.optim.Adam(denoiser.parameters(), lr=config.learning_rate, betas=tuple(config.adam_betas))
    device = _model_device(denoiser)
    nonfinite = 0

    denoiser.train()
    for epoch in range(1, config.epochs + 1):
        epoch_losses = []
        for (batch,) in loader:
            loss, _ = training_loss(denoiser, batch.to(device), schedule, noise_rng)
            optimizer.zero_grad(set_to_none=True)
            value = loss.item()
            result.steps += 1
            if not math.isfinite(value):
                nonfinite += 1
                logger.warning("Non-finite loss at step %d (%d in a row)", result.steps, nonfinite)
                if nonfinite >= config.max_nonfinite_steps:
                    raise TrainingDivergedError(
                        f"loss non-finite for {nonfinite} consecutive steps", step=result.steps, consecutive=nonfinite
                    )
            else:
                nonfinite = 0
                loss.backward()
                if config.grad_clip is not None:
                    nn.utils.clip_grad_norm_(denoiser.parameters(), config.grad_clip)
                optimizer.step()
                if not _parameters_finite(denoiser):
                    raise NumericalError(f"parameters became non-finite at step {result.steps}")
                result.step_losses.append(value)
                epoch_losses.append(value)
            # skipped steps count against the cap
            if config.max_steps is not None and result.steps >= config.max_steps:
                break

        if epoch_losses:
            result.loss_history.append(float(np.mean(epoch_losses)))
            logger.info("epoch %d/%d loss %.6f (%d steps)", epoch, config.epochs, result.loss_history[-1], result.steps)
        if on_checkpoint and config.checkpoint_interval and epoch % config.checkpoint_interval == 0:
            on_checkpoint(denoiser, epoch, result.loss_history)
        if config.max_steps is not None and result.steps >= config.max_steps:
            break

    denoiser.eval()
    return result


@torch.no_grad()
def sample(
    denoiser: nn.Module,
    schedule: NoiseSchedule,
    count: int,
    rng: torch.Generator,
    shape: tuple[int, int] | None = None,
    batch_size: int | None = None,
) -> SequenceBatch:
    """Ancestral sampling in scaled space: x_T ~ N(0, I), then for t = T..1

        x_{t−1} = (1/√α_t)·(x_t − β_t/√(1−ᾱ_t)·ε_θ(x_t, t)) + σ_t·z,   z ~ N(0, I) for t > 1, z = 0 at t = 1.

    Sequences are denoised in chunks of `batch_size`; each chunk draws its x_T before its per-step noise.
    """
    if count < 1:
        raise InvalidInputError("sample", f"count must be >= 1, got {count}")
    config = getattr(denoiser, "config", None)
    if shape is None:
        if config is None:
            raise InvalidInputError("sample", "shape is required for a denoiser without a config")
        shape = (config.seq_len, config.feature_dim)
    if config is not None and config.max_diffusion_steps < schedule.num_steps:
        raise InvalidInputError(
            "sample", f"denoiser supports {config.max_diffusion_steps} steps, schedule has {schedule.num_steps}"
        )

    dtype, device = model_dtype(denoiser), _model_device(denoiser)
    batch_size = batch_size or count
    betas, alphas, alpha_bars, sigmas = (
        table.tolist() for table in (schedule.betas, schedule.alphas, schedule.alpha_bars, schedule.posterior_sigmas)
    )

    denoiser.eval()
    chunks = []
    for start in range(0, count, batch_size):
        size = min(batch_size, count - start)
        x = torch.randn((size, *shape), generator=rng, dtype=dtype, device=rng.device).to(device)
        for t in range(schedule.num_steps, 0, -1):
            i = t - 1
            steps = torch.full((size,), t, dtype=torch.long, device=device)
            eps = denoiser(x, steps)
            x = (1.0 / math.sqrt(alphas[i])) * (x - (betas[i] / math.sqrt(1.0 - alpha_bars[i])) * eps)
            if t > 1:
                z = torch.randn(x.shape, generator=rng, dtype=dtype, device=rng.device).to(device)
                x = x + sigmas[i] * z
            if not torch.isfinite(x).all():
                raise SamplingDivergedError(f"non-finite values at reverse step t={t}", t=t)
            if t % max(1, schedule.num_steps // 10) == 0:
                logger.debug("sampling chunk %d: t=%d", start // batch_size, t)
        chunks.append(x.detach().cpu().to(torch.float64).numpy())
    logger.info("Sampled %d sequences of shape %s", count, shape)
    return SequenceBatch(np.concatenate(chunks, axis=0))
