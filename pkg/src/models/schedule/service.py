import dataclasses
import logging
import math

import torch

from conf.conf_types import SigmaPolicy
from exc.exc import InvalidInputError
from models.schedule.model import NoiseSchedule, ScheduleConfig

__all__ = ["MAX_BETA", "cosine_schedule", "posterior_sigma_policy", "schedule_from_config"]

logger = logging.getLogger(__name__)

MAX_BETA = 0.999


def cosine_schedule(
    num_steps: int, offset: float = 0.008, sigma_policy: SigmaPolicy = SigmaPolicy.BETA
) -> NoiseSchedule:
    """Cosine variance schedule: ᾱ_t = f(t)/f(0), f(t) = cos²(((t/T + s)/(1 + s))·π/2).

    β_t = 1 − ᾱ_t/ᾱ_{t−1} is clipped at MAX_BETA and ᾱ is then rebuilt as the running product of
    α_t = 1 − β_t, so the recurrence holds exactly and ᾱ_T stays positive.
    """
    if num_steps < 1:
        raise InvalidInputError("schedule", f"num_steps must be >= 1, got {num_steps}")
    if not offset > 0:
        raise InvalidInputError("schedule", f"offset must be > 0, got {offset}")

    steps = torch.arange(num_steps + 1, dtype=torch.float64)
    f = torch.cos(((steps / num_steps) + offset) / (1 + offset) * math.pi / 2) ** 2
    closed_form = f / f[0]
    betas = (1 - closed_form[1:] / closed_form[:-1]).clamp(max=MAX_BETA)
    alphas = 1 - betas
    alpha_bars = torch.cumprod(alphas, dim=0)

    schedule = NoiseSchedule(
        num_steps=num_steps,
        betas=betas,
        alphas=alphas,
        alpha_bars=alpha_bars,
        posterior_sigmas=torch.zeros(num_steps, dtype=torch.float64),
        offset=offset,
        sigma_policy=sigma_policy,
    )
    logger.debug("cosine schedule T=%d s=%g max beta %.6f", num_steps, offset, betas.max().item())
    return posterior_sigma_policy(schedule, sigma_policy)


def posterior_sigma_policy(schedule: NoiseSchedule, policy: SigmaPolicy) -> NoiseSchedule:
    """Fill the reverse-step noise scales.

    `beta`: σ_t = √β_t. `beta_tilde`: σ_t = √(β_t·(1−ᾱ_{t−1})/(1−ᾱ_t)) with ᾱ_0 := 1, so σ_1 = 0
    (the last reverse step adds no noise anyway).
    """
    policy = SigmaPolicy(policy)
    if policy is SigmaPolicy.BETA:
        sigmas = schedule.betas.sqrt()
    else:
        sigmas = (schedule.betas * (1 - schedule.alpha_bar_prev()) / (1 - schedule.alpha_bars)).sqrt()
    return dataclasses.replace(schedule, posterior_sigmas=sigmas, sigma_policy=policy)


def schedule_from_config(config: ScheduleConfig) -> NoiseSchedule:
    return cosine_schedule(config.num_steps, config.offset, config.sigma_policy)
