from dataclasses import dataclass, field
from typing import Any

import torch
from pydantic import Field

from conf.model import AppModel, optional

__all__ = ["TrainConfig", "TrainConfigUpdate", "DiffusionStepSample", "TrainResult", "Checkpoint", "CHECKPOINT_FORMAT_VERSION"]

CHECKPOINT_FORMAT_VERSION = 1


class TrainConfig(AppModel):
    epochs: int = Field(5000, ge=0)
    batch_size: int = Field(256, ge=1)
    learning_rate: float = Field(1e-4, gt=0)
    adam_betas: tuple[float, float] = Field((0.9, 0.999), description="Adam moment coefficients")
    max_steps: int | None = Field(None, ge=0, description="Stop after this many optimizer steps")
    checkpoint_interval: int | None = Field(None, ge=1, description="Checkpoint every n epochs")
    grad_clip: float | None = Field(None, gt=0, description="Global gradient-norm clipping threshold")
    max_nonfinite_steps: int = Field(5, ge=1, description="Consecutive non-finite losses tolerated")
    sample_batch_size: int = Field(256, ge=1, description="Sequences denoised together while sampling")
    num_workers: int = Field(0, ge=0, description="Data loader worker processes")


TrainConfigUpdate = optional(TrainConfig)


@dataclass
class DiffusionStepSample:
    """x_t = √ᾱ_t·x_0 + √(1−ᾱ_t)·ε for the recorded 1-based steps t."""

    x_t: torch.Tensor
    t: torch.Tensor
    epsilon: torch.Tensor


@dataclass
class TrainResult:
    model: torch.nn.Module
    loss_history: list[float] = field(default_factory=list)
    step_losses: list[float] = field(default_factory=list)
    steps: int = 0


@dataclass
class Checkpoint:
    """Versioned container: config snapshot, schedule parameters, state dict, epoch counter, root seed."""

    config: dict[str, Any]
    denoiser: dict[str, Any]
    schedule: dict[str, Any]
    state_dict: dict[str, torch.Tensor]
    epoch: int
    root_seed: int
    scaler: dict[str, Any] | None = None
    loss_history: list[float] = field(default_factory=list)
    format_version: int = CHECKPOINT_FORMAT_VERSION
