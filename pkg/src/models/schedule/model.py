from dataclasses import dataclass

import torch
from pydantic import Field

from conf.conf_types import ScheduleKind, SigmaPolicy
from conf.model import AppModel

__all__ = ["ScheduleConfig", "NoiseSchedule"]


class ScheduleConfig(AppModel):
    kind: ScheduleKind = Field(ScheduleKind.COSINE, description="Variance schedule family")
    num_steps: int = Field(1000, ge=1, description="Number of diffusion steps T")
    offset: float = Field(0.008, gt=0, description="Cosine schedule offset s")
    sigma_policy: SigmaPolicy = Field(SigmaPolicy.BETA, description="Reverse-step noise scale policy")


@dataclass(frozen=True)
class NoiseSchedule:
    """Precomputed schedule tables, float64, index i holding diffusion step t = i + 1."""

    num_steps: int
    betas: torch.Tensor
    alphas: torch.Tensor
    alpha_bars: torch.Tensor
    posterior_sigmas: torch.Tensor
    offset: float
    sigma_policy: SigmaPolicy

    def at(self, table: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        """Gather table values for 1-based steps `t`."""
        return table[t.long().cpu() - 1]

    def alpha_bar_prev(self) -> torch.Tensor:
        """ᾱ_{t-1} for every t, with ᾱ_0 := 1."""
        return torch.cat([torch.ones(1, dtype=torch.float64), self.alpha_bars[:-1]])

    def to_config(self) -> ScheduleConfig:
        return ScheduleConfig(
            kind=ScheduleKind.COSINE, num_steps=self.num_steps, offset=self.offset, sigma_policy=self.sigma_policy
        )
