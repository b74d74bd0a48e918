import logging

import torch

from conf.conf_types import Backbone
from models.denoiser.model import DenoiserConfig
from models.denoiser.network import DenoiserModel, GruDenoiser, TransformerDenoiser

__all__ = ["init_denoiser", "parameter_count"]

logger = logging.getLogger(__name__)

_BACKBONES: dict[Backbone, type[DenoiserModel]] = {
    Backbone.TRANSFORMER: TransformerDenoiser,
    Backbone.GRU: GruDenoiser,
}


def init_denoiser(config: DenoiserConfig | dict, seed: int, dtype: torch.dtype = torch.float32) -> DenoiserModel:
    """Build ε_θ with parameters drawn deterministically from `seed`.

    Linear layers use PyTorch's fan-in uniform scheme U(−1/√fan_in, 1/√fan_in); attention input
    projections are Xavier-uniform with zero biases; GRU weights are U(−1/√hidden, 1/√hidden).
    """
    if isinstance(config, dict):
        config = DenoiserConfig.from_dict(config)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = _BACKBONES[Backbone(config.backbone)](config)
    model = model.to(dtype)
    logger.info("Initialized %s denoiser with %d parameters", config.backbone, parameter_count(model))
    return model


def parameter_count(model: torch.nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
