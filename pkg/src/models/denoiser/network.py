import abc
import math

import torch
from torch import nn

from exc.exc import InvalidInputError
from models.denoiser.model import DenoiserConfig

__all__ = ["sinusoidal_table", "DenoiserModel", "TransformerDenoiser", "GruDenoiser"]


def sinusoidal_table(length: int, dim: int) -> torch.Tensor:
    """Fixed sin/cos table [length, dim]: even columns sin(p / 10000^(2i/dim)), odd columns cos."""
    position = torch.arange(length, dtype=torch.float64)[:, None]
    half = (dim + 1) // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) * 2 / dim)
    table = torch.zeros(length, 2 * half, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * freqs)
    table[:, 1::2] = torch.cos(position * freqs)
    return table[:, :dim].float()


class DenoiserModel(nn.Module, abc.ABC):
    """ε_θ(x_t, t): maps a noised batch [B, N, D] and 1-based steps t [B] to a noise estimate [B, N, D]."""

    def __init__(self, config: DenoiserConfig):
        super().__init__()
        self.config = config
        hidden = config.hidden_dim
        self.input_proj = nn.Linear(config.feature_dim, hidden)
        self.register_buffer("time_table", sinusoidal_table(config.max_diffusion_steps + 1, hidden), persistent=False)
        self.time_mlp = nn.Sequential(nn.Linear(hidden, hidden), nn.GELU(), nn.Linear(hidden, hidden))
        self.output_proj = nn.Linear(hidden, config.feature_dim)

    def check_inputs(self, x_t: torch.Tensor, t: torch.Tensor) -> None:
        expected = (self.config.seq_len, self.config.feature_dim)
        if x_t.ndim != 3 or tuple(x_t.shape[1:]) != expected:
            raise InvalidInputError("denoiser", f"x_t shape {tuple(x_t.shape)} does not match [B, {expected[0]}, {expected[1]}]")
        if t.ndim != 1 or t.shape[0] != x_t.shape[0]:
            raise InvalidInputError("denoiser", f"t shape {tuple(t.shape)} does not match batch size {x_t.shape[0]}")
        if t.numel() and (int(t.min()) < 1 or int(t.max()) > self.config.max_diffusion_steps):
            raise InvalidInputError("denoiser", f"t must lie in 1..{self.config.max_diffusion_steps}")

    def time_embedding(self, t: torch.Tensor) -> torch.Tensor:
        return self.time_mlp(self.time_table[t.long()])

    def forward(self, x_t: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        self.check_inputs(x_t, t)
        tokens = self.input_proj(x_t) + self.time_embedding(t)[:, None, :]
        return self.output_proj(self.encode(tokens))

    @abc.abstractmethod
    def encode(self, tokens: torch.Tensor) -> torch.Tensor:
        """Sequence backbone over [B, N, hidden] tokens."""
        raise NotImplementedError


class TransformerDenoiser(DenoiserModel):
    """Input projection, sinusoidal positions, timestep embedding, bidirectional encoder stack, output projection."""

    def __init__(self, config: DenoiserConfig):
        super().__init__(config)
        self.register_buffer("position_table", sinusoidal_table(config.seq_len, config.hidden_dim), persistent=False)
        self.encoder = nn.ModuleList(
            nn.TransformerEncoderLayer(
                d_model=config.hidden_dim,
                nhead=config.num_heads,
                dim_feedforward=config.feedforward_dim,
                dropout=config.dropout,
                activation="gelu",
                batch_first=True,
            )
            for _ in range(config.num_layers)
        )

    def encode(self, tokens: torch.Tensor) -> torch.Tensor:
        hidden = tokens + self.position_table
        for layer in self.encoder:
            hidden = layer(hidden)
        return hidden


class GruDenoiser(DenoiserModel):
    """Same projections and timestep injection as the transformer, stacked GRU over the sequence axis."""

    def __init__(self, config: DenoiserConfig):
        super().__init__(config)
        self.gru = nn.GRU(
            input_size=config.hidden_dim,
            hidden_size=config.hidden_dim,
            num_layers=config.num_layers,
            batch_first=True,
            dropout=config.dropout if config.num_layers > 1 else 0.0,
        )

    def encode(self, tokens: torch.Tensor) -> torch.Tensor:
        hidden, _ = self.gru(tokens)
        return hidden
