import torch
from torch import nn

from models.denoiser.network import sinusoidal_table

__all__ = ["SequenceEncoder", "SequenceClassifier", "HorizonPredictor"]


class SequenceEncoder(nn.Module):
    """Input projection, sinusoidal positions and a bidirectional transformer encoder stack."""

    def __init__(self, feature_dim: int, seq_len: int, hidden_dim: int, num_layers: int, num_heads: int):
        super().__init__()
        self.input_proj = nn.Linear(feature_dim, hidden_dim)
        self.register_buffer("position_table", sinusoidal_table(seq_len, hidden_dim), persistent=False)
        self.layers = nn.ModuleList(
            nn.TransformerEncoderLayer(
                d_model=hidden_dim,
                nhead=num_heads,
                dim_feedforward=4 * hidden_dim,
                dropout=0.0,
                activation="gelu",
                batch_first=True,
            )
            for _ in range(num_layers)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        hidden = self.input_proj(x) + self.position_table
        for layer in self.layers:
            hidden = layer(hidden)
        return hidden


class SequenceClassifier(nn.Module):
    """Real (1) vs synthetic (0) logits from the mean-pooled encoder output."""

    def __init__(self, feature_dim: int, seq_len: int, hidden_dim: int, num_layers: int, num_heads: int):
        super().__init__()
        self.encoder = SequenceEncoder(feature_dim, seq_len, hidden_dim, num_layers, num_heads)
        self.head = nn.Linear(hidden_dim, 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.encoder(x).mean(dim=1))


class HorizonPredictor(nn.Module):
    """Predicts the next `horizon` steps as the last observed step plus a learned correction.

    The correction head starts at zero, so an untrained predictor copies the last value.
    """

    def __init__(self, feature_dim: int, context_len: int, horizon: int, hidden_dim: int, num_layers: int, num_heads: int):
        super().__init__()
        self.horizon = horizon
        self.encoder = SequenceEncoder(feature_dim, context_len, hidden_dim, num_layers, num_heads)
        self.head = nn.Linear(hidden_dim, horizon * feature_dim)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, context: torch.Tensor) -> torch.Tensor:
        correction = self.head(self.encoder(context)[:, -1]).view(context.shape[0], self.horizon, context.shape[2])
        return context[:, -1:, :] + correction

