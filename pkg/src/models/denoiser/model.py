from pydantic import Field, ValidationInfo, field_validator, model_validator

from conf.conf_types import Backbone
from conf.model import AppModel

__all__ = ["DenoiserConfig"]


class DenoiserConfig(AppModel):
    backbone: Backbone = Field(Backbone.TRANSFORMER, description="ε_θ backbone")
    seq_len: int = Field(24, ge=1, description="Sequence length N")
    feature_dim: int = Field(5, ge=1, description="Feature dimension D")
    hidden_dim: int = Field(256, ge=1)
    num_layers: int = Field(6, ge=1)
    num_heads: int = Field(8, ge=1, description="Attention heads (transformer only)")
    feedforward_dim: int | None = Field(None, ge=1, description="Defaults to 4 * hidden_dim")
    dropout: float = Field(0.0, ge=0.0, lt=1.0)
    max_diffusion_steps: int = Field(1000, ge=1, description="T, sizes the timestep embedding table")

    @field_validator("num_heads")
    @classmethod
    def heads_divide_hidden(cls, num_heads: int, info: ValidationInfo) -> int:
        hidden_dim = info.data.get("hidden_dim")
        if info.data.get("backbone") == Backbone.TRANSFORMER and hidden_dim and hidden_dim % num_heads:
            raise ValueError(f"hidden_dim={hidden_dim} is not divisible by num_heads={num_heads}")
        return num_heads

    @model_validator(mode="after")
    def default_feedforward(self) -> "DenoiserConfig":
        if self.feedforward_dim is None:
            self.feedforward_dim = 4 * self.hidden_dim
        return self
