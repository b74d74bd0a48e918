import json
from pathlib import Path

import numpy as np
import pytest
import torch

from conf.conf_types import MetricName
from models.dataset.service import generate_sine
from models.denoiser.model import DenoiserConfig
from models.metrics.model import MetricConfig
from models.schedule.service import cosine_schedule
from utils.seeding import numpy_rng


@pytest.fixture(autouse=True)
def output_root(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    root = tmp_path / "runs"
    monkeypatch.setenv("TSDIFFUSE_OUTPUT_ROOT", str(root))
    return root


@pytest.fixture
def tiny_denoiser_config() -> DenoiserConfig:
    return DenoiserConfig(seq_len=6, feature_dim=2, hidden_dim=8, num_layers=1, num_heads=1, max_diffusion_steps=10)


@pytest.fixture
def small_schedule():
    return cosine_schedule(10)


@pytest.fixture
def sine_values() -> np.ndarray:
    return generate_sine(64, 12, 3, numpy_rng(0)).values


@pytest.fixture
def fast_metric_config() -> MetricConfig:
    return MetricConfig(
        metrics=[MetricName.JSD, MetricName.ALPHA_PRECISION, MetricName.BETA_RECALL, MetricName.COVERAGE],
        repetitions=2,
        hidden_dim=8,
        num_layers=1,
        num_heads=1,
        epochs=2,
        batch_size=32,
        min_sequences=8,
        k=2,
    )


@pytest.fixture
def tiny_run_config() -> dict:
    return {
        "dataset": {"kind": "sine", "num_sequences": 80, "seq_len": 8, "dims": 2, "heldout_fraction": 0.5},
        "schedule": {"num_steps": 10},
        "denoiser": {"hidden_dim": 16, "num_layers": 1, "num_heads": 2},
        "train": {"epochs": 2, "batch_size": 16, "sample_batch_size": 16},
        "metrics": {
            "repetitions": 1,
            "hidden_dim": 8,
            "num_layers": 1,
            "num_heads": 1,
            "epochs": 2,
            "batch_size": 32,
            "min_sequences": 8,
            "k": 2,
        },
        "seed": 7,
    }


@pytest.fixture
def tiny_run_config_file(tmp_path: Path, tiny_run_config: dict) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(tiny_run_config))
    return path


@pytest.fixture(autouse=True)
def single_thread():
    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    yield
    torch.set_num_threads(threads)
