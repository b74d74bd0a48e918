import hashlib
import random

import numpy as np
import torch


def derive_seed(root: int, *labels: object) -> int:
    """Stable child seed for (root, labels...), identical across processes and platforms."""
    key = ":".join([str(root), *(str(label) for label in labels)]).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def torch_generator(seed: int, device: str | torch.device = "cpu") -> torch.Generator:
    generator = torch.Generator(device=device)
    generator.manual_seed(seed)
    return generator


def numpy_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def seed_everything(seed: int) -> None:
    """Seed the global sources that modules without an explicit generator (dropout) draw from."""
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def configure_threads(parallelism: int) -> None:
    torch.set_num_threads(max(1, parallelism))
