import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from exc.exc import ConfigError, DataParseError, InsufficientDataError, InvalidInputError, MissingColumnError
from models.dataset.crud import read_table
from models.dataset.model import CsvDatasetConfig, ScalerState, SequenceBatch, SineDatasetConfig, WindowSpec
from models.dataset.presets import PRESETS

__all__ = [
    "LoadedCorpus",
    "generate_sine",
    "window_count",
    "split_windows",
    "sliding_windows",
    "fit_scaler",
    "scale",
    "inverse_scale",
    "scale_array",
    "inverse_scale_array",
    "load_csv",
    "build_dataset",
]

logger = logging.getLogger(__name__)


@dataclass
class LoadedCorpus:
    """Scaled train and held-out windows plus the scaler fitted on the training portion."""

    train: SequenceBatch
    heldout: SequenceBatch
    scaler: ScalerState


def generate_sine(
    num_sequences: int,
    seq_len: int,
    dims: int,
    rng: np.random.Generator,
    frequency: float | None = None,
    phases: np.ndarray | None = None,
) -> SequenceBatch:
    """x_i(t) = sin(2π·f·t + φ_i) with f ~ U[0, 1] per sequence and φ_i ~ U[−π, π] per dimension.

    t runs over k/N for k = 0..N−1, so one window spans up to f full periods. `frequency` and
    `phases` pin the draws.
    """
    if num_sequences < 1 or seq_len < 1 or dims < 1:
        raise InvalidInputError("sine", f"num_sequences, seq_len and dims must be >= 1, got {num_sequences}, {seq_len}, {dims}")
    freqs = rng.uniform(0.0, 1.0, size=(num_sequences, 1, 1))
    phis = rng.uniform(-np.pi, np.pi, size=(num_sequences, 1, dims))
    if frequency is not None:
        freqs = np.full_like(freqs, frequency)
    if phases is not None:
        phis = np.broadcast_to(np.asarray(phases, dtype=np.float64).reshape(-1, 1, dims), phis.shape).copy()
    t = (np.arange(seq_len, dtype=np.float64) / seq_len)[None, :, None]
    return SequenceBatch(np.sin(2 * np.pi * freqs * t + phis), feature_names=[f"sine_{i}" for i in range(dims)])


def window_count(length: int, seq_len: int, stride: int) -> int:
    return 0 if length < seq_len else (length - seq_len) // stride + 1


def sliding_windows(series: np.ndarray, seq_len: int, stride: int = 1) -> np.ndarray:
    """Windows [W, N, D] of a [L, D] series starting at 0, s, 2s, ..."""
    if series.shape[0] < seq_len:
        raise InsufficientDataError("windows", f"{series.shape[0]} rows are fewer than the window length {seq_len}")
    view = np.lib.stride_tricks.sliding_window_view(series, seq_len, axis=0)[::stride]
    return np.ascontiguousarray(view.transpose(0, 2, 1))


def fit_scaler(values: np.ndarray, lo: float = -1.0, hi: float = 1.0) -> ScalerState:
    flat = np.asarray(values, dtype=np.float64).reshape(-1, np.shape(values)[-1])
    return ScalerState(minimum=flat.min(axis=0).tolist(), maximum=flat.max(axis=0).tolist(), lo=lo, hi=hi)


def _check_dims(values: np.ndarray, scaler: ScalerState) -> None:
    if values.shape[-1] != scaler.feature_dim:
        raise InvalidInputError("scaler", f"feature dimension {values.shape[-1]} does not match scaler ({scaler.feature_dim})")


def scale_array(values: np.ndarray, scaler: ScalerState) -> np.ndarray:
    _check_dims(values, scaler)
    mn, mx = np.asarray(scaler.minimum), np.asarray(scaler.maximum)
    span = mx - mn
    constant = span == 0
    unit = (values - mn) / np.where(constant, 1.0, span)
    scaled = scaler.lo + unit * (scaler.hi - scaler.lo)
    return np.where(constant, (scaler.lo + scaler.hi) / 2, scaled)


def inverse_scale_array(values: np.ndarray, scaler: ScalerState) -> np.ndarray:
    """Affine inverse; values outside [lo, hi] extend linearly, no clamping."""
    _check_dims(values, scaler)
    mn, mx = np.asarray(scaler.minimum), np.asarray(scaler.maximum)
    span = mx - mn
    restored = mn + (values - scaler.lo) / (scaler.hi - scaler.lo) * span
    return np.where(span == 0, mn, restored)


def scale(batch: SequenceBatch, scaler: ScalerState) -> SequenceBatch:
    return SequenceBatch(scale_array(batch.values, scaler), scaler=scaler, feature_names=batch.feature_names)


def inverse_scale(batch: SequenceBatch, scaler: ScalerState) -> SequenceBatch:
    return SequenceBatch(inverse_scale_array(batch.values, scaler), scaler=None, feature_names=batch.feature_names)


def _numeric_columns(frame: pd.DataFrame, columns: list[str], missing_values: tuple[float, ...], resource: str) -> pd.DataFrame:
    numeric = {}
    for column in columns:
        raw = frame[column]
        parsed = pd.to_numeric(raw, errors="coerce")
        present = raw.notna() & (raw.astype(str).str.strip() != "")
        if present.any() and parsed[present].isna().all():
            # a selected column with no numeric entry at all is a parse error, not missing data
            row = int(np.flatnonzero(present.to_numpy())[0]) + 1
            raise DataParseError(resource, f"column {column!r} is not numeric (row {row}: {raw.iloc[row - 1]!r})", row=row, column=column)
        if missing_values:
            parsed = parsed.mask(parsed.isin(missing_values))
        numeric[column] = parsed
    return pd.DataFrame(numeric)


def split_windows(count: int, heldout_fraction: float) -> int:
    """Number of held-out windows taken from the tail of `count` windows; both sides keep one when count >= 2."""
    if count < 2:
        return 0
    return min(max(int(round(count * heldout_fraction)), 1), count - 1)


def load_csv(
    path: str | Path,
    feature_columns: list[str],
    window: WindowSpec,
    separator: str = ",",
    decimal: str = ".",
    missing_values: tuple[float, ...] = (),
) -> LoadedCorpus:
    """Read a temporal CSV, drop incomplete rows, cut the whole series into windows and keep the
    contiguous tail of windows as the held-out split. The scaler is fitted on the rows the training
    windows cover."""
    resource = str(path)
    frame = read_table(path, separator=separator, decimal=decimal)
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in feature_columns:
        if column not in frame.columns:
            raise MissingColumnError(resource, f"column {column!r} not in {list(frame.columns)}", column=column)

    numeric = _numeric_columns(frame, list(feature_columns), tuple(missing_values), resource)
    complete = numeric.dropna()
    if len(complete) < len(numeric):
        logger.info("Dropped %d of %d rows with missing values in %s", len(numeric) - len(complete), len(numeric), path)
    series = complete.to_numpy(dtype=np.float64)

    length, seq_len, stride = series.shape[0], window.seq_len, window.stride
    if length < seq_len:
        raise InsufficientDataError(resource, f"{length} usable rows are fewer than the window length {seq_len}")
    windows = sliding_windows(series, seq_len, stride)
    heldout_count = split_windows(len(windows), window.heldout_fraction)
    train_count = len(windows) - heldout_count

    # train windows start at 0, s, ..., (train_count - 1)·s
    scaler = fit_scaler(series[: (train_count - 1) * stride + seq_len])
    names = list(feature_columns)
    train = SequenceBatch(windows[:train_count], feature_names=names)
    heldout = SequenceBatch(windows[train_count:], feature_names=names)
    logger.info("Loaded %s: %d train / %d held-out windows of %d x %d", path, len(train), len(heldout), seq_len, len(names))
    return LoadedCorpus(train=scale(train, scaler), heldout=scale(heldout, scaler), scaler=scaler)


def build_dataset(config: SineDatasetConfig | CsvDatasetConfig, rng: np.random.Generator) -> LoadedCorpus:
    if isinstance(config, SineDatasetConfig):
        raw = generate_sine(config.num_sequences, config.seq_len, config.dims, rng)
        heldout_count = max(1, int(round(config.num_sequences * config.heldout_fraction)))
        train, heldout = raw.values[:-heldout_count], raw.values[-heldout_count:]
        scaler = fit_scaler(train)
        return LoadedCorpus(
            train=scale(SequenceBatch(train, feature_names=raw.feature_names), scaler),
            heldout=scale(SequenceBatch(heldout, feature_names=raw.feature_names), scaler),
            scaler=scaler,
        )

    if not Path(config.path).is_file():
        raise ConfigError(field="dataset.path", message=f"CSV file not found: {config.path}")
    preset = PRESETS.get(config.preset) if config.preset else None
    columns = config.feature_columns or list(preset.feature_columns)
    return load_csv(
        config.path,
        columns,
        config.window,
        separator=config.separator or (preset.separator if preset else ","),
        decimal=config.decimal or (preset.decimal if preset else "."),
        missing_values=tuple(config.missing_values if config.missing_values is not None else (preset.missing_values if preset else ())),
    )
