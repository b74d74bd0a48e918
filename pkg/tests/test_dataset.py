import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from conf.conf_types import DatasetPreset
from exc.exc import ConfigError, DataParseError, EXIT_DATA, InsufficientDataError, InvalidInputError, MissingColumnError
from models.dataset.crud import SequenceCsvRepository
from models.dataset.model import CsvDatasetConfig, ScalerState, SequenceBatch, SequenceMetadata, SineDatasetConfig, WindowSpec
from models.dataset.presets import PRESETS
from models.dataset.service import (
    build_dataset,
    fit_scaler,
    generate_sine,
    inverse_scale,
    inverse_scale_array,
    load_csv,
    scale,
    scale_array,
    sliding_windows,
    split_windows,
    window_count,
)
from utils.seeding import numpy_rng


def write_series(path: Path, rows: int, columns=("a", "b"), **kwargs) -> pd.DataFrame:
    frame = pd.DataFrame(
        {name: np.arange(rows, dtype=np.float64) * (i + 1) + 0.5 * i for i, name in enumerate(columns)}
    )
    frame.insert(0, "date", [f"2024-01-{(i % 28) + 1:02d}" for i in range(rows)])
    frame.to_csv(path, index=False, **kwargs)
    return frame


def test_sine_values_bounded(sine_values: np.ndarray):
    assert sine_values.shape == (64, 12, 3)
    assert np.all(np.abs(sine_values) <= 1.0)


def test_zero_frequency_gives_constant_dimensions():
    batch = generate_sine(4, 10, 3, numpy_rng(0), frequency=0.0)
    assert np.allclose(batch.values, batch.values[:, :1, :])
    rng = numpy_rng(0)
    rng.uniform(0.0, 1.0, size=(4, 1, 1))
    phases = rng.uniform(-np.pi, np.pi, size=(4, 1, 3))
    assert np.allclose(batch.values[:, 0, :], np.sin(phases[:, 0, :]))


def test_sine_closed_form_value():
    batch = generate_sine(1, 100, 1, numpy_rng(0), frequency=0.5, phases=np.zeros(1))
    assert batch.values[0, 50, 0] == pytest.approx(math.sin(math.pi * 0.5), abs=1e-12)


@pytest.mark.parametrize("frequency, phase", [(0.5, 0.0), (1.0, 0.1), (0.9, -2.0)])
def test_sine_zero_crossings(frequency: float, phase: float):
    seq_len = 100
    values = generate_sine(1, seq_len, 1, numpy_rng(0), frequency=frequency, phases=np.array([phase])).values[0, :, 0]
    crossings = int(np.sum(np.sign(values[1:]) * np.sign(values[:-1]) < 0))
    horizon = (seq_len - 1) / seq_len
    # zeros of sin(2πft + φ) at t = (mπ − φ) / (2πf)
    analytic = sum(
        1 for m in range(-10, 10) if 0 < (m * math.pi - phase) / (2 * math.pi * frequency) < horizon
    )
    assert crossings == analytic


def test_sine_mean_is_centred():
    values = generate_sine(10_000, 24, 5, numpy_rng(1)).values
    means = values.mean(axis=(0, 1))
    assert np.all(np.abs(means) < 0.05)


def test_sine_rejects_bad_sizes():
    with pytest.raises(InvalidInputError):
        generate_sine(0, 10, 1, numpy_rng(0))


@pytest.mark.parametrize("length, seq_len, stride", [(10, 4, 2), (10, 4, 1), (100, 24, 5), (7, 7, 3), (6, 7, 1)])
def test_window_count_formula(length: int, seq_len: int, stride: int):
    expected = 0 if length < seq_len else math.floor((length - seq_len) / stride) + 1
    assert window_count(length, seq_len, stride) == expected


def test_sliding_windows_start_indices():
    series = np.arange(10, dtype=np.float64)[:, None]
    windows = sliding_windows(series, 4, stride=2)
    assert windows.shape == (4, 4, 1)
    assert windows[:, 0, 0].tolist() == [0, 2, 4, 6]
    assert windows[1, :, 0].tolist() == [2, 3, 4, 5]


def test_sliding_windows_reject_short_series():
    with pytest.raises(InsufficientDataError):
        sliding_windows(np.zeros((3, 2)), 4)


def test_scaler_endpoints_and_round_trip(sine_values: np.ndarray):
    scaler = fit_scaler(sine_values)
    scaled = scale_array(sine_values, scaler)
    flat = sine_values.reshape(-1, 3)
    assert np.allclose(scaled.reshape(-1, 3)[flat.argmin(axis=0), range(3)], -1.0)
    assert np.allclose(scaled.reshape(-1, 3)[flat.argmax(axis=0), range(3)], 1.0)
    assert np.max(np.abs(inverse_scale_array(scaled, scaler) - sine_values)) < 1e-9


def test_constant_feature_maps_to_midpoint():
    values = np.stack([np.full((4, 5), 3.0), np.arange(20.0).reshape(4, 5)], axis=-1)
    scaler = fit_scaler(values)
    scaled = scale_array(values, scaler)
    assert np.all(scaled[..., 0] == 0.0)
    assert np.all(inverse_scale_array(scaled, scaler)[..., 0] == 3.0)


def test_out_of_range_values_extend_linearly():
    scaler = ScalerState(minimum=[0.0], maximum=[10.0])
    assert inverse_scale_array(np.array([[[2.0]]]), scaler)[0, 0, 0] == pytest.approx(15.0)
    assert inverse_scale_array(np.array([[[-3.0]]]), scaler)[0, 0, 0] == pytest.approx(-10.0)


def test_scale_rejects_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        scale(SequenceBatch(np.zeros((1, 2, 3))), ScalerState(minimum=[0.0], maximum=[1.0]))


def test_scaler_state_validation():
    with pytest.raises(ConfigError):
        ScalerState.from_dict({"minimum": [1.0], "maximum": [0.0]})


def test_sequence_batch_rejects_non_finite_values():
    with pytest.raises(InvalidInputError):
        SequenceBatch(np.array([[[np.nan]]]))
    with pytest.raises(InvalidInputError):
        SequenceBatch(np.zeros((2, 3)))


def test_load_csv_splits_and_scales_on_train_rows(tmp_path: Path):
    path = tmp_path / "series.csv"
    frame = write_series(path, 50)
    corpus = load_csv(path, ["a", "b"], WindowSpec(seq_len=5, stride=1, heldout_fraction=0.2))
    # 46 windows, the last round(46 * 0.2) = 9 held out
    assert (len(corpus.train), len(corpus.heldout)) == (37, 9)
    # training windows cover rows 0..40
    assert corpus.scaler.maximum == frame[["a", "b"]].iloc[:41].max().tolist()
    assert corpus.train.values.min() == pytest.approx(-1.0) and corpus.train.values.max() == pytest.approx(1.0)
    raw = frame[["a", "b"]].to_numpy()
    restored = inverse_scale(corpus.train, corpus.scaler).values
    assert np.max(np.abs(restored[:, 0, :] - raw[:37])) < 1e-9
    assert np.max(np.abs(restored[-1] - raw[36:41])) < 1e-9
    heldout = inverse_scale(corpus.heldout, corpus.scaler).values
    assert np.max(np.abs(heldout[:, 0, :] - raw[37:46])) < 1e-9
    assert np.max(np.abs(heldout[-1] - raw[45:50])) < 1e-9


def test_load_csv_drops_incomplete_rows(tmp_path: Path):
    path = tmp_path / "gappy.csv"
    frame = write_series(path, 30)
    frame.loc[[3, 17], "b"] = np.nan
    frame.to_csv(path, index=False)
    corpus = load_csv(path, ["a", "b"], WindowSpec(seq_len=4, heldout_fraction=0.25))
    assert len(corpus.train) + len(corpus.heldout) == window_count(28, 4, 1)


def test_load_csv_rejects_short_series(tmp_path: Path):
    path = tmp_path / "short.csv"
    write_series(path, 3)
    with pytest.raises(InsufficientDataError) as info:
        load_csv(path, ["a"], WindowSpec(seq_len=4))
    assert info.value.exit_code == EXIT_DATA


@pytest.mark.parametrize(
    ("rows", "seq_len", "stride", "fraction", "expected"),
    [
        (10, 4, 2, 0.2, (3, 1)),
        (12, 5, 1, 0.2, (6, 2)),
        (100, 24, 1, 0.2, (62, 15)),
        (4, 4, 1, 0.2, (1, 0)),
    ],
)
def test_load_csv_windows_whole_series_then_splits_tail(tmp_path: Path, rows, seq_len, stride, fraction, expected):
    path = tmp_path / "series.csv"
    frame = write_series(path, rows)
    corpus = load_csv(path, ["a"], WindowSpec(seq_len=seq_len, stride=stride, heldout_fraction=fraction))
    assert (len(corpus.train), len(corpus.heldout)) == expected
    assert len(corpus.train) + len(corpus.heldout) == (rows - seq_len) // stride + 1
    windows = inverse_scale(SequenceBatch(np.concatenate([corpus.train.values, corpus.heldout.values])), corpus.scaler)
    starts = windows.values[:, 0, 0]
    assert np.allclose(starts, frame["a"].to_numpy()[0 : rows - seq_len + 1 : stride])


def test_split_windows_keeps_both_sides():
    assert split_windows(4, 0.2) == 1
    assert split_windows(77, 0.2) == 15
    assert split_windows(2, 0.01) == 1
    assert split_windows(2, 0.99) == 1
    assert split_windows(1, 0.5) == 0


def test_load_csv_reports_non_numeric_column(tmp_path: Path):
    path = tmp_path / "series.csv"
    write_series(path, 20)
    with pytest.raises(DataParseError) as info:
        load_csv(path, ["a", "date"], WindowSpec(seq_len=4))
    assert info.value.column == "date"
    assert info.value.row == 1


def test_load_csv_reports_missing_column(tmp_path: Path):
    path = tmp_path / "series.csv"
    write_series(path, 20)
    with pytest.raises(MissingColumnError) as info:
        load_csv(path, ["a", "volume"], WindowSpec(seq_len=4))
    assert info.value.column == "volume"


def test_air_quality_preset_parsing(tmp_path: Path):
    columns = PRESETS[DatasetPreset.AIR].feature_columns
    path = tmp_path / "air.csv"
    frame = write_series(path, 40, columns=columns, sep=";", decimal=",")
    frame.loc[11, "CO(GT)"] = -200.0
    frame.to_csv(path, index=False, sep=";", decimal=",")
    config = CsvDatasetConfig(path=str(path), preset=DatasetPreset.AIR, window=WindowSpec(seq_len=5, heldout_fraction=0.25))
    corpus = build_dataset(config, numpy_rng(0))
    assert corpus.train.feature_dim == len(columns)
    # 39 complete rows give 35 windows, the last round(35 * 0.25) = 9 held out
    assert (len(corpus.train), len(corpus.heldout)) == (26, 9)
    assert corpus.train.feature_names == list(columns)


def test_csv_config_requires_columns_or_preset():
    with pytest.raises(ConfigError):
        CsvDatasetConfig.from_dict({"path": "x.csv"})


def test_build_dataset_missing_file_names_field(tmp_path: Path):
    config = CsvDatasetConfig(path=str(tmp_path / "nope.csv"), feature_columns=["a"])
    with pytest.raises(ConfigError) as info:
        build_dataset(config, numpy_rng(0))
    assert info.value.field == "dataset.path"


def test_build_sine_dataset_split():
    corpus = build_dataset(SineDatasetConfig(num_sequences=50, seq_len=8, dims=2, heldout_fraction=0.2), numpy_rng(0))
    assert (len(corpus.train), len(corpus.heldout)) == (40, 10)
    assert corpus.train.values.min() == pytest.approx(-1.0)
    assert corpus.train.scaler == corpus.scaler


def test_sequence_csv_round_trip(tmp_path: Path, sine_values: np.ndarray):
    repository = SequenceCsvRepository(tmp_path)
    scaler = fit_scaler(sine_values)
    path = repository.save("samples", SequenceBatch(sine_values), SequenceMetadata(count=0, seq_len=0, feature_dim=0, scaler=scaler, seed=3))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["sequence_id", "step_index", "feature_0", "feature_1", "feature_2"]
    assert len(frame) == 64 * 12
    loaded = repository.load("samples")
    assert np.array_equal(loaded.values, sine_values)
    metadata = repository.load_metadata("samples")
    assert (metadata.count, metadata.seq_len, metadata.feature_dim, metadata.seed) == (64, 12, 3, 3)
    assert metadata.scaler == scaler


def test_sequence_csv_requires_index_columns(tmp_path: Path):
    pd.DataFrame({"sequence_id": [0, 0], "feature_0": [1.0, 2.0]}).to_csv(tmp_path / "bad.csv", index=False)
    with pytest.raises(MissingColumnError) as info:
        SequenceCsvRepository(tmp_path).load("bad")
    assert info.value.column == "step_index"
