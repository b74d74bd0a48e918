import json
from pathlib import Path

import pandas as pd
import pytest

from exc.exc import EXIT_CONFIG, EXIT_DATA, EXIT_OK
from models.metrics.crud import MetricReportRepository
from models.run.service import RunService
from tsdiffuse import main
from utils.digest import state_dict_digest


def run_dir_from(output: str) -> Path:
    line = next(line for line in output.splitlines() if line.startswith("run_dir="))
    return Path(line.removeprefix("run_dir="))


@pytest.fixture
def trained_run(tiny_run_config_file: Path, tmp_path: Path, capsys: pytest.CaptureFixture) -> Path:
    assert main(["train", "--config", str(tiny_run_config_file), "--out", str(tmp_path / "out")]) == EXIT_OK
    return run_dir_from(capsys.readouterr().out)


def test_train_writes_run_artifacts(trained_run: Path, tmp_path: Path):
    assert trained_run.parent == tmp_path / "out"
    assert trained_run.name.startswith("train-")
    for name in ("config.json", "checkpoint.pt", "loss.csv", "heldout.csv", "heldout.json", "train.csv"):
        assert (trained_run / name).is_file(), name
    loss = pd.read_csv(trained_run / "loss.csv")
    assert loss["epoch"].tolist() == [1, 2]
    echoed = json.loads((trained_run / "config.json").read_text())
    assert echoed["seed"] == 7
    assert echoed["denoiser"]["seq_len"] == 8


def test_checkpoint_reloads_to_identical_model(trained_run: Path):
    loaded = RunService.load_model(trained_run / "checkpoint.pt")
    assert state_dict_digest(loaded.model.state_dict()) == state_dict_digest(loaded.checkpoint.state_dict)
    assert loaded.model.config.hidden_dim == 16
    assert loaded.schedule.num_steps == 10
    assert loaded.checkpoint.epoch == 2


def test_training_twice_gives_identical_loss_log(tiny_run_config_file: Path, tmp_path: Path, capsys):
    outputs = []
    for _ in range(2):
        assert main(["train", "--config", str(tiny_run_config_file), "--out", str(tmp_path / "out")]) == EXIT_OK
        outputs.append(run_dir_from(capsys.readouterr().out))
    assert outputs[0] != outputs[1]
    assert (outputs[0] / "loss.csv").read_bytes() == (outputs[1] / "loss.csv").read_bytes()
    digests = [state_dict_digest(RunService.load_model(run / "checkpoint.pt").model.state_dict()) for run in outputs]
    assert digests[0] == digests[1]


def test_flags_override_config(tiny_run_config_file: Path, tmp_path: Path, capsys):
    argv = ["train", "--config", str(tiny_run_config_file), "--out", str(tmp_path), "--epochs", "1", "--seed", "3",
            "--backbone", "gru", "--learning-rate", "0.001"]
    assert main(argv) == EXIT_OK
    echoed = json.loads((run_dir_from(capsys.readouterr().out) / "config.json").read_text())
    assert echoed["train"]["epochs"] == 1
    assert echoed["train"]["learning_rate"] == 0.001
    assert echoed["train"]["batch_size"] == 16
    assert echoed["seed"] == 3
    assert echoed["denoiser"]["backbone"] == "gru"


def test_default_output_root_comes_from_environment(tiny_run_config_file: Path, output_root: Path, capsys):
    assert main(["train", "--config", str(tiny_run_config_file), "--epochs", "1"]) == EXIT_OK
    assert run_dir_from(capsys.readouterr().out).parent == output_root


def test_missing_csv_names_the_field(tmp_path: Path, capsys):
    config = tmp_path / "csv.json"
    config.write_text(json.dumps({"dataset": {"kind": "csv", "path": str(tmp_path / "absent.csv"), "feature_columns": ["a"]}}))
    assert main(["train", "--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "dataset.path" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path: Path, tiny_run_config: dict, capsys):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({**tiny_run_config, "optimizer": "sgd"}))
    assert main(["train", "--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "optimizer" in capsys.readouterr().err


def test_sample_writes_count_times_length_rows(trained_run: Path, tmp_path: Path, capsys):
    files = []
    for _ in range(2):
        argv = ["sample", "--checkpoint", str(trained_run / "checkpoint.pt"), "--count", "10", "--seed", "1",
                "--out", str(tmp_path / "samples")]
        assert main(argv) == EXIT_OK
        files.append(run_dir_from(capsys.readouterr().out) / "samples.csv")
    frame = pd.read_csv(files[0])
    assert len(frame) == 10 * 8
    assert frame["sequence_id"].nunique() == 10
    assert files[0].read_bytes() == files[1].read_bytes()
    sidecar = json.loads(files[0].with_suffix(".json").read_text())
    assert sidecar["count"] == 10 and sidecar["seed"] == 1 and sidecar["scaler"] is not None


def test_sample_rejects_sequence_length_mismatch(trained_run: Path, tmp_path: Path, capsys):
    argv = ["sample", "--checkpoint", str(trained_run / "checkpoint.pt"), "--count", "2", "--seed", "0", "--seq-len", "9",
            "--out", str(tmp_path)]
    assert main(argv) == EXIT_CONFIG
    assert "seq_len" in capsys.readouterr().err


def test_sample_missing_checkpoint_is_a_data_error(tmp_path: Path, capsys):
    assert main(["sample", "--checkpoint", str(tmp_path / "nope.pt"), "--count", "1", "--out", str(tmp_path)]) == EXIT_DATA


def test_self_evaluation_is_a_sanity_check(trained_run: Path, tiny_run_config_file: Path, tmp_path: Path, capsys):
    heldout = str(trained_run / "heldout.csv")
    argv = ["evaluate", "--real", heldout, "--synthetic", heldout, "--config", str(tiny_run_config_file),
            "--out", str(tmp_path / "eval")]
    assert main(argv) == EXIT_OK
    output = capsys.readouterr().out
    run_dir = run_dir_from(output)
    reports = {report.metric: report for report in MetricReportRepository(run_dir).load("metrics")}
    assert reports["jsd"].mean < 1e-12
    assert reports["coverage"].mean == 1.0
    assert reports["lds"].mean <= 0.3
    assert set(reports) >= {"lds", "lps", "plus_5_steps", "jsd", "alpha_precision", "beta_recall", "coverage"}
    assert (run_dir / "summary.txt").read_text() in output
    schema = json.loads((run_dir / "metrics.json").read_text())
    for entry in schema:
        assert set(entry) == {"metric", "runs", "mean", "std", "run_count", "seed", "config_digest", "auxiliary", "notes"}


def test_evaluate_names_missing_column(trained_run: Path, tmp_path: Path, capsys):
    broken = tmp_path / "broken.csv"
    pd.read_csv(trained_run / "heldout.csv").drop(columns=["step_index"]).to_csv(broken, index=False)
    argv = ["evaluate", "--real", str(trained_run / "heldout.csv"), "--synthetic", str(broken), "--out", str(tmp_path)]
    assert main(argv) == EXIT_DATA
    assert "step_index" in capsys.readouterr().err


def test_project_pca_is_deterministic(trained_run: Path, tmp_path: Path, capsys):
    heldout, train = str(trained_run / "heldout.csv"), str(trained_run / "train.csv")
    files = []
    for _ in range(2):
        assert main(["project", "--real", heldout, "--synthetic", train, "--method", "pca", "--out", str(tmp_path)]) == EXIT_OK
        files.append(run_dir_from(capsys.readouterr().out) / "embedding_pca.csv")
    frame = pd.read_csv(files[0])
    assert list(frame.columns) == ["x", "y", "label"]
    assert len(frame) == 80
    assert files[0].read_bytes() == files[1].read_bytes()


def test_project_tsne(trained_run: Path, tmp_path: Path, capsys):
    heldout = str(trained_run / "heldout.csv")
    argv = ["project", "--real", heldout, "--synthetic", heldout, "--method", "tsne", "--perplexity", "5",
            "--iterations", "250", "--seed", "2", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    run_dir = run_dir_from(capsys.readouterr().out)
    metadata = json.loads((run_dir / "embedding_tsne.json").read_text())
    assert metadata["method"] == "tsne"
    assert metadata["count"] == 80
    assert metadata["details"]["perplexity"] == 5.0


def test_project_rejects_infeasible_perplexity(trained_run: Path, tmp_path: Path):
    heldout = str(trained_run / "heldout.csv")
    argv = ["project", "--real", heldout, "--synthetic", heldout, "--method", "tsne", "--perplexity", "30",
            "--out", str(tmp_path)]
    assert main(argv) == EXIT_CONFIG


def test_unknown_subcommand_exits_with_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["serve"])
    assert info.value.code == 2
