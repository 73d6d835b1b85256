import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from mirig.cdpgen import read_packed
from mirig.cli import cli, get_config
from mirig.postestimator import MiEstimate
from mirig.trainer import load_checkpoint

TINY_CONFIG = """
[dataset]
  n = 512
  size = 16

[train]
  batch_size = 4
  steps = 4
  eval_interval = 2
  repr_dim = 8
  hidden_dim = 8
  proj_dim = 4
  prefetch = 0

[estimate]
  batch_size = 4
  steps = 3
  eval_batches = 2
  hidden_dim = 8
  proj_dim = 4

[estimate.pairing]
  kind = "same_class"
  attributes = ["color"]
"""


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    (tmp_path / "run.toml").write_text(TINY_CONFIG)
    result = CliRunner().invoke(
        cli, ["gen", "--n", "512", "--size", "16", "--out", str(tmp_path / "data")]
    )
    assert result.exit_code == 0, result.output
    return tmp_path


def test_gen_writes_packed_dataset(workspace: Path) -> None:
    dataset = read_packed(workspace / "data")
    assert len(dataset) == 512
    assert dataset.size == 16
    assert (workspace / "data" / "cdp.json").exists()


def test_train_then_estimate(workspace: Path) -> None:
    runner = CliRunner()
    common = ["--config", str(workspace / "run.toml"), "--data", str(workspace / "data")]
    result = runner.invoke(cli, ["train", *common, "--out", str(workspace / "ckpt.bin")])
    assert result.exit_code == 0, result.output
    checkpoint = load_checkpoint(workspace / "ckpt.bin")
    assert checkpoint.metadata.steps == 4

    result = runner.invoke(
        cli,
        [
            "estimate",
            "--ckpt",
            str(workspace / "ckpt.bin"),
            *common,
            "--out",
            str(workspace / "estimate.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    estimate = MiEstimate.model_validate_json((workspace / "estimate.json").read_text())
    assert estimate.K_est == 4
    assert estimate.pairing == "same_class(color)"
    assert len(estimate.curve_bits) == 3


def test_corr(tmp_path: Path) -> None:
    path = tmp_path / "results.csv"
    path.write_text("accuracy,mi_bits\n0.5,1.0\n0.7,2.0\n0.9,2.5\n")
    runner = CliRunner()
    assert runner.invoke(cli, ["corr", "--csv", str(path)]).exit_code == 0
    assert (
        runner.invoke(cli, ["corr", "--csv", str(path), "--x", "acc", "--y", "mi_class"])
    ).exit_code == 0
    assert runner.invoke(cli, ["corr", "--csv", str(path), "--y", "tolerance"]).exit_code == 2


def test_corr_constant_column(tmp_path: Path) -> None:
    path = tmp_path / "results.csv"
    path.write_text("accuracy,mi_bits\n0.5,1.0\n0.5,2.0\n")
    assert CliRunner().invoke(cli, ["corr", "--csv", str(path)]).exit_code == 1


def test_get_config(tmp_path: Path) -> None:
    (tmp_path / "run.toml").write_text(TINY_CONFIG)
    config = get_config(tmp_path / "run.toml")
    assert config.train.batch_size == 4
    assert json.loads(config.estimate.pairing.model_dump_json())["attributes"] == ["color"]
