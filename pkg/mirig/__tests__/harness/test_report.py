import math
from pathlib import Path

import pytest

from mirig.config import SweepConfig
from mirig.harness import (
    CorrelationRow,
    RunReport,
    RunRow,
    bound_failures,
    collect_provenance,
    emit_report,
    read_results_csv,
    render_figures,
)
from mirig.harness.report import RUN_COLUMNS


def _provenance():
    return collect_provenance(SweepConfig(), notes=["test run"])


def _row(**values) -> RunRow:
    defaults = {"config_id": "0a1b2c3d4e5f", "seed": 0, "pairing": "same_class(all)"}
    defaults.update(values)
    return RunRow.model_validate(defaults)


def _batch_size_rows() -> list[RunRow]:
    rows = []
    for K, train_bits, post_bits, accuracy in (
        (2, 1.5, 5.8, 0.95),
        (8, 3.9, 5.9, 0.97),
        (32, 5.9, 5.95, 0.99),
    ):
        rows.append(
            _row(
                task="all",
                k_tr=K,
                accuracy=accuracy,
                temperature=0.3,
                mi_bits=post_bits,
                bound_bits=math.log2(511),
                class_entropy_bits=6.0,
                theorem_status="pinned",
                train_mi_bits=train_bits,
                train_bound_bits=math.log2(2 * K - 1),
                contrastive_loss=0.1 / 3,
            )
        )
    return rows


def _report(scenario: str = "batch_size", rows: list[RunRow] | None = None) -> RunReport:
    return RunReport(
        scenario=scenario,
        rows=_batch_size_rows() if rows is None else rows,
        correlations=[CorrelationRow(metric="mi_bits", pearson=0.5, kendall=None, n=3)],
        findings={"post_training_spread_bits": 0.15},
        provenance=_provenance(),
    )


# ─────────────────────────────────────────────────────────────────────────────
# Bound failures
# ─────────────────────────────────────────────────────────────────────────────


def test_rows_within_bounds_pass() -> None:
    assert bound_failures(_batch_size_rows()) == []
    assert _report().valid


@pytest.mark.parametrize(
    "values,label",
    [
        ({"mi_bits": 3.0, "bound_bits": math.log2(3)}, "post-training"),
        ({"train_mi_bits": 1.6, "train_bound_bits": math.log2(3)}, "in-training"),
    ],
    ids=["post_training", "in_training"],
)
def test_bound_violation_is_reported(values: dict, label: str) -> None:
    failures = bound_failures([_row(task="all", **values)])
    assert len(failures) == 1
    assert label in failures[0]
    report = _report(rows=[_row(task="all", **values)]).model_copy(
        update={"failures": failures}
    )
    assert not report.valid


def test_bound_tolerance() -> None:
    bound = math.log2(3)
    assert bound_failures([_row(task="all", mi_bits=bound + 1e-12, bound_bits=bound)]) == []


def test_missing_values_are_not_checked() -> None:
    assert bound_failures([_row(task="all", mi_bits=9.0)]) == []


# ─────────────────────────────────────────────────────────────────────────────
# CSV
# ─────────────────────────────────────────────────────────────────────────────


def test_csv_round_trip(tmp_path: Path) -> None:
    rows = _batch_size_rows() + [
        _row(
            config_id="000000000abc",
            task="color",
            negatives="noise://uniform",
            accuracy=0.1 + 0.2,
            k_tr=4,
        ),
        _row(task="digit", augmentation="jitter", strength=0.25, theorem_status=None),
    ]
    report = _report(rows=rows)
    emit_report(report, tmp_path, formats=("csv",))
    assert read_results_csv(tmp_path / "results.csv") == rows


def test_empty_scenario_writes_header_only(tmp_path: Path) -> None:
    report = _report(rows=[])
    written = emit_report(report, tmp_path)
    text = (tmp_path / "results.csv").read_text()
    assert text.strip() == ",".join(RUN_COLUMNS)
    assert read_results_csv(tmp_path / "results.csv") == []
    assert not any(path.suffix == ".svg" for path in written)


def test_stable_column_order(tmp_path: Path) -> None:
    emit_report(_report(), tmp_path, formats=("csv",))
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header.split(",")[:4] == ["config_id", "seed", "pairing", "task"]
    assert tuple(header.split(",")) == RUN_COLUMNS


# ─────────────────────────────────────────────────────────────────────────────
# Emission
# ─────────────────────────────────────────────────────────────────────────────


def test_emit_twice_is_byte_identical(tmp_path: Path) -> None:
    report = _report()
    first = emit_report(report, tmp_path / "a")
    second = emit_report(report, tmp_path / "b")
    assert [p.name for p in first] == [p.name for p in second]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes(), a.name


def test_report_json_round_trip(tmp_path: Path) -> None:
    report = _report()
    emit_report(report, tmp_path, formats=("json",))
    loaded = RunReport.model_validate_json((tmp_path / "report.json").read_text())
    assert loaded == report


def test_unknown_format_rejected(tmp_path: Path) -> None:
    with pytest.raises(ValueError, match="Unknown report formats"):
        emit_report(_report(), tmp_path, formats=("csv", "png"))


def test_provenance_snapshot() -> None:
    provenance = _provenance()
    assert provenance.config_hash == SweepConfig().config_hash()
    assert provenance.memory_bytes > 0
    assert provenance.notes == ["test run"]


# ─────────────────────────────────────────────────────────────────────────────
# Figures
# ─────────────────────────────────────────────────────────────────────────────


def _scenario_rows(scenario: str) -> list[RunRow]:
    if scenario == "batch_size":
        return _batch_size_rows()
    rows = []
    for i, task in enumerate(["color", "all"]):
        for j, value in enumerate([0.0, 0.5]):
            rows.append(
                _row(
                    pairing=f"same_class({['color', 'all'][j]})",
                    task=task,
                    accuracy=0.5 + 0.1 * i + 0.2 * j,
                    strength=value,
                    augmentation="jitter",
                    negatives=["in_batch", "noise://uniform"][j],
                    temperature=[0.1, 0.5][j],
                    mi_bits=1.0 + j,
                    alignment=0.4 - 0.1 * j,
                    uniformity=-2.0 - j,
                    tolerance=0.3 + 0.1 * j,
                )
            )
    return rows


@pytest.mark.parametrize(
    "scenario,expected",
    [
        ("batch_size", ["batch_size.svg"]),
        ("infomin", ["infomin_jitter.svg"]),
        ("task_grid", ["task_grid_accuracy.svg", "task_grid_mi_bits.svg"]),
        ("neg_sample", ["negative_sampling.svg"]),
        ("temperature", ["temperature.svg"]),
    ],
)
def test_one_figure_set_per_scenario(
    tmp_path: Path, scenario: str, expected: list[str]
) -> None:
    report = _report(scenario, rows=_scenario_rows(scenario))
    paths = render_figures(report, tmp_path)
    assert [path.name for path in paths] == expected
    for path in paths:
        assert path.read_text().lstrip().startswith("<?xml")
