import math
from pathlib import Path
from typing import Any, Iterable

import pandas as pd
from pydantic import BaseModel, Field

from mirig.config.config import Scenario
from mirig.constants import BOUND_TOLERANCE
from mirig.harness.plots import render_figures
from mirig.logger import LOGGER
from mirig.metrics.correlation import CorrelationSummary

RESULTS_FILENAME = "results.csv"
REPORT_FILENAME = "report.json"


class RunRow(BaseModel):
    """
    One sweep cell evaluated on one probe task. Columns a scenario does not
    measure stay empty.
    """

    config_id: str
    seed: int
    pairing: str
    task: str
    accuracy: float | None = None
    k_tr: int | None = None
    strength: float | None = None
    augmentation: str | None = None
    negatives: str | None = None
    temperature: float | None = None
    mi_bits: float | None = None
    bound_bits: float | None = None
    class_entropy_bits: float | None = None
    theorem_status: str | None = None
    train_mi_bits: float | None = None
    train_bound_bits: float | None = None
    contrastive_loss: float | None = None
    mi_simclr_bits: float | None = None
    alignment: float | None = None
    uniformity: float | None = None
    tolerance: float | None = None


RUN_COLUMNS: tuple[str, ...] = tuple(RunRow.model_fields)
_TEXT_COLUMNS = tuple(
    name
    for name, field in RunRow.model_fields.items()
    if field.annotation in (str, str | None)
)


class CorrelationRow(BaseModel):
    metric: str
    task: str | None = None
    pearson: float | None
    kendall: float | None
    n: int

    @classmethod
    def from_summary(
        cls, summary: CorrelationSummary, task: str | None = None
    ) -> "CorrelationRow":
        return cls(
            metric=summary.metric,
            task=task,
            pearson=summary.pearson,
            kendall=summary.kendall,
            n=summary.n,
        )


class Provenance(BaseModel):
    config_hash: str
    version: str
    python: str
    platform: str
    logical_cpus: int | None
    memory_bytes: int
    notes: list[str] = Field(default_factory=list)


class RunReport(BaseModel):
    scenario: Scenario
    rows: list[RunRow] = Field(default_factory=list)
    correlations: list[CorrelationRow] = Field(default_factory=list)
    findings: dict[str, Any] = Field(default_factory=dict)
    failures: list[str] = Field(default_factory=list)
    provenance: Provenance

    @property
    def valid(self) -> bool:
        return not self.failures

    def frame(self) -> pd.DataFrame:
        return rows_frame(self.rows)


def rows_frame(rows: Iterable[RunRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=list(RUN_COLUMNS))


def bound_failures(rows: Iterable[RunRow]) -> list[str]:
    """
    Every MI value must sit at or below its log2 ceiling.
    """
    failures = []
    for row in rows:
        checks = (
            ("post-training", row.mi_bits, row.bound_bits),
            ("in-training", row.train_mi_bits, row.train_bound_bits),
        )
        for label, bits, bound in checks:
            if bits is None or bound is None:
                continue
            if bits > bound + BOUND_TOLERANCE:
                failures.append(
                    f"{row.config_id} ({row.task}): {label} estimate {bits:.6f} bits "
                    f"exceeds bound {bound:.6f}"
                )
    return failures


def write_results_csv(report: RunReport, path: Path) -> Path:
    report.frame().to_csv(path, index=False)
    return path


def read_results_csv(path: Path) -> list[RunRow]:
    frame = pd.read_csv(
        path,
        float_precision="round_trip",
        dtype={column: str for column in _TEXT_COLUMNS},
        keep_default_na=False,
        na_values=[""],
    )
    rows = []
    for record in frame.to_dict(orient="records"):
        cleaned = {
            key: None if isinstance(value, float) and math.isnan(value) else value
            for key, value in record.items()
        }
        rows.append(RunRow.model_validate(cleaned))
    return rows


def emit_report(
    report: RunReport,
    directory: Path,
    formats: Iterable[str] = ("csv", "json", "svg"),
) -> list[Path]:
    """
    Write results.csv, report.json and one SVG per figure into `directory`.
    Emitting the same report twice produces byte-identical files.

    """
    directory.mkdir(parents=True, exist_ok=True)
    formats = set(formats)
    unknown = formats - {"csv", "json", "svg"}
    if unknown:
        raise ValueError(f"Unknown report formats {sorted(unknown)}")

    written: list[Path] = []
    if "csv" in formats:
        written.append(write_results_csv(report, directory / RESULTS_FILENAME))
    if "json" in formats:
        target = directory / REPORT_FILENAME
        target.write_text(report.model_dump_json(indent=2) + "\n")
        written.append(target)
    if "svg" in formats:
        written.extend(render_figures(report, directory))

    LOGGER.info(f"Wrote {len(written)} report files to {directory}")
    return written
