from collections import defaultdict
from functools import partial
from typing import Callable

import numpy as np

from mirig.cdpgen import CdpDataset, TaskSpec, class_entropy, make_dataset
from mirig.config import (
    DatasetConfig,
    EstimationConfig,
    PairingConfig,
    SweepConfig,
    TrainConfig,
)
from mirig.config.sources import CdpSubsetSource, NegativeSourceBase, NoiseSource
from mirig.harness.cells import run_cells
from mirig.harness.provenance import STRENGTH_AXIS_NOTE, collect_provenance
from mirig.harness.report import (
    CorrelationRow,
    RunReport,
    RunRow,
    bound_failures,
    rows_frame,
)
from mirig.logger import LOGGER
from mirig.metrics import correlation_summary, linear_probe, metric_report
from mirig.objective import bound_bits
from mirig.postestimator import MiEstimate, estimate_mi
from mirig.trainer import EncoderCheckpoint, negative_pool, train

IN_BATCH = "in_batch"

# Sign convention of the correlation summary, keyed by RunRow column
TEMPERATURE_METRICS: dict[str, float] = {
    "mi_bits": 1.0,
    "mi_simclr_bits": 1.0,
    "alignment": -1.0,
    "uniformity": -1.0,
    "tolerance": 1.0,
}

# Acceptable accuracy drop of a related-split D⁻ against the in-batch baseline
RELATED_SLACK = 0.03


def load_dataset(config: DatasetConfig) -> CdpDataset:
    return make_dataset(n=config.n, seed=config.seed, size=config.size, mix=config.mix)


def _same_class(task: TaskSpec, seed: int) -> PairingConfig:
    return PairingConfig(
        kind="same_class", attributes=list(task.attribute_subset), seed=seed
    )


def _train_config(cfg: SweepConfig, seed: int, **update) -> TrainConfig:
    return cfg.train.model_copy(update={"seed": seed, **update})


def _estimation_config(cfg: SweepConfig, pairing: PairingConfig) -> EstimationConfig:
    return cfg.estimate.model_copy(update={"pairing": pairing})


def _train_bound(config: TrainConfig) -> float:
    if config.negatives is None:
        return bound_bits(2 * config.batch_size - 1)
    return bound_bits(config.negatives_per_batch + 1)


def _base_row(
    config: TrainConfig,
    checkpoint: EncoderCheckpoint,
    task: TaskSpec,
    accuracy: float,
) -> dict:
    return {
        "config_id": config.config_hash()[:12],
        "seed": config.seed,
        "pairing": checkpoint.metadata.pairing,
        "task": task.name,
        "accuracy": accuracy,
        "k_tr": config.batch_size,
        "temperature": config.temperature,
        "train_mi_bits": checkpoint.final_train_bits,
        "train_bound_bits": _train_bound(config),
        "contrastive_loss": checkpoint.metadata.final_loss_nats,
    }


def _estimate_columns(estimate: MiEstimate) -> dict:
    return {
        "mi_bits": estimate.bits,
        "bound_bits": estimate.bound_bits,
        "class_entropy_bits": estimate.class_entropy_bits,
        "theorem_status": (
            estimate.theorem_status.value if estimate.theorem_status else None
        ),
    }


def _flatten(results: list[list[RunRow]]) -> list[RunRow]:
    return [row for rows in results for row in rows]


def _finish(
    cfg: SweepConfig,
    rows: list[RunRow],
    findings: dict,
    *,
    correlations: list[CorrelationRow] | None = None,
    notes: list[str] | None = None,
) -> RunReport:
    assert cfg.sweep is not None
    report = RunReport(
        scenario=cfg.sweep.scenario,
        rows=rows,
        correlations=correlations or [],
        findings=findings,
        failures=bound_failures(rows),
        provenance=collect_provenance(cfg, notes),
    )
    for failure in report.failures:
        LOGGER.error(f"Bound violated: {failure}")
    LOGGER.info(
        f"Scenario {report.scenario}: {len(rows)} rows, "
        f"{'valid' if report.valid else 'INVALID'}"
    )
    return report


def _mean_by(rows: list[RunRow], key: Callable[[RunRow], object], column: str):
    groups: dict[object, list[float]] = defaultdict(list)
    for row in rows:
        value = getattr(row, column)
        if value is not None:
            groups[key(row)].append(value)
    return {k: float(np.mean(v)) for k, v in groups.items()}


# ─────────────────────────────────────────────────────────────────────────────
# Batch size
# ─────────────────────────────────────────────────────────────────────────────


def _batch_size_cell(
    cfg: SweepConfig, dataset: CdpDataset, K: int, seed: int
) -> list[RunRow]:
    task = TaskSpec.all()
    config = _train_config(
        cfg,
        seed,
        batch_size=K,
        pairing=_same_class(task, cfg.train.pairing.seed),
        negatives=None,
    )
    checkpoint = train(config, dataset)
    estimate = estimate_mi(
        checkpoint, _estimation_config(cfg, _same_class(task, cfg.estimate.seed)), dataset
    )
    probe = linear_probe(checkpoint, dataset, task)
    return [
        RunRow(
            **_base_row(config, checkpoint, task, probe.accuracy),
            **_estimate_columns(estimate),
        )
    ]


def run_case_batch_size(
    cfg: SweepConfig, *, dataset: CdpDataset | None = None
) -> RunReport:
    """
    Train SameClass(all) encoders over the K_Tr list and compare the in-training
    estimate at K_Tr with the post-training estimate at K_Est.

    """
    sweep = cfg.require_sweep("batch_size")
    dataset = load_dataset(cfg.dataset) if dataset is None else dataset
    cells = [
        partial(_batch_size_cell, cfg, dataset, K, seed)
        for K in sweep.batch_sizes
        for seed in sweep.seeds
    ]
    rows = _flatten(run_cells(cells))

    post = _mean_by(rows, lambda r: r.k_tr, "mi_bits")
    findings = {
        "post_training_bits": {str(k): v for k, v in post.items()},
        "in_training_bits": {
            str(k): v for k, v in _mean_by(rows, lambda r: r.k_tr, "train_mi_bits").items()
        },
        "post_training_spread_bits": max(post.values()) - min(post.values()),
        "min_accuracy": min(row.accuracy for row in rows if row.accuracy is not None),
    }
    return _finish(cfg, rows, findings)


# ─────────────────────────────────────────────────────────────────────────────
# InfoMin
# ─────────────────────────────────────────────────────────────────────────────


def _infomin_cell(
    cfg: SweepConfig,
    dataset: CdpDataset,
    augmentation: str,
    strength: float,
    seed: int,
) -> list[RunRow]:
    sweep = cfg.require_sweep("infomin")
    pairing = PairingConfig(
        kind="augment",
        ops=[augmentation],
        strength=strength,
        seed=cfg.train.pairing.seed,
    )
    config = _train_config(cfg, seed, pairing=pairing, negatives=None)
    checkpoint = train(config, dataset)
    estimate = estimate_mi(
        checkpoint,
        _estimation_config(cfg, pairing.model_copy(update={"seed": cfg.estimate.seed})),
        dataset,
    )
    rows = []
    for name in sweep.probe_tasks:
        task = TaskSpec.parse(name)
        probe = linear_probe(checkpoint, dataset, task)
        rows.append(
            RunRow(
                **_base_row(config, checkpoint, task, probe.accuracy),
                strength=strength,
                augmentation=augmentation,
                **_estimate_columns(estimate),
            )
        )
    return rows


def peak_table(rows: list[RunRow]) -> dict[str, dict[str, float]]:
    """
    Strength with the highest mean accuracy per augmentation and task.
    Ties resolve to the lowest strength.
    """
    accuracy = _mean_by(rows, lambda r: (r.augmentation, r.task, r.strength), "accuracy")
    peaks: dict[str, dict[str, tuple[float, float]]] = defaultdict(dict)
    for (augmentation, task, strength), value in sorted(accuracy.items()):
        best = peaks[augmentation].get(task)
        if best is None or value > best[1]:
            peaks[augmentation][task] = (strength, value)
    return {
        augmentation: {task: peak[0] for task, peak in tasks.items()}
        for augmentation, tasks in peaks.items()
    }


def run_case_infomin(cfg: SweepConfig, *, dataset: CdpDataset | None = None) -> RunReport:
    """
    Sweep a single augmentation's strength; probe every task and estimate MI with
    the training augmentation. Peak locations are reported, not asserted.

    """
    sweep = cfg.require_sweep("infomin")
    dataset = load_dataset(cfg.dataset) if dataset is None else dataset
    cells = [
        partial(_infomin_cell, cfg, dataset, augmentation, strength, seed)
        for augmentation in sweep.augmentations
        for strength in sweep.strengths
        for seed in sweep.seeds
    ]
    rows = _flatten(run_cells(cells))

    peaks = peak_table(rows)
    findings: dict = {
        "peak_strength": peaks,
        "shared_peak": {
            augmentation: len(set(tasks.values())) == 1
            for augmentation, tasks in peaks.items()
        },
    }
    if 0.0 in sweep.strengths:
        findings["degenerate_pairs"] = (
            "Strength 0 yields identical views; those estimates are capped only by "
            "log2(2K_Est - 1)"
        )
    return _finish(cfg, rows, findings, notes=[STRENGTH_AXIS_NOTE])


# ─────────────────────────────────────────────────────────────────────────────
# Task grid
# ─────────────────────────────────────────────────────────────────────────────


def _task_grid_cell(
    cfg: SweepConfig, dataset: CdpDataset, pairing_task: str, seed: int
) -> list[RunRow]:
    sweep = cfg.require_sweep("task_grid")
    config = _train_config(
        cfg,
        seed,
        pairing=_same_class(TaskSpec.parse(pairing_task), cfg.train.pairing.seed),
        negatives=None,
    )
    checkpoint = train(config, dataset)
    rows = []
    for name in sweep.probe_tasks:
        task = TaskSpec.parse(name)
        probe = linear_probe(checkpoint, dataset, task)
        estimate = estimate_mi(
            checkpoint,
            _estimation_config(cfg, _same_class(task, cfg.estimate.seed)),
            dataset,
        )
        rows.append(
            RunRow(
                **_base_row(config, checkpoint, task, probe.accuracy),
                **_estimate_columns(estimate),
            )
        )
    return rows


def run_task_grid(cfg: SweepConfig, *, dataset: CdpDataset | None = None) -> RunReport:
    """
    Train one SameClass encoder per pairing task and fill the pairing x probe-task
    matrices of probe accuracy and SameClass(probe task) MI.

    """
    sweep = cfg.require_sweep("task_grid")
    dataset = load_dataset(cfg.dataset) if dataset is None else dataset
    cells = [
        partial(_task_grid_cell, cfg, dataset, pairing_task, seed)
        for pairing_task in sweep.pairing_tasks
        for seed in sweep.seeds
    ]
    rows = _flatten(run_cells(cells))

    accuracy = _mean_by(rows, lambda r: (r.pairing, r.task), "accuracy")
    findings = {
        "diagonal_accuracy": {
            task: accuracy[(f"same_class({task})", task)]
            for task in sweep.pairing_tasks
            if (f"same_class({task})", task) in accuracy
        },
        "estimator_violations": [
            f"{row.pairing} estimated on {row.task}: {row.mi_bits:.4f} bits "
            f"> H(C) {row.class_entropy_bits:.1f}"
            for row in rows
            if row.theorem_status == "estimator_violation"
        ],
    }
    return _finish(cfg, rows, findings)


# ─────────────────────────────────────────────────────────────────────────────
# Negative sampling
# ─────────────────────────────────────────────────────────────────────────────


def _negative_cell(
    cfg: SweepConfig,
    positives: CdpDataset,
    pool: np.ndarray | None,
    source: NegativeSourceBase | None,
    seed: int,
) -> list[RunRow]:
    sweep = cfg.require_sweep("neg_sample")
    config = _train_config(cfg, seed, negatives=source)
    checkpoint = train(config, positives, negatives=pool)
    rows = []
    for name in sweep.probe_tasks:
        task = TaskSpec.parse(name)
        probe = linear_probe(checkpoint, positives, task)
        rows.append(
            RunRow(
                **_base_row(config, checkpoint, task, probe.accuracy),
                negatives=IN_BATCH if source is None else str(source),
                class_entropy_bits=class_entropy(task),
            )
        )
    return rows


def run_negative_sampling(
    cfg: SweepConfig, *, dataset: CdpDataset | None = None
) -> RunReport:
    """
    Train on the positive split D with negatives drawn from each D⁻ in turn, plus
    the in-batch baseline, and probe every task on D.

    """
    sweep = cfg.require_sweep("neg_sample")
    dataset = load_dataset(cfg.dataset) if dataset is None else dataset
    positives = dataset.where(sweep.positives.attribute, sweep.positives.enum_values())
    if len(positives) == 0:
        raise ValueError(f"Positive split {sweep.positives} is empty")

    sources: list[NegativeSourceBase | None] = [None, *sweep.negatives]
    pools = [
        None if source is None else negative_pool(source, dataset, count=len(positives))
        for source in sources
    ]
    cells = [
        partial(_negative_cell, cfg, positives, pool, source, seed)
        for source, pool in zip(sources, pools)
        for seed in sweep.seeds
    ]
    rows = _flatten(run_cells(cells))

    accuracy = _mean_by(rows, lambda r: r.negatives, "accuracy")
    baseline = accuracy[IN_BATCH]
    findings: dict = {"mean_accuracy": accuracy}
    for source in sweep.negatives:
        label = str(source)
        if isinstance(source, NoiseSource):
            findings.setdefault("noise_below_baseline", {})[label] = (
                accuracy[label] <= baseline
            )
        elif isinstance(source, CdpSubsetSource):
            findings.setdefault("related_near_baseline", {})[label] = (
                accuracy[label] >= baseline - RELATED_SLACK
            )
    return _finish(
        cfg,
        rows,
        findings,
        notes=[f"Positives D = {sweep.positives}; D⁻ pools are cut from CDP"],
    )


# ─────────────────────────────────────────────────────────────────────────────
# Temperature
# ─────────────────────────────────────────────────────────────────────────────


def _temperature_cell(
    cfg: SweepConfig, dataset: CdpDataset, temperature: float, seed: int
) -> list[RunRow]:
    sweep = cfg.require_sweep("temperature")
    config = _train_config(cfg, seed, temperature=temperature, negatives=None)
    checkpoint = train(config, dataset)
    simclr = estimate_mi(
        checkpoint,
        _estimation_config(
            cfg,
            PairingConfig(kind="augment", ops=["crop", "jitter"], seed=cfg.estimate.seed),
        ),
        dataset,
    )
    rows = []
    for name in sweep.probe_tasks:
        task = TaskSpec.parse(name)
        report = metric_report(checkpoint, dataset, task, seed=seed)
        estimate = estimate_mi(
            checkpoint,
            _estimation_config(cfg, _same_class(task, cfg.estimate.seed)),
            dataset,
        )
        rows.append(
            RunRow(
                **_base_row(config, checkpoint, task, report.accuracy),
                **_estimate_columns(estimate),
                mi_simclr_bits=simclr.bits,
                alignment=report.alignment,
                uniformity=report.uniformity,
                tolerance=report.tolerance,
            )
        )
    return rows


def run_temperature_sweep(
    cfg: SweepConfig, *, dataset: CdpDataset | None = None
) -> RunReport:
    """
    One encoder per training temperature; every probe task gets accuracy, both MI
    estimates and the hypersphere metrics, then each metric is correlated with
    accuracy across temperatures.

    """
    sweep = cfg.require_sweep("temperature")
    dataset = load_dataset(cfg.dataset) if dataset is None else dataset
    cells = [
        partial(_temperature_cell, cfg, dataset, temperature, seed)
        for temperature in sweep.temperatures
        for seed in sweep.seeds
    ]
    rows = _flatten(run_cells(cells))

    correlations = [
        CorrelationRow.from_summary(summary, task=task)
        for task, group in rows_frame(rows).groupby("task", sort=False)
        for summary in correlation_summary(group, metrics=TEMPERATURE_METRICS)
    ]
    findings = {
        "best_temperature": {
            task: max(
                (row for row in rows if row.task == task),
                key=lambda row: row.accuracy or 0.0,
            ).temperature
            for task in sweep.probe_tasks
        }
    }
    return _finish(cfg, rows, findings, correlations=correlations)


SCENARIOS: dict[str, Callable[..., RunReport]] = {
    "batch_size": run_case_batch_size,
    "infomin": run_case_infomin,
    "task_grid": run_task_grid,
    "neg_sample": run_negative_sampling,
    "temperature": run_temperature_sweep,
}
