from pathlib import Path
from typing import TYPE_CHECKING, Callable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

if TYPE_CHECKING:
    from mirig.harness.report import RunReport

# Fixed salt and no timestamp keep repeated SVG renders byte-identical
SVG_RC = {"svg.hashsalt": "mirig", "svg.fonttype": "path"}
SVG_METADATA = {"Date": None, "Creator": None}

TASK_ORDER = ["color", "digit", "position", "all"]


def _save(figure: Figure, path: Path) -> Path:
    figure.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(figure)
    return path


def _task_order(values) -> list[str]:
    known = [task for task in TASK_ORDER if task in set(values)]
    return known + sorted(set(values) - set(known))


def _batch_size(frame: pd.DataFrame, directory: Path) -> list[Path]:
    curves = frame.groupby("k_tr", sort=True).mean(numeric_only=True)
    ks = curves.index.to_numpy()
    figure, (top, bottom) = plt.subplots(
        2, 1, figsize=(6, 6), sharex=True, height_ratios=[3, 1]
    )
    top.plot(ks, curves["class_entropy_bits"], "k-", label="H(C)")
    top.plot(ks, curves["train_mi_bits"], "o-", color="tab:blue", label="training MI")
    top.plot(ks, curves["mi_bits"], "s-", color="tab:red", label="post-training MI")
    top.plot(
        ks, curves["train_bound_bits"], ":", color="tab:gray", label="log2(2K - 1)"
    )
    top.set_ylabel("bits")
    top.legend(loc="lower right")
    bottom.plot(ks, 100 * curves["accuracy"], "o-", color="tab:green")
    bottom.set_ylabel("accuracy (%)")
    bottom.set_xlabel("training batch size K")
    bottom.set_xscale("log", base=2)
    return [_save(figure, directory / "batch_size.svg")]


def _infomin(frame: pd.DataFrame, directory: Path) -> list[Path]:
    paths = []
    for augmentation, group in frame.groupby("augmentation", sort=True):
        figure, axis = plt.subplots(figsize=(6, 4))
        for task in _task_order(group["task"]):
            curve = (
                group[group["task"] == task]
                .groupby("strength", sort=True)
                .mean(numeric_only=True)
            )
            axis.plot(curve["mi_bits"], 100 * curve["accuracy"], "o-", label=task)
        axis.set_xlabel("post-training MI (bits)")
        axis.set_ylabel("accuracy (%)")
        axis.set_title(f"{augmentation} strength sweep")
        axis.legend()
        paths.append(_save(figure, directory / f"infomin_{augmentation}.svg"))
    return paths


def _heatmap(table: pd.DataFrame, title: str, path: Path, fmt: str) -> Path:
    figure, axis = plt.subplots(figsize=(5, 4.5))
    image = axis.imshow(table.to_numpy(dtype=float), cmap="viridis")
    axis.set_xticks(range(table.shape[1]), table.columns)
    axis.set_yticks(range(table.shape[0]), table.index)
    axis.set_xlabel("probe task")
    axis.set_ylabel("training pairing")
    axis.set_title(title)
    for (row, column), value in np.ndenumerate(table.to_numpy(dtype=float)):
        axis.text(column, row, format(value, fmt), ha="center", va="center", color="w")
    figure.colorbar(image, ax=axis)
    return _save(figure, path)


def _task_grid(frame: pd.DataFrame, directory: Path) -> list[Path]:
    tasks = _task_order(frame["task"])
    pairings = [f"same_class({task})" for task in tasks if task in set(frame["task"])]
    pairings = [p for p in pairings if p in set(frame["pairing"])] or sorted(
        set(frame["pairing"])
    )
    paths = []
    for column, title, fmt in (
        ("accuracy", "probe accuracy", ".2f"),
        ("mi_bits", "post-training MI (bits)", ".2f"),
    ):
        table = frame.pivot_table(
            index="pairing", columns="task", values=column, aggfunc="mean"
        ).reindex(index=pairings, columns=tasks)
        paths.append(_heatmap(table, title, directory / f"task_grid_{column}.svg", fmt))
    return paths


def _negative_sampling(frame: pd.DataFrame, directory: Path) -> list[Path]:
    sources = list(dict.fromkeys(frame["negatives"]))
    tasks = _task_order(frame["task"])
    width = 0.8 / max(len(tasks), 1)
    figure, axis = plt.subplots(figsize=(7, 4))
    for offset, task in enumerate(tasks):
        means = (
            frame[frame["task"] == task]
            .groupby("negatives", sort=False)["accuracy"]
            .mean()
            .reindex(sources)
        )
        axis.bar(
            np.arange(len(sources)) + offset * width,
            100 * means.to_numpy(dtype=float),
            width,
            label=task,
        )
    axis.set_xticks(np.arange(len(sources)) + 0.4 - width / 2, sources, rotation=15)
    axis.set_ylabel("accuracy (%)")
    axis.set_title("negative-sample dataset")
    axis.legend()
    return [_save(figure, directory / "negative_sampling.svg")]


def _temperature(frame: pd.DataFrame, directory: Path) -> list[Path]:
    metrics = [
        m
        for m in ("mi_bits", "mi_simclr_bits", "alignment", "uniformity", "tolerance")
        if frame[m].notna().any()
    ]
    figure, axes = plt.subplots(
        1, max(len(metrics), 1), figsize=(3 * max(len(metrics), 1), 3), squeeze=False
    )
    for axis, metric in zip(axes[0], metrics):
        for task in _task_order(frame["task"]):
            group = frame[frame["task"] == task]
            axis.scatter(group[metric], 100 * group["accuracy"], label=task, s=14)
        axis.set_xlabel(metric)
    axes[0][0].set_ylabel("accuracy (%)")
    axes[0][0].legend(fontsize="small")
    figure.tight_layout()
    return [_save(figure, directory / "temperature.svg")]


_RENDERERS: dict[str, Callable[[pd.DataFrame, Path], list[Path]]] = {
    "batch_size": _batch_size,
    "infomin": _infomin,
    "task_grid": _task_grid,
    "neg_sample": _negative_sampling,
    "temperature": _temperature,
}


def render_figures(report: "RunReport", directory: Path) -> list[Path]:
    frame = report.frame()
    if frame.empty:
        return []
    with plt.rc_context(SVG_RC):
        return _RENDERERS[report.scenario](frame, directory)
