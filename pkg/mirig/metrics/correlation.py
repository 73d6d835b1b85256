from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.stats import kendalltau, pearsonr


class UndefinedCorrelationError(ValueError):
    pass


def _paired(xs: ArrayLike, ys: ArrayLike) -> tuple[NDArray, NDArray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"Need two equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("Correlation needs at least two points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("Correlation inputs must be finite")
    return x, y


def _check_varies(x: NDArray, y: NDArray) -> None:
    for name, values in (("xs", x), ("ys", y)):
        if np.all(values == values[0]):
            raise UndefinedCorrelationError(f"{name} is constant; correlation undefined")


def pearson(xs: ArrayLike, ys: ArrayLike) -> float:
    x, y = _paired(xs, ys)
    _check_varies(x, y)
    return float(pearsonr(x, y).statistic)


def kendall_tau(xs: ArrayLike, ys: ArrayLike) -> float:
    """
    Tie-corrected tau-b; on tie-free inputs this is (concordant - discordant) over
    the number of pairs.
    """
    x, y = _paired(xs, ys)
    _check_varies(x, y)
    return float(kendalltau(x, y, variant="b").statistic)


@dataclass(frozen=True)
class CorrelationSummary:
    metric: str
    pearson: float | None
    kendall: float | None
    n: int


# Lower alignment and uniformity mean better-clustered, better-spread embeddings
METRIC_SIGNS: dict[str, float] = {
    "mi_class_bits": 1.0,
    "mi_simclr_bits": 1.0,
    "alignment": -1.0,
    "uniformity": -1.0,
    "tolerance": 1.0,
}


def correlation_summary(
    rows: pd.DataFrame,
    *,
    target: str = "accuracy",
    metrics: Mapping[str, float] | Sequence[str] | None = None,
) -> list[CorrelationSummary]:
    """
    Correlate `target` against each metric column present in `rows`, sign-flipping
    metrics where lower is better. Undefined correlations are reported as None.

    """
    if metrics is None:
        metrics = METRIC_SIGNS
    elif not isinstance(metrics, Mapping):
        metrics = {name: METRIC_SIGNS.get(name, 1.0) for name in metrics}

    summaries = []
    for name, sign in metrics.items():
        if name not in rows.columns or target not in rows.columns:
            continue
        frame = rows[[target, name]].dropna()
        xs = frame[target].to_numpy(dtype=np.float64)
        ys = sign * frame[name].to_numpy(dtype=np.float64)
        try:
            rho, tau = pearson(xs, ys), kendall_tau(xs, ys)
        except ValueError:
            rho, tau = None, None
        summaries.append(
            CorrelationSummary(metric=name, pearson=rho, kendall=tau, n=len(frame))
        )
    return summaries
