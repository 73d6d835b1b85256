import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from mirig.cdpgen import CdpDataset, TaskSpec
from mirig.logger import LOGGER
from mirig.trainer.checkpoint import EncoderCheckpoint, encode

PROBE_MAX_ITER = 5000
PROBE_TOLERANCE = 1e-5


@dataclass(frozen=True)
class ProbeResult:
    accuracy: float
    degenerate: bool
    n_train: int
    n_eval: int


def probe_accuracy(
    train_features: NDArray,
    train_labels: NDArray,
    eval_features: NDArray,
    eval_labels: NDArray,
) -> ProbeResult:
    """
    Multinomial logistic regression on standardized features, fit full-batch with
    L-BFGS until the gradient tolerance or the iteration cap.

    Features with no variance in any dimension fall back to predicting the most
    frequent training label, flagged as degenerate.

    """
    train_features = np.asarray(train_features, dtype=np.float64)
    eval_features = np.asarray(eval_features, dtype=np.float64)
    missing = set(np.unique(eval_labels)) - set(np.unique(train_labels))
    if missing:
        raise ValueError(f"Eval classes {sorted(missing)} never occur in training")

    degenerate = bool(np.all(np.ptp(train_features, axis=0) == 0))
    classes, counts = np.unique(train_labels, return_counts=True)
    if degenerate or classes.size < 2:
        if degenerate:
            LOGGER.warning("Probe features are constant; predicting the majority class")
        majority = classes[np.argmax(counts)]
        accuracy = float(np.mean(eval_labels == majority))
    else:
        model = make_pipeline(
            StandardScaler(),
            LogisticRegression(C=1.0, max_iter=PROBE_MAX_ITER, tol=PROBE_TOLERANCE),
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            model.fit(train_features, train_labels)
        if any(issubclass(w.category, ConvergenceWarning) for w in caught):
            LOGGER.warning(f"Probe stopped at {PROBE_MAX_ITER} iterations unconverged")
        accuracy = float(model.score(eval_features, eval_labels))

    return ProbeResult(
        accuracy=accuracy,
        degenerate=degenerate,
        n_train=len(train_labels),
        n_eval=len(eval_labels),
    )


def linear_probe(
    checkpoint: EncoderCheckpoint,
    dataset: CdpDataset,
    task: TaskSpec,
) -> ProbeResult:
    """
    Train-split fit and eval-split accuracy of a linear classifier for `task` on
    encoder outputs h (not the projection head's output).
    """
    features = encode(checkpoint, dataset.images)
    labels = dataset.class_ids(task)
    train, evals = dataset.split("train"), dataset.split("eval")
    result = probe_accuracy(features[train], labels[train], features[evals], labels[evals])
    LOGGER.info(f"Linear probe on {task.name}: accuracy {result.accuracy:.4f}")
    return result
