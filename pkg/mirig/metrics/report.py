from pydantic import BaseModel, Field

from mirig.cdpgen import CdpDataset, TaskSpec
from mirig.metrics.probe import linear_probe
from mirig.metrics.representation import representation_metrics, representation_set
from mirig.pairing import PairingStrategy, SameClass
from mirig.trainer.checkpoint import EncoderCheckpoint


class MetricReport(BaseModel):
    task: str
    pairing: str
    accuracy: float = Field(ge=0, le=1)
    probe_degenerate: bool = False
    alignment: float = Field(ge=0)
    uniformity: float = Field(le=0)
    tolerance: float = Field(ge=-1, le=1)


def metric_report(
    checkpoint: EncoderCheckpoint,
    dataset: CdpDataset,
    task: TaskSpec,
    pairing: PairingStrategy | None = None,
    *,
    seed: int = 0,
) -> MetricReport:
    pairing = SameClass(task) if pairing is None else pairing
    probe = linear_probe(checkpoint, dataset, task)
    metrics = representation_metrics(
        representation_set(checkpoint, dataset, task, pairing, seed=seed)
    )
    # Rounding can push values of a collapsed set a hair past their limits
    return MetricReport(
        task=task.name,
        pairing=pairing.describe(),
        accuracy=probe.accuracy,
        probe_degenerate=probe.degenerate,
        alignment=max(metrics.alignment, 0.0),
        uniformity=min(metrics.uniformity, 0.0),
        tolerance=min(max(metrics.tolerance, -1.0), 1.0),
    )
