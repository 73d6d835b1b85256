from mirig.metrics.correlation import (
    METRIC_SIGNS as METRIC_SIGNS,
    CorrelationSummary as CorrelationSummary,
    UndefinedCorrelationError as UndefinedCorrelationError,
    correlation_summary as correlation_summary,
    kendall_tau as kendall_tau,
    pearson as pearson,
)
from mirig.metrics.probe import (
    ProbeResult as ProbeResult,
    linear_probe as linear_probe,
    probe_accuracy as probe_accuracy,
)
from mirig.metrics.report import (
    MetricReport as MetricReport,
    metric_report as metric_report,
)
from mirig.metrics.representation import (
    DegenerateInputError as DegenerateInputError,
    RepresentationMetrics as RepresentationMetrics,
    RepresentationSet as RepresentationSet,
    alignment as alignment,
    representation_metrics as representation_metrics,
    representation_set as representation_set,
    tolerance as tolerance,
    uniformity as uniformity,
)
