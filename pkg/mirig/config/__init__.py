from .config import (
    DatasetConfig as DatasetConfig,
    EstimationConfig as EstimationConfig,
    HarnessSettings as HarnessSettings,
    PairingConfig as PairingConfig,
    SweepConfig as SweepConfig,
    SweepSection as SweepSection,
    TrainConfig as TrainConfig,
)
from .sources import NegativeSource as NegativeSource
