import platform
from importlib.metadata import PackageNotFoundError, version

import psutil

from mirig.config import SweepConfig
from mirig.harness.report import Provenance

STRENGTH_AXIS_NOTE = (
    "Strength values are the augmentation parameter in [0, 1], not a scale relative "
    "to H(C)."
)


def package_version() -> str:
    try:
        return version("mirig")
    except PackageNotFoundError:
        return "0+unknown"


def collect_provenance(config: SweepConfig, notes: list[str] | None = None) -> Provenance:
    return Provenance(
        config_hash=config.config_hash(),
        version=package_version(),
        python=platform.python_version(),
        platform=platform.platform(),
        logical_cpus=psutil.cpu_count(logical=True),
        memory_bytes=psutil.virtual_memory().total,
        notes=list(notes or []),
    )
