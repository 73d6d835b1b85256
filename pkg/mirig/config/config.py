from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from mirig.cdpgen.attributes import ATTRIBUTE_ORDER, Attribute, TaskSpec
from mirig.config.sources import CdpSubsetSource, NegativeSource
from mirig.constants import (
    DEFAULT_ESTIMATION_TEMPERATURE,
    DEFAULT_EVAL_INTERVAL,
    DEFAULT_IMAGE_SIZE,
    DEFAULT_K_EST,
    DEFAULT_MIX,
    DEFAULT_TEMPERATURE,
    DEFAULT_THEOREM_EPSILON,
    SUPPORTED_IMAGE_SIZES,
)
from mirig.diffengine.optim import OptimizerConfig
from mirig.io import content_hash

AugmentOpName = Literal["crop", "jitter"]
EncoderRecipe = Literal["small_conv", "mlp"]
Scenario = Literal["batch_size", "infomin", "task_grid", "neg_sample", "temperature"]

DEFAULT_TASKS = ["color", "digit", "position", "all"]


def _parse_task(value: str) -> str:
    task = TaskSpec.parse(value)
    if not task.attribute_subset:
        raise ValueError(f"Task '{value}' names no attributes")
    return task.name


class DatasetConfig(BaseModel):
    n: int = Field(default=4096, ge=1)
    seed: int = 0
    size: int = DEFAULT_IMAGE_SIZE
    mix: float = Field(default=DEFAULT_MIX, ge=0, le=1)

    @field_validator("size")
    @classmethod
    def validate_size(cls, value: int) -> int:
        if value not in SUPPORTED_IMAGE_SIZES:
            raise ValueError(f"size must be one of {SUPPORTED_IMAGE_SIZES}")
        return value


class PairingConfig(BaseModel):
    """
    `[pairing]` table: either same-class matching on an attribute subset, or a
    sequence of augmentations sharing one strength.
    """

    kind: Literal["same_class", "augment"] = "same_class"
    attributes: list[Attribute] = Field(default_factory=lambda: list(ATTRIBUTE_ORDER))
    strength: float = Field(default=0.5, ge=0, le=1)
    ops: list[AugmentOpName] = Field(default_factory=lambda: ["crop", "jitter"])
    seed: int = 0

    @model_validator(mode="after")
    def validate_kind(self):
        if self.kind == "same_class":
            if not self.attributes:
                raise ValueError("same_class pairing needs at least one attribute")
            if len(set(self.attributes)) != len(self.attributes):
                raise ValueError("Duplicate attributes in same_class pairing")
        else:
            if not self.ops:
                raise ValueError("augment pairing needs at least one op")
            if len(set(self.ops)) != len(self.ops):
                raise ValueError("Duplicate ops in augment pairing")
        return self

    @property
    def task(self) -> TaskSpec:
        return TaskSpec(tuple(self.attributes))


class TrainConfig(BaseModel):
    batch_size: int = Field(default=16, ge=1)
    steps: int = Field(default=1000, ge=1)
    temperature: float = Field(default=DEFAULT_TEMPERATURE, gt=0)
    pairing: PairingConfig = Field(default_factory=PairingConfig)
    encoder: EncoderRecipe = "small_conv"
    repr_dim: int = Field(default=64, ge=1)
    hidden_dim: int = Field(default=64, ge=1)
    proj_dim: int = Field(default=32, ge=1)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    seed: int = 0
    eval_interval: int = Field(default=DEFAULT_EVAL_INTERVAL, ge=1)

    # Negatives drawn from a separate dataset instead of the batch
    negatives: NegativeSource | None = None
    num_negatives: int | None = Field(default=None, ge=1)

    # Seeded batches built ahead of the optimizer on a worker thread; results do
    # not depend on it, so it stays out of the hash
    prefetch: int = Field(default=2, ge=0)

    def config_hash(self) -> str:
        return content_hash(self.model_dump(mode="json", exclude={"prefetch"}))

    @property
    def negatives_per_batch(self) -> int:
        """
        Defaults to 2K - 2, the number of in-batch negatives each anchor sees.
        """
        if self.num_negatives is not None:
            return self.num_negatives
        return max(2 * self.batch_size - 2, 1)


class EstimationConfig(BaseModel):
    batch_size: int = Field(default=DEFAULT_K_EST, ge=2)
    pairing: PairingConfig = Field(default_factory=PairingConfig)
    steps: int = Field(default=500, ge=1)
    eval_batches: int = Field(default=4, ge=1)
    temperature: float = Field(default=DEFAULT_ESTIMATION_TEMPERATURE, gt=0)
    hidden_dim: int = Field(default=64, ge=1)
    proj_dim: int = Field(default=32, ge=1)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    epsilon: float = Field(default=DEFAULT_THEOREM_EPSILON, gt=0)
    seed: int = 0


class SweepSection(BaseModel):
    scenario: Scenario
    batch_sizes: list[int] = Field(
        default_factory=lambda: [2, 4, 8, 16, 32, 64, 128, 256]
    )
    strengths: list[float] = Field(
        default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0]
    )
    augmentations: list[AugmentOpName] = Field(
        default_factory=lambda: ["jitter", "crop"]
    )
    pairing_tasks: list[str] = Field(default_factory=lambda: list(DEFAULT_TASKS))
    probe_tasks: list[str] = Field(default_factory=lambda: list(DEFAULT_TASKS))
    positives: CdpSubsetSource = Field(
        default_factory=lambda: CdpSubsetSource.model_validate("cdp://colors/red,green")
    )
    negatives: list[NegativeSource] = Field(
        default_factory=lambda: [
            "cdp://colors/blue,white",
            "background://texture",
            "noise://uniform",
        ],
        validate_default=True,
    )
    temperatures: list[float] = Field(default_factory=lambda: [0.1, 0.3, 0.5])
    seeds: list[int] = Field(default_factory=lambda: [0])

    @field_validator(
        "batch_sizes",
        "strengths",
        "augmentations",
        "pairing_tasks",
        "probe_tasks",
        "negatives",
        "temperatures",
        "seeds",
    )
    @classmethod
    def validate_nonempty(cls, value: list) -> list:
        if not value:
            raise ValueError("Sweep lists must not be empty")
        return value

    @field_validator("batch_sizes")
    @classmethod
    def validate_batch_sizes(cls, value: list[int]) -> list[int]:
        if any(k < 1 for k in value):
            raise ValueError("Batch sizes must be at least 1")
        return value

    @field_validator("strengths")
    @classmethod
    def validate_strengths(cls, value: list[float]) -> list[float]:
        if any(not 0 <= s <= 1 for s in value):
            raise ValueError("Strengths must lie in [0, 1]")
        return value

    @field_validator("temperatures")
    @classmethod
    def validate_temperatures(cls, value: list[float]) -> list[float]:
        if any(t <= 0 for t in value):
            raise ValueError("Temperatures must be positive")
        return value

    @field_validator("pairing_tasks", "probe_tasks")
    @classmethod
    def validate_tasks(cls, value: list[str]) -> list[str]:
        return [_parse_task(v) for v in value]


class SweepConfig(BaseModel):
    """
    Root TOML document: `[dataset]`, `[train]`, `[estimate]` and, for the sweep
    commands, `[sweep]`.
    """

    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    estimate: EstimationConfig = Field(default_factory=EstimationConfig)
    sweep: SweepSection | None = None
    output_dir: Path | None = None

    def config_hash(self) -> str:
        return content_hash(
            self.model_dump(
                mode="json",
                exclude={"output_dir": True, "train": {"prefetch": True}},
            )
        )

    def require_sweep(self, scenario: Scenario) -> SweepSection:
        if self.sweep is None:
            raise ValueError(f"Config has no [sweep] table for scenario '{scenario}'")
        if self.sweep.scenario != scenario:
            raise ValueError(
                f"Config describes scenario '{self.sweep.scenario}', not '{scenario}'"
            )
        return self.sweep


class HarnessSettings(BaseSettings):
    """
    Environment-driven runtime settings, e.g. `MIRIG_THREADS=4`.
    """

    model_config = SettingsConfigDict(env_prefix="MIRIG_")

    threads: int = Field(default=1, ge=1)
