import numpy as np
import pytest
from scipy.stats import chi2_contingency

from mirig.cdpgen import Attribute, TaskSpec, class_entropy, sample_attributes
from mirig.cdpgen.attributes import ATTRIBUTE_ORDER, class_ids


def _attribute_table(seed: int, n: int) -> np.ndarray:
    return np.array([sample_attributes(seed, i).as_indices() for i in range(n)])


@pytest.fixture(scope="module")
def large_table() -> np.ndarray:
    return _attribute_table(seed=1, n=65_536)


def test_sample_attributes_is_deterministic() -> None:
    assert sample_attributes(5, 17) == sample_attributes(5, 17)
    draws = {sample_attributes(5, i) for i in range(64)}
    assert len(draws) > 1


def test_marginals_are_uniform(large_table: np.ndarray) -> None:
    for column in range(3):
        frequencies = np.bincount(large_table[:, column], minlength=4) / len(
            large_table
        )
        assert np.all((frequencies >= 0.24) & (frequencies <= 0.26)), frequencies


@pytest.mark.parametrize("first,second", [(0, 1), (0, 2), (1, 2)])
def test_attributes_are_independent(
    large_table: np.ndarray, first: int, second: int
) -> None:
    contingency = np.zeros((4, 4), dtype=np.int64)
    np.add.at(contingency, (large_table[:, first], large_table[:, second]), 1)
    _, p_value, _, _ = chi2_contingency(contingency)
    assert p_value > 0.001


@pytest.mark.parametrize(
    "task,bits",
    [
        (TaskSpec.of("color"), 2.0),
        (TaskSpec.all(), 6.0),
        (TaskSpec(()), 0.0),
        (TaskSpec.of("digit", "position"), 4.0),
    ],
)
def test_class_entropy(task: TaskSpec, bits: float) -> None:
    assert class_entropy(task) == bits


def test_entropy_is_additive_over_disjoint_subsets() -> None:
    for attribute in ATTRIBUTE_ORDER:
        rest = TaskSpec(tuple(a for a in ATTRIBUTE_ORDER if a != attribute))
        assert class_entropy(TaskSpec.of(attribute)) + class_entropy(
            rest
        ) == class_entropy(TaskSpec.all())


@pytest.mark.parametrize(
    "raw,expected,classes",
    [
        ("color", (Attribute.COLOR,), 4),
        ("digit,color", (Attribute.COLOR, Attribute.DIGIT), 16),
        ("position+color", (Attribute.COLOR, Attribute.POSITION), 16),
        ("all", ATTRIBUTE_ORDER, 64),
    ],
)
def test_task_parse(raw: str, expected: tuple, classes: int) -> None:
    task = TaskSpec.parse(raw)
    assert task.attribute_subset == expected
    assert task.num_classes == classes


def test_task_rejects_duplicates_and_unknowns() -> None:
    with pytest.raises(ValueError):
        TaskSpec.of("color", "color")
    with pytest.raises(ValueError):
        TaskSpec.parse("shape")


def test_class_ids_cover_joint_classes() -> None:
    labels = np.array([[0, 0, 0], [3, 3, 3], [1, 2, 3]], dtype=np.uint8)
    assert class_ids(labels, TaskSpec.all()).tolist() == [0, 63, 1 * 16 + 2 * 4 + 3]
    assert class_ids(labels, TaskSpec.of("digit")).tolist() == [0, 3, 2]
    assert class_ids(labels, TaskSpec(())).tolist() == [0, 0, 0]
