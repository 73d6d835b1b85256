from mirig.objective.discrete import (
    DiscreteEstimate as DiscreteEstimate,
    NotNormalizedError as NotNormalizedError,
    estimate_discrete_mi as estimate_discrete_mi,
    exact_mi_discrete as exact_mi_discrete,
    is_exchangeable as is_exchangeable,
    random_joint as random_joint,
    symmetric_joint as symmetric_joint,
)
from mirig.objective.loss import (
    BoundViolationError as BoundViolationError,
    InvalidEmbeddingError as InvalidEmbeddingError,
    LossValue as LossValue,
    MiValueBits as MiValueBits,
    ProvenanceError as ProvenanceError,
    add_contrastive_terms as add_contrastive_terms,
    assert_bound as assert_bound,
    bound_bits as bound_bits,
    contrastive_targets as contrastive_targets,
    estimated_mi_bits as estimated_mi_bits,
    mi_bits_from_nats as mi_bits_from_nats,
    nt_xent as nt_xent,
    nt_xent_external as nt_xent_external,
)
