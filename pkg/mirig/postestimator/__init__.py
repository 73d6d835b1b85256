from mirig.postestimator.critic import critic_graph as critic_graph
from mirig.postestimator.estimate import (
    BoundCheck as BoundCheck,
    HonestyCheck as HonestyCheck,
    InsufficientHeldOutError as InsufficientHeldOutError,
    MiEstimate as MiEstimate,
    TheoremPremiseError as TheoremPremiseError,
    TheoremStatus as TheoremStatus,
    check_bound as check_bound,
    estimate_mi as estimate_mi,
    honesty_check as honesty_check,
    theorem1_status as theorem1_status,
)
