from mirig.diffengine.engine import (
    evaluate as evaluate,
    forward_backward as forward_backward,
)
from mirig.diffengine.errors import (
    NonFiniteError as NonFiniteError,
    ShapeError as ShapeError,
)
from mirig.diffengine.gradcheck import (
    GradCheckResult as GradCheckResult,
    grad_check as grad_check,
)
from mirig.diffengine.graph import (
    Graph as Graph,
    GraphBuilder as GraphBuilder,
    Node as Node,
    Ref as Ref,
)
from mirig.diffengine.optim import (
    Optimizer as Optimizer,
    OptimizerConfig as OptimizerConfig,
)
from mirig.diffengine.shapes import SymDim as SymDim
from mirig.diffengine.tensor import (
    ParamSet as ParamSet,
    ParamSpec as ParamSpec,
    as_tensor as as_tensor,
)
