from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

from mirig.diffengine.errors import ShapeError
from mirig.diffengine.ops import OPS
from mirig.diffengine.shapes import Dim, Shape
from mirig.diffengine.tensor import InitScheme, ParamSpec

INPUT_OP = "input"


@dataclass(frozen=True)
class Node:
    id: int
    op: str
    inputs: tuple[int, ...]
    params: tuple[str, ...]
    attrs: Mapping[str, Any]
    shape: Shape


@dataclass(frozen=True)
class Graph:
    """
    An immutable DAG in topological order. Node ids equal their position, and every
    edge points from a smaller id to a larger one.

    """

    nodes: tuple[Node, ...]
    inputs: Mapping[str, int]
    outputs: Mapping[str, int]
    params: Mapping[str, ParamSpec]

    def input_shapes(self) -> dict[str, Shape]:
        return {name: self.nodes[node_id].shape for name, node_id in self.inputs.items()}

    def output_shape(self, name: str) -> Shape:
        return self.nodes[self.outputs[name]].shape


@dataclass(frozen=True)
class Ref:
    """
    Handle to a node while the graph is being built.

    """

    id: int
    shape: Shape


@dataclass
class GraphBuilder:
    """
    Records ops in call order, checking every shape rule as it goes so that a
    malformed graph fails at construction rather than at execution.

    """

    _nodes: list[Node] = field(default_factory=list)
    _inputs: dict[str, int] = field(default_factory=dict)
    _outputs: dict[str, int] = field(default_factory=dict)
    _params: dict[str, ParamSpec] = field(default_factory=dict)

    def input(self, name: str, shape: tuple[Dim, ...]) -> Ref:
        if name in self._inputs:
            raise ShapeError(f"Duplicate graph input '{name}'")
        ref = self._add(INPUT_OP, (), (), {"name": name}, tuple(shape))
        self._inputs[name] = ref.id
        return ref

    def param(
        self,
        name: str,
        shape: tuple[int, ...],
        *,
        init: InitScheme = "he_uniform",
        fan_in: int | None = None,
    ) -> str:
        spec = ParamSpec(
            shape=tuple(shape),
            init=init,
            fan_in=fan_in if fan_in is not None else (shape[0] if shape else 1),
        )
        existing = self._params.get(name)
        if existing is not None and existing.shape != spec.shape:
            raise ShapeError(
                f"Parameter '{name}' redeclared with shape {spec.shape}, "
                f"was {existing.shape}"
            )
        self._params.setdefault(name, spec)
        return name

    def op(
        self,
        op: str,
        *inputs: Ref,
        params: tuple[str, ...] = (),
        **attrs: Any,
    ) -> Ref:
        if op not in OPS:
            raise ShapeError(f"Unknown op '{op}'")
        for param in params:
            if param not in self._params:
                raise ShapeError(f"Parameter '{param}' used before declaration")
        return self._add(op, tuple(r.id for r in inputs), params, attrs, None)

    def output(self, name: str, ref: Ref) -> Ref:
        self._outputs[name] = ref.id
        return ref

    def build(self) -> Graph:
        if not self._outputs:
            raise ShapeError("Graph declares no outputs")
        return Graph(
            nodes=tuple(self._nodes),
            inputs=MappingProxyType(dict(self._inputs)),
            outputs=MappingProxyType(dict(self._outputs)),
            params=MappingProxyType(dict(self._params)),
        )

    # Shorthands for the ops used by model builders

    def affine(self, x: Ref, weight: str, bias: str | None = None) -> Ref:
        return self.op("affine", x, params=(weight,) if bias is None else (weight, bias))

    def conv2d(self, x: Ref, weight: str, bias: str | None = None, *, stride: int = 1) -> Ref:
        params = (weight,) if bias is None else (weight, bias)
        return self.op("conv2d", x, params=params, stride=stride)

    def relu(self, x: Ref) -> Ref:
        return self.op("relu", x)

    def flatten(self, x: Ref) -> Ref:
        return self.op("flatten", x)

    def gap(self, x: Ref) -> Ref:
        return self.op("gap", x)

    def l2norm(self, x: Ref) -> Ref:
        return self.op("l2norm", x)

    def logsumexp(self, x: Ref) -> Ref:
        return self.op("logsumexp", x)

    def add(self, a: Ref, b: Ref) -> Ref:
        return self.op("add", a, b)

    def sub(self, a: Ref, b: Ref) -> Ref:
        return self.op("sub", a, b)

    def mul(self, a: Ref, b: Ref) -> Ref:
        return self.op("mul", a, b)

    def scale(self, x: Ref, factor: float) -> Ref:
        return self.op("scale", x, factor=float(factor))

    def concat(self, *xs: Ref) -> Ref:
        return self.op("concat", *xs)

    def matmul_t(self, a: Ref, c: Ref, scale: float = 1.0) -> Ref:
        return self.op("matmul_t", a, c, scale=float(scale))

    def mean(self, x: Ref) -> Ref:
        return self.op("mean", x)

    def sum(self, x: Ref) -> Ref:
        return self.op("sum", x)

    def contrastive_xent(self, scores: Ref, targets: Ref, mask: Ref) -> Ref:
        return self.op("contrastive_xent", scores, targets, mask)

    def _add(
        self,
        op: str,
        inputs: tuple[int, ...],
        params: tuple[str, ...],
        attrs: dict[str, Any],
        shape: Shape | None,
    ) -> Ref:
        node_id = len(self._nodes)
        if shape is None:
            impl = OPS[op]
            impl.check_arity(len(inputs), len(params))
            shape = impl.infer_shape(
                [self._nodes[i].shape for i in inputs],
                [self._params[p].shape for p in params],
                attrs,
            )
        node = Node(
            id=node_id,
            op=op,
            inputs=inputs,
            params=params,
            attrs=MappingProxyType(dict(attrs)),
            shape=tuple(shape),
        )
        self._nodes.append(node)
        return Ref(id=node_id, shape=node.shape)
