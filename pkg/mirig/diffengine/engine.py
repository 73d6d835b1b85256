from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mirig.diffengine.errors import NonFiniteError, ShapeError
from mirig.diffengine.graph import INPUT_OP, Graph
from mirig.diffengine.ops import OPS
from mirig.diffengine.shapes import bind_shapes, format_shape
from mirig.diffengine.tensor import ParamSet, as_tensor


@dataclass
class Trace:
    outputs: dict[str, NDArray]
    grads: dict[str, NDArray] = field(default_factory=dict)
    kinks: dict[int, tuple[NDArray, bool]] = field(default_factory=dict)
    bindings: dict[str, int] = field(default_factory=dict)


def forward_backward(
    graph: Graph,
    params: ParamSet,
    inputs: Mapping[str, ArrayLike],
    *,
    loss: str = "loss",
    dtype: type[np.floating] = np.float32,
) -> tuple[dict[str, NDArray], dict[str, NDArray]]:
    """
    Run the graph forward, then accumulate gradients of the scalar output `loss`
    into a slot for every parameter the graph declares.

    The default float32 path is the training path; passing float64 runs the same
    graph as a shadow for gradient checking. Results are bit-identical across
    repeated calls with identical arguments.

    """
    trace = run(graph, params, inputs, loss=loss, dtype=dtype)
    return trace.outputs, trace.grads


def evaluate(
    graph: Graph,
    params: ParamSet,
    inputs: Mapping[str, ArrayLike],
    *,
    dtype: type[np.floating] = np.float32,
) -> dict[str, NDArray]:
    return run(graph, params, inputs, loss=None, dtype=dtype).outputs


def run(
    graph: Graph,
    params: ParamSet,
    inputs: Mapping[str, ArrayLike],
    *,
    loss: str | None,
    dtype: type[np.floating] = np.float32,
    record_kinks: bool = False,
) -> Trace:
    params.check_specs(graph.params)
    arrays = {name: as_tensor(value, dtype) for name, value in inputs.items()}
    bindings = bind_shapes(
        graph.input_shapes(), {name: a.shape for name, a in arrays.items()}
    )

    loss_id: int | None = None
    if loss is not None:
        if loss not in graph.outputs:
            raise ShapeError(f"Graph has no output named '{loss}'")
        loss_shape = graph.output_shape(loss)
        if loss_shape != ():
            raise ShapeError(
                f"Gradients need a scalar output, '{loss}' has shape "
                f"{format_shape(loss_shape)}"
            )
        loss_id = graph.outputs[loss]

    param_values = {name: params[name].astype(dtype) for name in graph.params}
    values: list[NDArray] = []
    caches: list[Any] = []
    trace = Trace(outputs={}, bindings=bindings)

    for node in graph.nodes:
        if node.op == INPUT_OP:
            value, cache = arrays[node.attrs["name"]], None
        else:
            impl = OPS[node.op]
            value, cache = impl.forward(
                [values[i] for i in node.inputs],
                [param_values[p] for p in node.params],
                node.attrs,
            )
            if record_kinks:
                pattern = impl.kink_pattern(cache)
                if pattern is not None:
                    trace.kinks[node.id] = pattern
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(
                f"Non-finite value produced by node {node.id} ({node.op})",
                node_id=node.id,
            )
        values.append(value)
        caches.append(cache)

    trace.outputs = {name: values[i].copy() for name, i in graph.outputs.items()}
    if loss_id is None:
        return trace

    grads = {name: np.zeros_like(v) for name, v in param_values.items()}
    node_grads: dict[int, NDArray] = {loss_id: np.ones((), dtype=dtype)}
    for node in reversed(graph.nodes[: loss_id + 1]):
        dy = node_grads.pop(node.id, None)
        if dy is None or node.op == INPUT_OP:
            continue
        dxs, dps = OPS[node.op].backward(dy, caches[node.id], node.attrs)
        for input_id, dx in zip(node.inputs, dxs):
            if dx is None:
                continue
            if input_id in node_grads:
                node_grads[input_id] = node_grads[input_id] + dx
            else:
                node_grads[input_id] = dx
        for name, dp in zip(node.params, dps):
            grads[name] += dp

    trace.grads = grads
    return trace
