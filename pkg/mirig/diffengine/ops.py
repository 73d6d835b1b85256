from abc import ABC, abstractmethod
from math import prod
from typing import Any, ClassVar, Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray

from mirig.diffengine.errors import ShapeError
from mirig.diffengine.shapes import Dim, Shape, format_shape
from mirig.logger import LOGGER

L2_GUARD = 1e-6

Grads = tuple[list[NDArray | None], list[NDArray]]


class Op(ABC):
    """
    A primitive with a shape rule, a forward pass that returns a cache, and a
    backward pass that maps the output gradient to input and parameter gradients.

    Ops are stateless; everything needed for backward lives in the cache.

    """

    name: ClassVar[str]
    arity: ClassVar[int | None] = 1
    param_counts: ClassVar[tuple[int, ...]] = (0,)

    def check_arity(self, n_inputs: int, n_params: int) -> None:
        if self.arity is not None and n_inputs != self.arity:
            raise ShapeError(f"{self.name} takes {self.arity} inputs, got {n_inputs}")
        if n_params not in self.param_counts:
            raise ShapeError(
                f"{self.name} takes {self.param_counts} parameters, got {n_params}"
            )

    @abstractmethod
    def infer_shape(
        self,
        inputs: Sequence[Shape],
        params: Sequence[tuple[int, ...]],
        attrs: Mapping[str, Any],
    ) -> Shape: ...

    @abstractmethod
    def forward(
        self,
        xs: Sequence[NDArray],
        ps: Sequence[NDArray],
        attrs: Mapping[str, Any],
    ) -> tuple[NDArray, Any]: ...

    @abstractmethod
    def backward(
        self, dy: NDArray, cache: Any, attrs: Mapping[str, Any]
    ) -> Grads: ...

    def kink_pattern(self, cache: Any) -> tuple[NDArray, bool] | None:
        """
        Activation pattern of a non-smooth op, and whether any element sits exactly
        on the boundary. Smooth ops return None.

        """
        return None


def _require_rank(op: str, shape: Shape, rank: int) -> None:
    if len(shape) != rank:
        raise ShapeError(f"{op} expects rank {rank}, got {format_shape(shape)}")


def _require_equal(op: str, a: Shape, b: Shape) -> None:
    if tuple(a) != tuple(b):
        raise ShapeError(
            f"{op} shapes disagree: {format_shape(a)} vs {format_shape(b)}"
        )


def _require_int(op: str, dim: Dim, what: str) -> int:
    if not isinstance(dim, int):
        raise ShapeError(f"{op} needs a concrete {what}, got symbolic {dim}")
    return dim


class Affine(Op):
    name = "affine"
    param_counts = (1, 2)

    def infer_shape(self, inputs, params, attrs):
        (x,) = inputs
        _require_rank(self.name, x, 2)
        weight = params[0]
        if len(weight) != 2 or x[1] != weight[0]:
            raise ShapeError(
                f"affine input {format_shape(x)} does not match weight {weight}"
            )
        if len(params) == 2 and params[1] != (weight[1],):
            raise ShapeError(f"affine bias {params[1]} does not match weight {weight}")
        return (x[0], weight[1])

    def forward(self, xs, ps, attrs):
        (x,) = xs
        y = x @ ps[0]
        if len(ps) == 2:
            y = y + ps[1]
        return y, (x, ps[0], len(ps) == 2)

    def backward(self, dy, cache, attrs):
        x, weight, has_bias = cache
        grads = [x.T @ dy]
        if has_bias:
            grads.append(dy.sum(axis=0))
        return [dy @ weight.T], grads


class Conv2d(Op):
    """
    Square odd kernels, stride 1 or 2, zero padding of kernel//2.

    Lowered to one matrix product over extracted patches; the backward pass
    scatters patch gradients back with one strided add per kernel offset.

    """

    name = "conv2d"
    param_counts = (1, 2)

    def infer_shape(self, inputs, params, attrs):
        (x,) = inputs
        _require_rank(self.name, x, 4)
        weight = params[0]
        if len(weight) != 4 or weight[2] != weight[3] or weight[2] % 2 == 0:
            raise ShapeError(f"conv2d needs an odd square kernel, got {weight}")
        if x[1] != weight[1]:
            raise ShapeError(
                f"conv2d input channels {x[1]} do not match kernel {weight}"
            )
        if len(params) == 2 and params[1] != (weight[0],):
            raise ShapeError(f"conv2d bias {params[1]} does not match {weight}")
        stride = attrs["stride"]
        if stride not in (1, 2):
            raise ShapeError(f"conv2d stride must be 1 or 2, got {stride}")
        kernel = weight[2]
        pad = kernel // 2
        height = _require_int(self.name, x[2], "height")
        width = _require_int(self.name, x[3], "width")
        out_h = (height + 2 * pad - kernel) // stride + 1
        out_w = (width + 2 * pad - kernel) // stride + 1
        return (x[0], weight[0], out_h, out_w)

    def forward(self, xs, ps, attrs):
        (x,) = xs
        weight = ps[0]
        stride = attrs["stride"]
        n_filters, channels, kernel, _ = weight.shape
        pad = kernel // 2
        padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        windows = sliding_window_view(padded, (kernel, kernel), axis=(2, 3))
        windows = windows[:, :, ::stride, ::stride]
        batch, _, out_h, out_w = windows.shape[:4]
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(
            batch * out_h * out_w, channels * kernel * kernel
        )
        y = cols @ weight.reshape(n_filters, -1).T
        y = y.reshape(batch, out_h, out_w, n_filters).transpose(0, 3, 1, 2)
        if len(ps) == 2:
            y = y + ps[1][None, :, None, None]
        return np.ascontiguousarray(y), (x.shape, cols, weight, len(ps) == 2)

    def backward(self, dy, cache, attrs):
        x_shape, cols, weight, has_bias = cache
        stride = attrs["stride"]
        n_filters, channels, kernel, _ = weight.shape
        pad = kernel // 2
        batch, _, out_h, out_w = dy.shape

        flat_dy = dy.transpose(0, 2, 3, 1).reshape(-1, n_filters)
        grads = [(flat_dy.T @ cols).reshape(weight.shape)]
        if has_bias:
            grads.append(dy.sum(axis=(0, 2, 3)))

        dcols = (flat_dy @ weight.reshape(n_filters, -1)).reshape(
            batch, out_h, out_w, channels, kernel, kernel
        )
        _, _, height, width = x_shape
        dpadded = np.zeros(
            (batch, channels, height + 2 * pad, width + 2 * pad), dtype=dy.dtype
        )
        for i in range(kernel):
            for j in range(kernel):
                dpadded[
                    :,
                    :,
                    i : i + stride * out_h : stride,
                    j : j + stride * out_w : stride,
                ] += dcols[..., i, j].transpose(0, 3, 1, 2)
        dx = dpadded[:, :, pad : pad + height, pad : pad + width]
        return [np.ascontiguousarray(dx)], grads


class Relu(Op):
    name = "relu"

    def infer_shape(self, inputs, params, attrs):
        return inputs[0]

    def forward(self, xs, ps, attrs):
        (x,) = xs
        return np.maximum(x, 0), x

    def backward(self, dy, cache, attrs):
        return [dy * (cache > 0)], []

    def kink_pattern(self, cache):
        return cache > 0, bool(np.any(cache == 0))


class Flatten(Op):
    name = "flatten"

    def infer_shape(self, inputs, params, attrs):
        (x,) = inputs
        if len(x) < 2:
            raise ShapeError(f"flatten needs rank >= 2, got {format_shape(x)}")
        trailing = [_require_int(self.name, d, "feature dim") for d in x[1:]]
        return (x[0], prod(trailing))

    def forward(self, xs, ps, attrs):
        (x,) = xs
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, cache, attrs):
        return [dy.reshape(cache)], []


class GlobalAvgPool(Op):
    name = "gap"

    def infer_shape(self, inputs, params, attrs):
        (x,) = inputs
        _require_rank(self.name, x, 4)
        return (x[0], x[1])

    def forward(self, xs, ps, attrs):
        (x,) = xs
        return x.mean(axis=(2, 3)), x.shape

    def backward(self, dy, cache, attrs):
        _, _, height, width = cache
        dx = np.broadcast_to(dy[:, :, None, None] / (height * width), cache)
        return [np.ascontiguousarray(dx)], []


class L2Normalize(Op):
    """
    Row-wise unit normalization. Rows with norm at or below the guard map to the
    first basis vector and receive zero gradient.

    """

    name = "l2norm"

    def infer_shape(self, inputs, params, attrs):
        _require_rank(self.name, inputs[0], 2)
        return inputs[0]

    def forward(self, xs, ps, attrs):
        (x,) = xs
        norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
        guarded = norms[:, 0] <= L2_GUARD
        safe = np.where(norms > L2_GUARD, norms, 1)
        y = x / safe
        if guarded.any():
            LOGGER.warning(
                f"l2norm guard hit on {int(guarded.sum())} of {x.shape[0]} rows"
            )
            y[guarded] = 0
            y[guarded, 0] = 1
        return y, (y, safe, guarded)

    def backward(self, dy, cache, attrs):
        y, safe, guarded = cache
        dx = (dy - y * (y * dy).sum(axis=1, keepdims=True)) / safe
        dx[guarded] = 0
        return [dx], []

    def kink_pattern(self, cache):
        return cache[2], False


class LogSumExp(Op):
    name = "logsumexp"

    def infer_shape(self, inputs, params, attrs):
        (x,) = inputs
        if not x:
            raise ShapeError("logsumexp needs rank >= 1")
        return tuple(x[:-1])

    def forward(self, xs, ps, attrs):
        (x,) = xs
        peak = x.max(axis=-1, keepdims=True)
        e = np.exp(x - peak)
        total = e.sum(axis=-1, keepdims=True)
        y = (peak + np.log(total))[..., 0]
        return y, e / total

    def backward(self, dy, cache, attrs):
        return [dy[..., None] * cache], []


class _Elementwise(Op):
    arity = 2

    def infer_shape(self, inputs, params, attrs):
        _require_equal(self.name, inputs[0], inputs[1])
        return inputs[0]


class Add(_Elementwise):
    name = "add"

    def forward(self, xs, ps, attrs):
        return xs[0] + xs[1], None

    def backward(self, dy, cache, attrs):
        return [dy, dy], []


class Sub(_Elementwise):
    name = "sub"

    def forward(self, xs, ps, attrs):
        return xs[0] - xs[1], None

    def backward(self, dy, cache, attrs):
        return [dy, -dy], []


class Mul(_Elementwise):
    name = "mul"

    def forward(self, xs, ps, attrs):
        return xs[0] * xs[1], (xs[0], xs[1])

    def backward(self, dy, cache, attrs):
        a, b = cache
        return [dy * b, dy * a], []


class Scale(Op):
    name = "scale"

    def infer_shape(self, inputs, params, attrs):
        return inputs[0]

    def forward(self, xs, ps, attrs):
        return xs[0] * attrs["factor"], None

    def backward(self, dy, cache, attrs):
        return [dy * attrs["factor"]], []


class Concat(Op):
    """
    Stacks inputs along the leading axis.

    """

    name = "concat"
    arity = None

    def infer_shape(self, inputs, params, attrs):
        if len(inputs) < 2:
            raise ShapeError("concat needs at least two inputs")
        first = inputs[0]
        if not first:
            raise ShapeError("concat needs rank >= 1")
        leading: Dim = first[0]
        for other in inputs[1:]:
            if len(other) != len(first) or tuple(other[1:]) != tuple(first[1:]):
                raise ShapeError(
                    f"concat trailing dims disagree: {format_shape(first)} vs "
                    f"{format_shape(other)}"
                )
            leading = leading + other[0]
        return (leading, *first[1:])

    def forward(self, xs, ps, attrs):
        return np.concatenate(list(xs), axis=0), [x.shape[0] for x in xs]

    def backward(self, dy, cache, attrs):
        splits = np.cumsum(cache)[:-1]
        return list(np.split(dy, splits, axis=0)), []


class MatmulT(Op):
    """
    scale * A @ C^T, the row-by-candidate similarity table.

    """

    name = "matmul_t"
    arity = 2

    def infer_shape(self, inputs, params, attrs):
        a, c = inputs
        _require_rank(self.name, a, 2)
        _require_rank(self.name, c, 2)
        if a[1] != c[1]:
            raise ShapeError(
                f"matmul_t feature dims disagree: {format_shape(a)} vs "
                f"{format_shape(c)}"
            )
        return (a[0], c[0])

    def forward(self, xs, ps, attrs):
        a, c = xs
        return (a @ c.T) * attrs["scale"], (a, c)

    def backward(self, dy, cache, attrs):
        a, c = cache
        scale = attrs["scale"]
        return [(dy @ c) * scale, (dy.T @ a) * scale], []


class Mean(Op):
    name = "mean"

    def infer_shape(self, inputs, params, attrs):
        return ()

    def forward(self, xs, ps, attrs):
        (x,) = xs
        return np.asarray(x.mean(), dtype=x.dtype), x.shape

    def backward(self, dy, cache, attrs):
        size = prod(cache) if cache else 1
        return [np.full(cache, dy / size, dtype=dy.dtype)], []


class Sum(Op):
    name = "sum"

    def infer_shape(self, inputs, params, attrs):
        return ()

    def forward(self, xs, ps, attrs):
        (x,) = xs
        return np.asarray(x.sum(), dtype=x.dtype), x.shape

    def backward(self, dy, cache, attrs):
        return [np.full(cache, dy, dtype=dy.dtype)], []


class ContrastiveXent(Op):
    """
    Per-row cross entropy over a masked candidate set:
    `logsumexp_{j: mask[r, j]} S[r, j] - sum_j targets[r, j] * S[r, j]`.

    Targets and mask are data; they receive no gradient. A row whose mask keeps only
    its target column evaluates to exactly zero.

    """

    name = "contrastive_xent"
    arity = 3

    def infer_shape(self, inputs, params, attrs):
        scores, targets, mask = inputs
        _require_rank(self.name, scores, 2)
        _require_equal(self.name, scores, targets)
        _require_equal(self.name, scores, mask)
        return (scores[0],)

    def forward(self, xs, ps, attrs):
        scores, targets, mask = xs
        masked = np.where(mask > 0, scores, -np.inf)
        peak = masked.max(axis=1, keepdims=True)
        e = np.exp(masked - peak)
        total = e.sum(axis=1, keepdims=True)
        lse = (peak + np.log(total))[:, 0]
        y = lse - (targets * scores).sum(axis=1)
        return y, (e / total, targets)

    def backward(self, dy, cache, attrs):
        softmax, targets = cache
        return [dy[:, None] * (softmax - targets), None, None], []


OPS: dict[str, Op] = {
    op.name: op
    for op in (
        Affine(),
        Conv2d(),
        Relu(),
        Flatten(),
        GlobalAvgPool(),
        L2Normalize(),
        LogSumExp(),
        Add(),
        Sub(),
        Mul(),
        Scale(),
        Concat(),
        MatmulT(),
        Mean(),
        Sum(),
        ContrastiveXent(),
    )
}
