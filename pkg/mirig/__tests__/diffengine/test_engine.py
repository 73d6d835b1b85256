import numpy as np
import pytest

from mirig.diffengine import (
    GraphBuilder,
    NonFiniteError,
    ParamSet,
    ShapeError,
    SymDim,
    evaluate,
    forward_backward,
)

K = SymDim.of("K")


def _identity_affine_graph(dim: int):
    builder = GraphBuilder()
    x = builder.input("x", (K, dim))
    w = builder.param("w", (dim, dim))
    b = builder.param("b", (dim,), init="zeros")
    y = builder.affine(x, w, b)
    builder.output("y", y)
    builder.output("loss", builder.sum(y))
    return builder.build()


def test_identity_affine_passes_input_through() -> None:
    graph = _identity_affine_graph(3)
    params = ParamSet(
        values={
            "w": np.eye(3, dtype=np.float32),
            "b": np.zeros(3, dtype=np.float32),
        }
    )
    v = np.array([[0.5, -1.0, 2.0]], dtype=np.float32)

    outputs, grads = forward_backward(graph, params, {"x": v})

    np.testing.assert_array_equal(outputs["y"], v)
    np.testing.assert_array_equal(grads["w"], np.outer(v[0], np.ones(3)))
    np.testing.assert_array_equal(grads["b"], np.ones(3))


def test_relu_gradient_is_zero_at_zero() -> None:
    graph = _relu_graph()
    params = ParamSet(
        values={"w": np.eye(3, dtype=np.float32), "b": np.zeros(3, dtype=np.float32)}
    )
    outputs, grads = forward_backward(
        graph, params, {"x": np.array([[-1.0, 0.0, 2.0]])}
    )
    np.testing.assert_array_equal(outputs["y"], [[0.0, 0.0, 2.0]])
    np.testing.assert_array_equal(grads["b"], [0.0, 0.0, 1.0])


def _relu_graph():
    builder = GraphBuilder()
    x = builder.input("x", (K, 3))
    w = builder.param("w", (3, 3))
    b = builder.param("b", (3,), init="zeros")
    y = builder.relu(builder.affine(x, w, b))
    builder.output("y", y)
    builder.output("loss", builder.sum(y))
    return builder.build()


def test_every_parameter_gets_a_gradient_slot() -> None:
    builder = GraphBuilder()
    x = builder.input("x", (K, 3))
    used = builder.param("used", (3, 2))
    builder.param("unused", (4,), init="zeros")
    builder.output("loss", builder.mean(builder.affine(x, used)))
    graph = builder.build()
    params = ParamSet.initialize(graph.params, seed=1)

    _, grads = forward_backward(graph, params, {"x": np.ones((2, 3))})

    assert set(grads) == {"used", "unused"}
    for name in grads:
        assert grads[name].shape == params[name].shape
    np.testing.assert_array_equal(grads["unused"], 0)


def test_gradient_requires_scalar_output() -> None:
    graph = _identity_affine_graph(2)
    params = ParamSet.initialize(graph.params, seed=0)
    with pytest.raises(ShapeError):
        forward_backward(graph, params, {"x": np.ones((1, 2))}, loss="y")


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_value_names_the_node() -> None:
    builder = GraphBuilder()
    s = builder.input("s", (K, K))
    t = builder.input("t", (K, K))
    m = builder.input("m", (K, K))
    xent = builder.contrastive_xent(builder.matmul_t(s, s), t, m)
    builder.output("loss", builder.mean(xent))
    graph = builder.build()
    params = ParamSet()

    with pytest.raises(NonFiniteError) as info:
        forward_backward(
            graph,
            params,
            {"s": np.eye(2), "t": np.eye(2), "m": np.zeros((2, 2))},
        )
    assert info.value.node_id == xent.id


def test_forward_backward_is_bitwise_deterministic() -> None:
    builder = GraphBuilder()
    img = builder.input("img", (K, 3, 8, 8))
    w1 = builder.param("c1", (4, 3, 3, 3), fan_in=27)
    w2 = builder.param("c2", (4, 4, 3, 3), fan_in=36)
    h = builder.relu(builder.conv2d(img, w1, stride=2))
    h = builder.gap(builder.relu(builder.conv2d(h, w2, stride=2)))
    builder.output("loss", builder.mean(builder.l2norm(h)))
    graph = builder.build()
    params = ParamSet.initialize(graph.params, seed=3)
    images = np.random.default_rng(0).random((4, 3, 8, 8))

    first = forward_backward(graph, params, {"img": images})
    second = forward_backward(graph, params, {"img": images})

    assert first[0]["loss"].tobytes() == second[0]["loss"].tobytes()
    for name in graph.params:
        assert first[1][name].tobytes() == second[1][name].tobytes()


def test_conv2d_output_shapes() -> None:
    builder = GraphBuilder()
    img = builder.input("img", (K, 3, 16, 16))
    same = builder.conv2d(img, builder.param("a", (8, 3, 3, 3)), stride=1)
    half = builder.conv2d(img, builder.param("b", (8, 3, 5, 5)), stride=2)
    assert same.shape == (K, 8, 16, 16)
    assert half.shape == (K, 8, 8, 8)


def test_conv2d_matches_direct_correlation() -> None:
    rng = np.random.default_rng(5)
    x = rng.standard_normal((1, 2, 5, 5))
    kernel = rng.standard_normal((3, 2, 3, 3))

    builder = GraphBuilder()
    img = builder.input("img", (K, 2, 5, 5))
    builder.output("y", builder.conv2d(img, builder.param("k", (3, 2, 3, 3))))
    graph = builder.build()
    params = ParamSet(values={"k": kernel})

    y = evaluate(graph, params, {"img": x}, dtype=np.float64)["y"]

    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    expected = np.zeros((1, 3, 5, 5))
    for f in range(3):
        for i in range(5):
            for j in range(5):
                window = padded[0, :, i : i + 3, j : j + 3]
                expected[0, f, i, j] = np.sum(window * kernel[f])
    np.testing.assert_allclose(y, expected, rtol=1e-12, atol=1e-12)


def test_l2norm_rows_have_unit_norm() -> None:
    builder = GraphBuilder()
    x = builder.input("x", (K, 6))
    builder.output("z", builder.l2norm(x))
    graph = builder.build()
    rows = np.random.default_rng(2).standard_normal((32, 6)) * 10
    rows[3] = 0.0

    z = evaluate(graph, ParamSet(), {"x": rows})["z"]

    norms = np.linalg.norm(z, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-5)
    np.testing.assert_array_equal(z[3], [1, 0, 0, 0, 0, 0])


def test_contrastive_xent_single_candidate_is_zero() -> None:
    builder = GraphBuilder()
    s = builder.input("s", (K, K))
    t = builder.input("t", (K, K))
    m = builder.input("m", (K, K))
    builder.output("row", builder.contrastive_xent(s, t, m))
    graph = builder.build()

    scores = np.array([[3.7, -1.0], [0.2, 8.0]])
    rows = evaluate(
        graph, ParamSet(), {"s": scores, "t": np.eye(2), "m": np.eye(2)}
    )["row"]
    assert rows.tolist() == [0.0, 0.0]
