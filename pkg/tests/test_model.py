import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrikit.errors import CapacityError, ValidationError
from attrikit.model import (
    Expression,
    FunctionModel,
    LinearModel,
    PiecewiseConstantApprox,
    ReluNetwork,
    activation_pattern,
    affine_coeffs,
    approximate,
    cell_index,
    dumps_network,
    finite_difference_gradient,
    forward,
    grid_points,
    load_network,
)


def identity_net():
    return ReluNetwork(((np.eye(2), np.zeros(2)), (np.array([[1.0, 1.0]]), np.zeros(1))))


def test_forward_value_and_preactivations():
    net = identity_net()
    value, pre = forward(net, np.array([0.3, 0.7]))
    assert value == pytest.approx(1.0)
    assert len(pre) == 2 and np.allclose(pre[0], [0.3, 0.7])


def test_activation_pattern_is_strict():
    net = ReluNetwork(((np.array([[1.0, 0.0]]), np.array([-0.5])), (np.array([[1.0]]), np.zeros(1))))
    assert activation_pattern(net, np.array([0.5, 0.2]))[0].tolist() == [False]
    assert activation_pattern(net, np.array([0.6, 0.2]))[0].tolist() == [True]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.lists(st.integers(1, 6), min_size=1, max_size=3))
def test_affine_coeffs_reproduce_forward(seed, d, widths):
    rng = np.random.default_rng(seed)
    net = ReluNetwork.random(d, widths, rng)
    x = rng.random(d)
    a, b = affine_coeffs(net, activation_pattern(net, x))
    assert a @ x + b == pytest.approx(net.value(x), abs=1e-10)


def test_network_validation_names_layer():
    with pytest.raises(ValidationError, match="layer 1"):
        ReluNetwork(((np.eye(2), np.zeros(2)), (np.ones((1, 3)), np.zeros(1))))
    with pytest.raises(ValidationError, match="output width"):
        ReluNetwork(((np.eye(2), np.zeros(2)),))
    with pytest.raises(ValidationError, match="layer 0"):
        ReluNetwork(((np.eye(2), np.zeros(3)), (np.ones((1, 2)), np.zeros(1))))


def test_serialization_roundtrip():
    net = ReluNetwork.random(3, [4, 2], rng=1)
    again = load_network(dumps_network(net))
    assert again.fingerprint == net.fingerprint
    Y = np.random.default_rng(0).random((10, 3))
    assert np.array_equal(net(Y), again(Y))


@pytest.mark.parametrize("doc,msg", [
    ({"format": "other"}, "format"),
    ({"format": "attrikit-relu/1", "input_dim": 2, "layers": []}, "non-empty"),
    ({"format": "attrikit-relu/1", "input_dim": 3,
      "layers": [{"weights": [[1, 0]], "bias": [0]}]}, "input_dim"),
    ({"format": "attrikit-relu/1", "input_dim": 2, "layers": [{"weights": [1, 0], "bias": [0]}]}, "2-D"),
])
def test_load_network_rejects(doc, msg):
    with pytest.raises(ValidationError, match=msg):
        load_network(json.dumps(doc))


def test_load_network_rejects_bad_json():
    with pytest.raises(ValidationError):
        load_network(b"{not json")


def test_gradients():
    assert np.array_equal(LinearModel([2.0, -3.0]).gradient(np.array([0.1, 0.2])), [2.0, -3.0])
    g = Expression("x1^2 + x1*x2").gradient(np.array([0.5, 0.25]))
    assert np.allclose(g, [1.25, 0.5], atol=1e-8)
    # clamped at the boundary: one-sided difference stays inside the box
    g0 = finite_difference_gradient(Expression("x1^2", 1), np.array([0.0]))
    assert g0[0] == pytest.approx(1e-5)
    net = ReluNetwork.random(2, [5], rng=4)
    x = np.array([0.31, 0.62])
    assert np.allclose(net.gradient(x), finite_difference_gradient(net, x), atol=1e-6)


def test_combination_arithmetic():
    f = Expression("x1*x2")
    g = LinearModel([1.0, 1.0])
    h = f + 2 * g
    Y = np.array([[0.5, 0.5], [0.1, 0.9]])
    assert np.allclose(h(Y), f(Y) + 2 * g(Y))
    assert h.fingerprint != (f + g).fingerprint


def test_function_model_shape_checks():
    f = FunctionModel(lambda Y: Y.sum(axis=1), 2)
    with pytest.raises(ValidationError):
        f(np.zeros((3, 3)))


def test_cell_index_right_closed():
    assert cell_index(np.array([0.0, 0.25, 0.2500001, 1.0]), 4).tolist() == [0, 0, 1, 3]


def test_piecewise_constant_uses_lower_corner():
    f = Expression("x1 + 10*x2")
    f_p = approximate(f, 4)
    assert isinstance(f_p, PiecewiseConstantApprox)
    assert f_p.value(np.array([0.3, 0.6])) == pytest.approx(0.25 + 10 * 0.5)
    assert f_p.value(np.array([0.0, 0.0])) == 0.0
    assert np.allclose(f_p(grid_points(4, 2) + 1e-9), f(grid_points(4, 2)))


def test_approximation_capacity():
    with pytest.raises(CapacityError):
        approximate(Expression("x1", 6), 64, max_cells=1000)
