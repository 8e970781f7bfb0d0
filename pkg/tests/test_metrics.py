import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrikit.attribution import attribute, attribute_linear_closed_form
from attrikit.errors import UndefinedMetricError, ValidationError
from attrikit.measures import MeasureFamily
from attrikit.metrics import (
    golden_split,
    precision,
    precision_solution_set_contains,
    projected_attribution,
    recall,
    recall_solution_set_contains,
    relu_precision,
    relu_recall,
    relu_solution_set_contains,
)
from attrikit.model import LinearModel, ReluNetwork


def test_golden_split():
    assert golden_split([1, 0.1], 0.5).D1 == {0}
    assert golden_split([0.5, 0.5], 0.5).D1 == frozenset()
    s = golden_split([2, -3, 0.01], 0.5)
    assert s.D1 == {0, 1} and s.D0 == {2}
    with pytest.raises(ValidationError):
        golden_split([1.0], 0.0)


def test_recall_examples():
    assert recall([1, 0.1], 0.5, 0.5, [1, 0.1]) == 1.0
    assert recall([1, 0.1], 0.5, 0.5, [0.4, 0.1]) == 0.0
    with pytest.raises(UndefinedMetricError):
        recall([0.1, 0.1], 0.5, 0.5, [1, 1])
    w = np.array([2.0, -0.3, 0.9, 0.05])
    phi = attribute_linear_closed_form(w, "global")
    alpha, beta = 1.0, 0.2
    D1 = golden_split(w, beta).D1
    assert recall(w, alpha, beta, phi) == sum(abs(w[j]) >= alpha for j in D1) / len(D1)


def test_precision_examples():
    assert precision([1, 0.1], 0.5, 0.5, [1, 0.1]) == 1.0
    assert precision([1, 0.1], 0.5, 0.5, [1, 0.9]) == 0.5
    with pytest.raises(UndefinedMetricError):
        precision([1, 0.1], 0.5, 0.5, [0.1, 0.1])


def test_recall_membership_examples():
    assert recall_solution_set_contains([1, 1], 0.5, 0.5, 0, [0.5, 0.5])
    for m in itertools.product(np.linspace(0, 1, 5), repeat=2):
        assert not recall_solution_set_contains([1, 1], 3.0, 0.5, 0, m)
    assert recall_solution_set_contains([1, 0.1], 0.5, 0.5, 1, [0.0, 0.0])  # non-golden: whole box
    assert not recall_solution_set_contains([1, -1], 0.5, 0.5, 0, [0.5, 0.4])  # in the open slab


def test_precision_membership_examples():
    assert precision_solution_set_contains([1, 1], 0.5, 1.5, 0, [0.1, 0.1])
    assert not precision_solution_set_contains([1, 1], 0.5, 1.5, 0, [1, 1])


def test_optimal_precision_end_to_end():
    w = np.array([2.0, 0.05, -1.5])
    alpha, beta = 0.5, 0.1
    m_list = np.array([[1, 0, 0], [0, 0, 0], [0, 0, 1]], dtype=float)
    assert all(precision_solution_set_contains(w, alpha, beta, j, m_list[j]) for j in range(3))
    fam = MeasureFamily("custom", rule=lambda j, x: MeasureFamily("dirac-product", baseline=m_list[j]).measure(
        j, m_list[j]))
    phi = attribute(LinearModel(w), fam, np.full(3, 0.5), "grid").phi
    assert np.allclose(phi, m_list @ w)
    assert precision(w, alpha, beta, phi) == 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_precision_sets_inside_recall_sets(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    w = rng.uniform(-2, 2, size=d)
    alpha, beta = rng.uniform(0.05, 1.5, size=2)
    for m in rng.random((20, d)):
        for j in range(d):
            if precision_solution_set_contains(w, alpha, beta, j, m):
                assert recall_solution_set_contains(w, alpha, beta, j, m)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 100.0))
def test_scale_coherence(seed, scale):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-2, 2, size=4)
    w[0] = 3.0
    phi = rng.uniform(-2, 2, size=4)
    alpha, beta = 0.5, 0.4
    assert recall(w, alpha, beta, phi) == recall(w, alpha * scale, beta, phi * scale)
    try:
        p = precision(w, alpha, beta, phi)
    except UndefinedMetricError:
        return
    assert p == precision(w, alpha * scale, beta, phi * scale)


def test_projected_attribution_validates():
    with pytest.raises(ValidationError):
        projected_attribution([1, 2], [[0.5, 0.5]])
    with pytest.raises(ValidationError):
        projected_attribution([1, 2], [[0.5, 1.5], [0, 0]])


def single_region_net(a):
    return ReluNetwork(((np.eye(2), np.zeros(2)), (np.array([a], dtype=float), np.zeros(1))))


def test_relu_single_region_equals_linear():
    net = single_region_net([1.0, 0.2])
    m_list = np.array([[0.9, 0.1], [0.2, 0.3]])
    phi = m_list @ np.array([1.0, 0.2])
    res = relu_recall(net, 0.5, 0.5, m_list)
    assert res.value == recall([1.0, 0.2], 0.5, 0.5, phi) and res.regions == 1
    assert relu_precision(net, 0.5, 0.5, m_list).value == precision([1.0, 0.2], 0.5, 0.5, phi)
    for m in m_list:
        assert relu_solution_set_contains(net, 0.5, 0.5, 0, m) == recall_solution_set_contains(
            [1.0, 0.2], 0.5, 0.5, 0, m)


def test_relu_two_regions_sign_symmetric():
    net = ReluNetwork(((np.array([[1.0, 0.5]]), np.array([-0.6])), (np.array([[1.0]]), np.array([0.0]))))
    # regions: slope 0 (skipped, empty golden set) and slope (1, 0.5)
    m_list = np.array([[1.0, 1.0], [1.0, 1.0]])
    res = relu_recall(net, 0.5, 0.4, m_list)
    assert res.skipped_regions == 1 and res.value == 1.0
    net2 = ReluNetwork(((np.array([[1.0, 0.5], [-1.0, -0.5]]), np.array([-0.6, 0.6])),
                        (np.array([[1.0, 1.0]]), np.zeros(1))))
    # slopes (1, 0.5) and (-1, -0.5): identical up to sign
    m_list = np.array([[1.0, 0.2], [0.1, 0.3]])
    single = recall([1.0, 0.5], 0.5, 0.4, m_list @ [1.0, 0.5])
    res2 = relu_recall(net2, 0.5, 0.4, m_list)
    assert res2.regions == 2 and res2.value == 2 * single


def test_relu_contradictory_regions_give_empty_set():
    W = np.array([[1.0, 0.0], [-1.0, 0.0]])
    net = ReluNetwork(((W, np.array([-0.5, 0.5])), (np.array([[1.0, -0.25]]), np.zeros(1))))
    # slopes (1, 0) for x1 > 0.5 and (0.25, 0) below; with alpha 0.5 and beta 0.1 the second
    # region needs |0.25 m_1| >= 0.5, impossible in the box, so the intersection is empty
    for m in itertools.product(np.linspace(0, 1, 11), repeat=2):
        assert not relu_solution_set_contains(net, 0.5, 0.1, 0, m, "recall")


def test_relu_membership_soundness():
    net = ReluNetwork.random(2, [6], rng=8)
    alpha, beta = 0.05, 0.05
    grid = [np.array(m) for m in itertools.product(np.linspace(0, 1, 21), repeat=2)]
    from attrikit.attribution import regions_for

    decomp = regions_for(net)
    for j in range(2):
        members = [m for m in grid if relu_solution_set_contains(net, alpha, beta, j, m)]
        for m in members[:20]:
            for r in decomp:
                if j in golden_split(r.a, beta).D1:
                    assert abs(r.a @ m) >= alpha


def test_relu_recall_bounds_and_optimum():
    net = ReluNetwork.random(2, [5], rng=21)
    from attrikit.attribution import regions_for

    decomp = regions_for(net)
    alpha, beta = 0.05, 0.05
    rng = np.random.default_rng(0)
    grid = [np.array(m) for m in itertools.product(np.linspace(0, 1, 41), repeat=2)]
    best = []
    for j in range(2):
        members = [m for m in grid if relu_solution_set_contains(net, alpha, beta, j, m, decomposition=decomp)]
        best.append(members[0] if members else None)
    random_scores = [relu_recall(net, alpha, beta, rng.random((2, 2)), decomp).value for _ in range(1000)]
    assert all(0 <= s <= len(decomp) for s in random_scores)
    if all(m is not None for m in best):
        optimum = relu_recall(net, alpha, beta, np.array(best), decomp).value
        assert optimum >= max(random_scores)
