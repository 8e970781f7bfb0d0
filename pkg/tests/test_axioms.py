import numpy as np
import pytest

from attrikit.axioms import (
    EngineMethod,
    FunctionMethod,
    GradientTimesInput,
    IntegratedGradients,
    bound_experiment,
    check_completeness,
    check_linearity,
    check_sensitivity,
    default_points,
    gradient_x_input,
    integrated_gradients,
    remainder_bound_estimate,
    remainder_decomposition_check,
    run_suite,
)
from attrikit.errors import ValidationError
from attrikit.measures import MeasureFamily
from attrikit.model import Expression, LinearModel, ReluNetwork, activation_pattern, affine_coeffs

X = default_points(2, 6, seed=3)
ZERO = np.zeros(2)
PDP_METHOD = EngineMethod(MeasureFamily("pdp"), "grid", {"grid_res": 256})


def test_engine_is_linear():
    rep = check_linearity(PDP_METHOD, "x1^2 + x2", "x1*x2", (-1.0, 2.0), X, 1e-8)
    assert rep.passed and rep.status == "pass"


def test_nonlinear_method_gives_counterexample():
    squared = FunctionMethod(lambda x, f: np.full(x.shape, f.value(x) ** 2), name="squared")
    rep = check_linearity(squared, "x1 + x2", "x1", (-1.0, 2.0), X, 1e-8)
    assert not rep.passed and rep.counterexample is not None and "lambda" in rep.counterexample


def test_lambda_zero_is_self_consistent():
    rep = check_linearity(IntegratedGradients(), "x1*x2", "x1", (0.0,), X, 0.0)
    assert rep.max_violation == 0.0


def test_ig_complete_pdp_not():
    assert check_completeness(IntegratedGradients(), "x1^2 + x2", ZERO, X, 1e-3).passed
    rep = check_completeness(PDP_METHOD, "x1 + x2", ZERO, X, 1e-3)
    assert not rep.passed
    x = np.array(rep.counterexample["x"])
    # uniform PDP sums to x1 + x2 + 1 while f(x) - f(0) = x1 + x2
    assert rep.counterexample["violation"] == pytest.approx(1.0, abs=1e-6)
    assert sum(rep.counterexample["phi"]) == pytest.approx(x.sum() + 1.0, abs=1e-6)


def test_constant_model_completeness():
    assert check_completeness(IntegratedGradients(), "0.7 + 0*x1", ZERO, X, 1e-12).passed


def test_sensitivity_cases():
    pdp_rep = check_sensitivity(PDP_METHOD, "x1", 1, 32, X, 1e-9)
    assert pdp_rep.status == "fail" and pdp_rep.max_violation == pytest.approx(0.5, abs=1e-9)
    gxi = check_sensitivity(GradientTimesInput(), Expression("x1", 2), 1, 32, X, 1e-9)
    assert gxi.passed and "no violation found" in gxi.note
    bad = check_sensitivity(IntegratedGradients(), "x1 + x2", 1, 32, X, 1e-9)
    assert bad.status == "precondition-violated" and not bad.passed and bad.max_violation is None


def test_gradient_x_input():
    w = np.array([2.0, -1.0])
    x = np.array([0.3, 0.8])
    assert np.array_equal(gradient_x_input(LinearModel(w), x), w * x)
    assert np.allclose(gradient_x_input("x1^2 + 0*x2", [0.5, 0.3]), [0.5, 0.0], atol=1e-9)
    net = ReluNetwork.random(2, [6], rng=2)
    a, _ = affine_coeffs(net, activation_pattern(net, x))
    assert np.allclose(gradient_x_input(net, x), a * x)


def test_integrated_gradients():
    w = np.array([2.0, -1.0])
    x, x0 = np.array([0.3, 0.8]), np.array([0.1, 0.2])
    assert np.array_equal(integrated_gradients(LinearModel(w), x, x0), w * (x - x0))
    assert np.allclose(integrated_gradients("x1*x2", [1.0, 1.0]), [0.5, 0.5], atol=1e-9)
    assert np.array_equal(integrated_gradients(LinearModel(w), x), gradient_x_input(LinearModel(w), x))
    with pytest.raises(ValidationError):
        integrated_gradients("x1", [0.5], steps=1)


def test_remainder_decomposition():
    ig = IntegratedGradients()
    for f in ("x1^2 + x2", "x1*x2", "0.5*(x1^2 + x2^2)"):
        assert remainder_decomposition_check(ig, f, X, [0.4, 0.6], ZERO, 1e-3).passed
    rep = remainder_decomposition_check(ig, "3*x1 - x2", X, [0.2, 0.2], ZERO, 1e-12)
    assert rep.passed
    pre = remainder_decomposition_check(PDP_METHOD, "x1^2 + x2", X, [0.4, 0.6], ZERO, 1e-3)
    assert pre.status == "precondition-violated"


def test_remainder_bound():
    assert remainder_bound_estimate("x1 - 2*x2 + 0.3", 9, 2) == 0.0
    assert remainder_bound_estimate("0.5*(x1^2 + x2^2)", 9) == pytest.approx(1.0, abs=1e-3)
    assert remainder_bound_estimate("x1*x2", 9) == pytest.approx(1.0, abs=1e-3)
    out = bound_experiment(IntegratedGradients(), "x1^2 + x1*x2", X, [0.5, 0.5], grid_res=7)
    assert out["bound_per_unit_lipschitz"] > 0 and len(out["remainder_norms"]) == X.shape[0]


def test_suites():
    ig_reports = run_suite(IntegratedGradients(), "polynomial")
    assert all(r.passed for r in ig_reports)
    pdp_reports = {r.axiom: r for r in run_suite(PDP_METHOD, "quadratic")}
    assert not pdp_reports["sensitivity"].passed
    with pytest.raises(ValidationError):
        run_suite(IntegratedGradients(), "nope")
