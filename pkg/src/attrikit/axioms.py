"""Black-box checks of attribution axioms, plus Gradient x Input experiments.

Every check is a finite sample: a failing report is a genuine counterexample,
a passing one only means no violation was found on the probes tried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .attribution import attribute
from .errors import ValidationError
from .measures import MeasureFamily
from .model import Function, FunctionModel, as_function

HESSIAN_STEP = 1e-3
# finite-difference Hessian entries below this are rounding noise
HESSIAN_NOISE = 1e-6
INVARIANCE_TOL = 1e-12


class AttributionMethod(Protocol):
    name: str
    baseline: np.ndarray | None

    def explain(self, x, f: Function) -> np.ndarray: ...


@dataclass
class EngineMethod:
    """The measure-based engine as an attribution method."""

    family: MeasureFamily
    method: str = "grid"
    options: dict = field(default_factory=dict)
    name: str = ""
    baseline: np.ndarray | None = None

    def __post_init__(self):
        if not self.name:
            self.name = f"engine:{self.family.preset}:{self.method}"

    def explain(self, x, f):
        return attribute(f, self.family, x, self.method, **self.options).phi


@dataclass
class GradientTimesInput:
    name: str = "gradient-x-input"
    baseline: np.ndarray | None = None

    def explain(self, x, f):
        return gradient_x_input(f, x)


@dataclass
class IntegratedGradients:
    steps: int = 256
    baseline: np.ndarray | None = None
    name: str = "integrated-gradients"

    def explain(self, x, f):
        return integrated_gradients(f, x, self.baseline, self.steps)


@dataclass
class FunctionMethod:
    """Wraps ``fn(x, f) -> phi``; handy for constructing counterexamples."""

    fn: Callable
    name: str = "custom"
    baseline: np.ndarray | None = None

    def explain(self, x, f):
        return np.asarray(self.fn(np.asarray(x, dtype=float), f), dtype=float)


@dataclass
class AxiomReport:
    axiom: str
    method: str
    cases: int
    max_violation: float | None
    tolerance: float
    passed: bool
    status: str
    counterexample: dict | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "method": self.method,
            "cases": self.cases,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "status": self.status,
            "counterexample": self.counterexample,
            "note": self.note,
        }


def _report(axiom, method, cases, worst, worst_case, tol, note="") -> AxiomReport:
    passed = worst <= tol
    if passed:
        note = note or f"no violation found on {cases} probes"
    return AxiomReport(axiom, method.name, cases, float(worst), tol, passed, "pass" if passed else "fail",
                       None if passed else worst_case, note)


def _points(x_set) -> np.ndarray:
    X = np.atleast_2d(np.asarray(x_set, dtype=float))
    if X.shape[0] == 0:
        raise ValidationError("need at least one test point")
    return X


def check_linearity(method: AttributionMethod, f, g, lambdas: Sequence[float], x_set, tol: float) -> AxiomReport:
    X = _points(x_set)
    f, g = as_function(f, X.shape[1]), as_function(g, X.shape[1])
    worst, case, n = 0.0, None, 0
    for x in X:
        phi_f, phi_g = method.explain(x, f), method.explain(x, g)
        for lam in lambdas:
            v = float(np.max(np.abs(method.explain(x, f + lam * g) - phi_f - lam * phi_g)))
            n += 1
            if v > worst or case is None:
                worst, case = max(v, worst), {"x": x.tolist(), "lambda": float(lam), "violation": v}
    return _report("linearity", method, n, worst, case, tol)


def check_completeness(method: AttributionMethod, f, baseline, x_set, tol: float) -> AxiomReport:
    X = _points(x_set)
    f = as_function(f, X.shape[1])
    x0 = np.asarray(baseline, dtype=float)
    f0 = f.value(x0)
    worst, case = 0.0, None
    for x in X:
        phi = method.explain(x, f)
        v = abs(f.value(x) - f0 - float(np.sum(phi)))
        if v > worst or case is None:
            worst, case = max(v, worst), {"x": x.tolist(), "phi": np.asarray(phi).tolist(), "violation": v}
    return _report("completeness", method, X.shape[0], worst, case, tol)


def check_sensitivity(method: AttributionMethod, f, j: int, probe_count: int, x_set, tol: float,
                      seed: int = 0) -> AxiomReport:
    """``phi_j`` must vanish when ``f`` ignores feature ``j``.

    Invariance in ``j`` is first probed on random pairs differing only at ``j``;
    if that fails the axiom is untested and the report says so.
    """
    X = _points(x_set)
    d = X.shape[1]
    f = as_function(f, d)
    if not 0 <= j < d:
        raise ValidationError(f"feature index {j} out of range for d={d}")
    rng = np.random.default_rng(seed)
    P = rng.random((probe_count, d))
    Q = P.copy()
    Q[:, j] = rng.random(probe_count)
    gap = np.abs(f(P) - f(Q))
    if probe_count and gap.max() > INVARIANCE_TOL:
        k = int(np.argmax(gap))
        return AxiomReport("sensitivity", method.name, probe_count, None, tol, False, "precondition-violated",
                           {"x": P[k].tolist(), "x_prime": Q[k].tolist(), "gap": float(gap[k])},
                           f"model depends on feature {j}; axiom not tested")
    worst, case = 0.0, None
    for x in X:
        v = abs(float(method.explain(x, f)[j]))
        if v > worst or case is None:
            worst, case = max(v, worst), {"x": x.tolist(), "j": j, "phi_j": v}
    return _report("sensitivity", method, X.shape[0], worst, case, tol,
                   "" if worst > tol else f"no violation found on {X.shape[0]} points ({probe_count} invariance probes)")


# --------------------------------------------------------------------------
# gradient methods


def _gradients(f: Function, X: np.ndarray) -> np.ndarray:
    """Gradients at many points; batched central differences when ``f`` has no analytic gradient."""
    if type(f).gradient is not Function.gradient:
        return np.array([f.gradient(x) for x in X])
    from .model import FD_STEP

    n, d = X.shape
    hi = np.minimum(X + FD_STEP, 1.0)
    lo = np.maximum(X - FD_STEP, 0.0)
    up = np.repeat(X[:, None, :], d, axis=1)
    dn = up.copy()
    idx = np.arange(d)
    up[:, idx, idx] = hi
    dn[:, idx, idx] = lo
    fu = f(up.reshape(-1, d)).reshape(n, d)
    fd = f(dn.reshape(-1, d)).reshape(n, d)
    return (fu - fd) / (hi - lo)


def gradient_x_input(f, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f = as_function(f, x.shape[0])
    return f.gradient(x) * x


def integrated_gradients(f, x, baseline=None, steps: int = 256) -> np.ndarray:
    """``(x - x') * mean gradient`` along the straight path, trapezoid rule with ``steps`` points."""
    if steps < 2:
        raise ValidationError("integrated gradients needs steps >= 2")
    x = np.asarray(x, dtype=float)
    f = as_function(f, x.shape[0])
    x0 = np.zeros_like(x) if baseline is None else np.asarray(baseline, dtype=float)
    t = np.linspace(0.0, 1.0, steps)
    G = _gradients(f, x0 + t[:, None] * (x - x0))
    if np.all(G == G[0]):
        avg = G[0]
    else:
        w = np.full(steps, 1.0 / (steps - 1))
        w[[0, -1]] *= 0.5
        avg = w @ G
    return (x - x0) * avg


def taylor_remainder(f: Function, x0) -> Function:
    """``R(z) = f(z) - f(x0) - grad f(x0) . (z - x0)``."""
    x0 = np.asarray(x0, dtype=float)
    f0, g0 = f.value(x0), f.gradient(x0)
    return FunctionModel(lambda Y: f(Y) - f0 - (Y - x0) @ g0, f.input_dim,
                         gradient=lambda z: f.gradient(z) - g0, name="taylor-remainder")


def remainder_decomposition_check(method: AttributionMethod, f, x_set, x0, baseline, tol: float) -> AxiomReport:
    """Residual of ``phi(x,f) = grad f(x0) * (x - x') + phi(x, R_x0)``.

    The identity needs a linear, complete, sensitive method; completeness is
    probed first and a failure marks the report as precondition-violated.
    """
    X = _points(x_set)
    f = as_function(f, X.shape[1])
    x_prime = np.asarray(baseline, dtype=float)
    pre = check_completeness(method, f, x_prime, X, tol)
    if not pre.passed:
        return AxiomReport("remainder-decomposition", method.name, pre.cases, None, tol, False,
                           "precondition-violated", pre.counterexample, "method is not complete on these points")
    g0 = f.gradient(np.asarray(x0, dtype=float))
    R = taylor_remainder(f, x0)
    worst, case = 0.0, None
    for x in X:
        phi_f, phi_r = method.explain(x, f), method.explain(x, R)
        v = float(np.max(np.abs(phi_f - g0 * (x - x_prime) - phi_r)))
        if v > worst or case is None:
            worst, case = max(v, worst), {"x": x.tolist(), "phi_R": np.asarray(phi_r).tolist(), "violation": v}
    return _report("remainder-decomposition", method, X.shape[0], worst, case, tol)


def hessian_op_norms(f: Function, X: np.ndarray, h: float = HESSIAN_STEP) -> np.ndarray:
    """Largest |eigenvalue| of the central-difference Hessian at each row of ``X``.

    Probes stay inside the box by moving the stencil center inward by ``2h``.
    """
    n, d = X.shape
    C = np.clip(X, 2 * h, 1 - 2 * h)
    H = np.empty((n, d, d))
    E = np.eye(d) * h
    for i in range(d):
        for k in range(i, d):
            s = (f(C + E[i] + E[k]) - f(C + E[i] - E[k]) - f(C - E[i] + E[k]) + f(C - E[i] - E[k])) / (4 * h * h)
            H[:, i, k] = H[:, k, i] = s
    H[np.abs(H) < HESSIAN_NOISE] = 0.0
    return np.max(np.abs(np.linalg.eigvalsh(H)), axis=1)


def remainder_bound_estimate(f, grid_res: int = 11, input_dim: int | None = None) -> float:
    """``M d / 2`` with ``M`` the largest Hessian operator norm on a ``grid_res^d`` grid.

    This is the remainder bound per unit Lipschitz constant of the method,
    which cannot itself be estimated from outside.
    """
    f = as_function(f, input_dim)
    d = f.input_dim
    if grid_res < 2:
        raise ValidationError("grid_res must be >= 2")
    axes = np.linspace(0.0, 1.0, grid_res)
    X = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)
    M = float(hessian_op_norms(f, X).max())
    return M * d / 2.0


# --------------------------------------------------------------------------
# standard suites used by the CLI and tests

POLYNOMIAL_SUITE = ("x1^2 + x2", "x1*x2", "0.5*(x1^2 + x2^2)", "x1 + 2*x2", "x1^3 - x1*x2 + 0.25")
QUADRATIC_SUITE = ("x1^2 + x2", "0.5*(x1^2 + x2^2)", "x1*x2", "(x1 - 0.3)^2 - 2*x1*x2 + x2")


def default_points(d: int = 2, n: int = 5, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.05, 0.95, size=(n, d))


def run_suite(method: AttributionMethod, suite: str = "polynomial", seed: int = 0) -> list[AxiomReport]:
    """Linearity, completeness and sensitivity of ``method`` on a named function suite."""
    suites = {"polynomial": POLYNOMIAL_SUITE, "quadratic": QUADRATIC_SUITE}
    if suite not in suites:
        raise ValidationError(f"unknown suite {suite!r}; choose one of {', '.join(suites)}")
    fns = [as_function(t, 2) for t in suites[suite]]
    X = default_points(2, 5, seed)
    zero = np.zeros(2)
    reports = [check_linearity(method, fns[0], fns[1], (-1.0, 2.0), X, 1e-9)]
    reports += [check_completeness(method, f, zero, X, 1e-3) for f in fns]
    reports.append(check_sensitivity(method, as_function("x1^2 + x1", 2), 1, 64, X, 1e-9, seed))
    return reports


def bound_experiment(method: AttributionMethod, f, x_set, x0, grid_res: int = 11) -> dict:
    """Side-by-side ``M d / 2`` and measured ``||phi(x, R)||_2``; their ratio estimates the Lipschitz constant."""
    X = _points(x_set)
    f = as_function(f, X.shape[1])
    R = taylor_remainder(f, x0)
    norms = [float(np.linalg.norm(method.explain(x, R))) for x in X]
    bound = remainder_bound_estimate(f, grid_res)
    ratio = max(norms) / bound if bound > 0 else math.nan
    return {"bound_per_unit_lipschitz": bound, "remainder_norms": norms, "implied_lipschitz_lower_bound": ratio}
