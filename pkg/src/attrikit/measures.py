"""Measures that define an attribution method.

A method is a family ``(j, x) -> mu_{j,x}`` of measures on ``[0,1]^d``; the
attribution of feature ``j`` at ``x`` is the integral of the model against
``mu_{j,x}``.  Supported measures are products of 1-D components (Dirac,
Lebesgue, density, scaled) and empirical measures built from a dataset.

Rectangles are right-closed ``(a, b]`` except that a side starting at 0 is
closed, ``[0, b]``; this is the convention of the grid cells used to
approximate models, so every point of the box lies in exactly one cell.
Feature indices are 0-based throughout the Python API.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Callable

import numpy as np

from .errors import CapacityError, EmptyMeasureError, ValidationError
from .expr import compile_expression

MEASURE_FORMAT = "attrikit-measure/1"
DENSITY_RESOLUTION = 4096
DEFAULT_BANDWIDTH = 0.05
MAX_INCREMENT_DIM = 20
MAX_ATOMS = 1 << 22


def _in_interval(y, a: float, b: float):
    """Membership in ``(a, b]``, or ``[0, b]`` when ``a == 0``."""
    y = np.asarray(y)
    if a <= 0.0:
        return (y >= a) & (y <= b)
    return (y > a) & (y <= b)


# --------------------------------------------------------------------------
# 1-D components


class Component:
    """A finite signed measure on [0,1]."""

    is_dirac = False

    @property
    def mass(self) -> float:
        raise NotImplementedError

    def cdf(self, t):
        """``mu([0, t])``."""
        raise NotImplementedError

    def interval_mass(self, a: float, b: float) -> float:
        if a <= 0.0:
            return float(self.cdf(b))
        return float(self.cdf(b) - self.cdf(a)) if b > a else 0.0

    def interval_moment(self, a: float, b: float) -> float:
        """``int_{(a,b]} y dmu(y)``."""
        raise NotImplementedError

    def grid(self, res: int) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and weights: cell midpoints weighted by cell mass."""
        edges = np.linspace(0.0, 1.0, res + 1)
        return 0.5 * (edges[:-1] + edges[1:]), cell_masses(self, res)

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Draws with importance weights; ``E[w g(y)] = int g dmu``."""
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Dirac(Component):
    location: float
    is_dirac = True

    def __post_init__(self):
        if not (0.0 <= self.location <= 1.0):
            raise ValidationError(f"Dirac location {self.location} outside [0,1]")

    @property
    def mass(self):
        return 1.0

    def cdf(self, t):
        return (np.asarray(t) >= self.location).astype(float)

    def interval_mass(self, a, b):
        return 1.0 if _in_interval(self.location, a, b) else 0.0

    def interval_moment(self, a, b):
        return self.location * self.interval_mass(a, b)

    def grid(self, res):
        return np.array([self.location]), np.array([1.0])

    def sample(self, rng, n):
        return np.full(n, self.location), np.ones(n)

    def describe(self):
        return {"dirac": self.location}


@dataclass(frozen=True)
class Lebesgue(Component):
    """Uniform unit mass on [0,1]."""

    @property
    def mass(self):
        return 1.0

    def cdf(self, t):
        return np.clip(np.asarray(t, dtype=float), 0.0, 1.0)

    def interval_moment(self, a, b):
        a, b = max(a, 0.0), min(b, 1.0)
        return 0.5 * (b * b - a * a) if b > a else 0.0

    def sample(self, rng, n):
        return rng.random(n), np.ones(n)

    def describe(self):
        return "lebesgue"


def _quadratic_cum(t, nodes, values, cum):
    """Exact integral from 0 to t of the piecewise-linear interpolant of ``values``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    n = nodes.shape[0] - 1
    k = np.minimum((t * n).astype(np.int64), n - 1)
    dt = t - nodes[k]
    slope = (values[k + 1] - values[k]) * n
    return cum[k] + dt * values[k] + 0.5 * dt * dt * slope


class Density(Component):
    """``dmu = h(y) dy``; integrals use the piecewise-linear interpolant of
    ``h`` on a fixed grid, so totals equal the trapezoid rule."""

    def __init__(self, h: Callable[[np.ndarray], np.ndarray], resolution: int = DENSITY_RESOLUTION,
                 text: str | None = None):
        self.h = h
        self.resolution = int(resolution)
        self.text = text
        t = np.linspace(0.0, 1.0, self.resolution + 1)
        H = np.broadcast_to(np.asarray(h(t), dtype=float), t.shape).copy()
        if not np.all(np.isfinite(H)):
            raise ValidationError("density is not finite on [0,1]")
        dt = 1.0 / self.resolution
        self._t = t
        self._H = H
        self._cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (H[1:] + H[:-1]))])
        M = t * H
        self._mcum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (M[1:] + M[:-1]))])
        A = np.abs(H)
        self._acum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (A[1:] + A[:-1]))])

    @classmethod
    def from_expression(cls, text: str, **kw) -> "Density":
        node, _ = compile_expression(text, {"y": 0})
        return cls(lambda t: node(np.asarray(t, dtype=float)[:, None]), text=text, **kw)

    @property
    def mass(self):
        return float(self._cum[-1])

    @property
    def abs_mass(self):
        return float(self._acum[-1])

    def cdf(self, t):
        return _quadratic_cum(t, self._t, self._H, self._cum)

    def interval_moment(self, a, b):
        lo = 0.0 if a <= 0.0 else _quadratic_cum(a, self._t, self._t * self._H, self._mcum)
        return float(_quadratic_cum(b, self._t, self._t * self._H, self._mcum) - lo)

    def sample(self, rng, n):
        if self.abs_mass == 0.0:
            return rng.random(n), np.zeros(n)
        u = rng.random(n) * self.abs_mass
        y = np.interp(u, self._acum, self._t)
        sign = np.sign(np.interp(y, self._t, self._H))
        return y, sign * self.abs_mass

    def describe(self):
        return {"density": self.text if self.text is not None else "<callable>"}

    def __repr__(self):
        return f"Density({self.text or '<callable>'}, mass={self.mass:.6g})"


@dataclass(frozen=True)
class Scaled(Component):
    inner: Component
    factor: float

    def __post_init__(self):
        if not np.isfinite(self.factor):
            raise ValidationError("scale factor must be finite")

    @property
    def is_dirac(self):
        return self.inner.is_dirac

    @property
    def location(self):
        return self.inner.location

    @property
    def mass(self):
        return self.factor * self.inner.mass

    def cdf(self, t):
        return self.factor * self.inner.cdf(t)

    def interval_mass(self, a, b):
        return self.factor * self.inner.interval_mass(a, b)

    def interval_moment(self, a, b):
        return self.factor * self.inner.interval_moment(a, b)

    def grid(self, res):
        nodes, w = self.inner.grid(res)
        return nodes, self.factor * w

    def sample(self, rng, n):
        y, w = self.inner.sample(rng, n)
        return y, self.factor * w

    def describe(self):
        return {"scaled": self.inner.describe(), "factor": self.factor}


def cell_masses(component: Component, p: int) -> np.ndarray:
    """Masses of the cells ``[0,1/p], (1/p,2/p], ..., ((p-1)/p, 1]``."""
    upper = np.asarray(component.cdf(np.arange(1, p + 1) / p), dtype=float)
    return np.diff(upper, prepend=0.0)


def unwrap(component: Component) -> tuple[Component, float]:
    """Strip ``Scaled`` layers, returning the base component and total factor."""
    factor = 1.0
    while isinstance(component, Scaled):
        factor *= component.factor
        component = component.inner
    return component, factor


# --------------------------------------------------------------------------
# rectangles, product and empirical measures


@dataclass(frozen=True)
class HyperRectangle:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValidationError("rectangle bounds must be vectors of equal length")
        if np.any(lo > hi) or np.any(lo < 0) or np.any(hi > 1):
            raise ValidationError("rectangle must satisfy 0 <= lower <= upper <= 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int) -> "HyperRectangle":
        return cls(np.zeros(d), np.ones(d))

    @property
    def dim(self):
        return self.lower.shape[0]

    def contains(self, Y) -> np.ndarray:
        Y = np.atleast_2d(Y)
        inside = np.ones(Y.shape[0], dtype=bool)
        for i in range(self.dim):
            inside &= _in_interval(Y[:, i], self.lower[i], self.upper[i])
        return inside


@dataclass(frozen=True)
class ProductMeasure:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValidationError("product measure needs at least one component")
        for c in comps:
            if not isinstance(c, Component):
                raise ValidationError(f"not a measure component: {c!r}")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def mass(self) -> float:
        return float(np.prod([c.mass for c in self.components]))

    @property
    def dirac_coords(self) -> list[int]:
        return [i for i, c in enumerate(self.components) if c.is_dirac]

    def rect_mass(self, R: HyperRectangle) -> float:
        _check_dim(self, R.dim)
        out = 1.0
        for c, a, b in zip(self.components, R.lower, R.upper):
            out *= c.interval_mass(a, b)
            if out == 0.0:
                return 0.0
        return out

    def cumulative(self, Y) -> np.ndarray:
        """``g(y) = mu([0, y])`` evaluated row-wise."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        out = np.ones(Y.shape[0])
        for i, c in enumerate(self.components):
            out = out * c.cdf(Y[:, i])
        return out

    def sample(self, rng, n):
        cols, w = [], np.ones(n)
        for c in self.components:
            y, wi = c.sample(rng, n)
            cols.append(y)
            w = w * wi
        return np.column_stack(cols), w

    def describe(self):
        return {"product": [c.describe() for c in self.components]}


DATA_MODES = ("joint", "conditional", "marginals-product", "marginals-excluding")


@dataclass(frozen=True, eq=False)
class DataMeasure:
    """Empirical measures built from an ``n x d`` dataset in [0,1].

    ``joint``                 uniform (or weighted) rows
    ``conditional``           rows with ``|row_j - value| <= bandwidth``, reweighted uniformly
    ``marginals-product``     product of per-column marginals, with ``Dirac(value)`` at ``j`` if given
    ``marginals-excluding``   joint law of the other columns, ``Dirac(value)`` at ``j``
    """

    data: np.ndarray
    mode: str = "joint"
    j: int | None = None
    value: float | None = None
    bandwidth: float | None = None
    row_weights: np.ndarray | None = None
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] == 0:
            raise ValidationError("dataset must be a non-empty n x d matrix")
        if np.any(data < 0) or np.any(data > 1) or not np.all(np.isfinite(data)):
            raise ValidationError("dataset entries must lie in [0,1]")
        if self.mode not in DATA_MODES:
            raise ValidationError(f"unknown data-measure mode {self.mode!r}")
        n = data.shape[0]
        w = np.ones(n) if self.row_weights is None else np.asarray(self.row_weights, dtype=float)
        if w.shape != (n,) or np.any(w < 0):
            raise ValidationError("row weights must be nonnegative, one per row")
        needs_feature = self.mode in ("conditional", "marginals-excluding") or self.value is not None
        if needs_feature and (self.j is None or self.value is None or not 0 <= self.j < data.shape[1]):
            raise ValidationError(f"mode {self.mode!r} needs a feature index and value")
        if self.mode == "conditional":
            if self.bandwidth is None or self.bandwidth <= 0:
                raise ValidationError("conditional mode needs bandwidth > 0")
            w = w * (np.abs(data[:, self.j] - self.value) <= self.bandwidth)
            if not np.any(w > 0):
                raise EmptyMeasureError(
                    f"no rows within bandwidth {self.bandwidth} of x_{self.j + 1}={self.value}")
        total = w.sum()
        if total <= 0:
            raise EmptyMeasureError("data measure has zero total weight")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "weights", w / total)

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def mass(self) -> float:
        return 1.0

    @property
    def fixed(self) -> int | None:
        """Coordinate held at a Dirac, if any."""
        if self.mode == "marginals-excluding" or (self.mode == "marginals-product" and self.value is not None):
            return self.j
        return None

    def _marginal(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        vals, inv = np.unique(self.data[:, i], return_inverse=True)
        return vals, np.bincount(inv, weights=self.weights, minlength=vals.shape[0])

    def atoms(self, max_atoms: int = MAX_ATOMS) -> tuple[np.ndarray, np.ndarray]:
        """Support points and their weights."""
        keep = self.weights > 0
        if self.mode in ("joint", "conditional"):
            return self.data[keep], self.weights[keep]
        if self.mode == "marginals-excluding":
            pts = self.data[keep].copy()
            pts[:, self.j] = self.value
            return pts, self.weights[keep]
        axes = []
        for i in range(self.dim):
            if i == self.fixed:
                axes.append((np.array([self.value]), np.array([1.0])))
            else:
                axes.append(self._marginal(i))
        count = int(np.prod([a[0].shape[0] for a in axes], dtype=float))
        if count > max_atoms:
            raise CapacityError(f"product of marginals has {count} atoms, cap is {max_atoms}; use Monte Carlo")
        pts = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1).reshape(-1, self.dim)
        w = np.ones(1)
        for a in axes:
            w = np.multiply.outer(w, a[1]).reshape(-1)
        return pts, w

    def rect_mass(self, R: HyperRectangle) -> float:
        _check_dim(self, R.dim)
        if self.mode == "marginals-product":
            out = 1.0
            for i in range(self.dim):
                if i == self.fixed:
                    out *= float(_in_interval(self.value, R.lower[i], R.upper[i]))
                else:
                    inside = _in_interval(self.data[:, i], R.lower[i], R.upper[i])
                    out *= float(self.weights[inside].sum())
            return out
        pts = self.data
        if self.mode == "marginals-excluding":
            pts = pts.copy()
            pts[:, self.j] = self.value
        return float(self.weights[R.contains(pts)].sum())

    def sample(self, rng, n):
        rows = self.data.shape[0]
        if self.mode == "marginals-product":
            cols = []
            for i in range(self.dim):
                if i == self.fixed:
                    cols.append(np.full(n, self.value))
                else:
                    cols.append(self.data[rng.choice(rows, size=n, p=self.weights), i])
            return np.column_stack(cols), np.ones(n)
        pts = self.data[rng.choice(rows, size=n, p=self.weights)]
        if self.mode == "marginals-excluding":
            pts[:, self.j] = self.value
        return pts, np.ones(n)

    def describe(self):
        out = {"data": list(self.data.shape), "mode": self.mode}
        if self.j is not None:
            out["j"] = self.j
        if self.value is not None:
            out["value"] = self.value
        if self.bandwidth is not None:
            out["bandwidth"] = self.bandwidth
        return out


Measure = ProductMeasure | DataMeasure


def _check_dim(measure, d):
    if measure.dim != d:
        raise ValidationError(f"measure has dimension {measure.dim}, region has {d}")


def rect_mass(measure: Measure, R: HyperRectangle) -> float:
    return measure.rect_mass(R)


def increment(g: Callable[[np.ndarray], np.ndarray], R: HyperRectangle) -> float:
    """Signed corner sum ``sum_v (-1)^|v| g(a^v : b^-v)`` over the ``2^d`` corners.

    Equals ``mu(R)`` when ``g`` is the cumulative function of ``mu``.
    """
    d = R.dim
    if d > MAX_INCREMENT_DIM:
        raise CapacityError(f"increment over {d} dimensions needs 2^{d} corners, cap is 2^{MAX_INCREMENT_DIM}")
    take_lower = np.array(list(iproduct((False, True), repeat=d)), dtype=bool).reshape(-1, d)
    corners = np.where(take_lower, R.lower, R.upper)
    signs = np.where(take_lower.sum(axis=1) % 2 == 0, 1.0, -1.0)
    return float(np.dot(signs, np.asarray(g(corners), dtype=float)))


def center_of_mass(measure: Measure, region) -> tuple[float, np.ndarray]:
    """Mass of ``region`` and its center of mass (zero vector when the mass is 0)."""
    if not isinstance(region, HyperRectangle):
        from .geometry import measure_mass_centroid

        res = measure_mass_centroid(region, measure)
        return res.mass, res.centroid
    _check_dim(measure, region.dim)
    d = region.dim
    if isinstance(measure, ProductMeasure):
        masses = np.array([c.interval_mass(a, b) for c, a, b in zip(measure.components, region.lower, region.upper)])
        mass = float(np.prod(masses))
        if mass == 0.0:
            return 0.0, np.zeros(d)
        moments = np.array([c.interval_moment(a, b) for c, a, b in
                            zip(measure.components, region.lower, region.upper)])
        return mass, moments / masses
    pts, w = measure.atoms()
    inside = region.contains(pts)
    mass = float(w[inside].sum())
    if mass == 0.0:
        return 0.0, np.zeros(d)
    return mass, (w[inside] @ pts[inside]) / mass


# --------------------------------------------------------------------------
# families

PRESETS = ("pdp", "conditional", "marginal-product", "pdp-data", "global-linear", "local-linear",
           "dirac-product", "custom")
_ALIASES = {"pdp-uniform": "pdp", "uniform": "pdp", "marginal": "marginal-product"}


@dataclass(frozen=True, eq=False)
class MeasureFamily:
    """Rule ``(j, x) -> mu_{j,x}``.

    Presets
    -------
    pdp              Dirac(x_j) at j, Lebesgue elsewhere (uniform partial dependence)
    conditional      rows with x_j within ``bandwidth`` (conditional expectation)
    marginal-product product of empirical marginals, Dirac(x_j) at j
    pdp-data         empirical joint law of the other columns, Dirac(x_j) at j
    global-linear    2 x Lebesgue at j, Dirac(0) elsewhere; recovers w_j for f_w
    local-linear     Dirac(x_j) at j, Dirac(0) elsewhere; recovers w_j x_j for f_w
    dirac-product    Dirac(x_j) at j, Dirac(baseline_i) elsewhere
    custom           ``rule(j, x)`` supplied by the caller
    """

    preset: str
    data: np.ndarray | None = None
    bandwidth: float = DEFAULT_BANDWIDTH
    baseline: np.ndarray | None = None
    rule: Callable | None = None
    descriptor: dict | None = None

    def __post_init__(self):
        preset = _ALIASES.get(self.preset, self.preset)
        if preset not in PRESETS:
            raise ValidationError(f"unknown measure preset {self.preset!r}")
        object.__setattr__(self, "preset", preset)
        if preset in ("conditional", "marginal-product", "pdp-data") and self.data is None:
            raise ValidationError(f"preset {preset!r} needs a dataset")
        if preset == "custom" and self.rule is None:
            raise ValidationError("custom family needs a rule")
        if self.data is not None:
            object.__setattr__(self, "data", np.asarray(self.data, dtype=float))
        if preset == "conditional" and not self.bandwidth > 0:
            raise ValidationError("bandwidth must be positive")

    @property
    def is_probability(self) -> bool:
        return self.preset not in ("global-linear", "custom")

    def measure(self, j: int, x) -> Measure:
        x = np.asarray(x, dtype=float)
        d = x.shape[0]
        if not (0 <= j < d):
            raise ValidationError(f"feature index {j} out of range for d={d}")
        if np.any(x < 0) or np.any(x > 1):
            raise ValidationError("explained point must lie in [0,1]^d")
        if self.data is not None and self.data.shape[1] != d:
            raise ValidationError(f"dataset has {self.data.shape[1]} columns, point has {d}")
        p = self.preset
        if p == "pdp":
            return _product_with(d, j, Dirac(x[j]), lambda i: Lebesgue())
        if p == "conditional":
            return DataMeasure(self.data, "conditional", j, float(x[j]), self.bandwidth)
        if p == "marginal-product":
            return DataMeasure(self.data, "marginals-product", j, float(x[j]))
        if p == "pdp-data":
            return DataMeasure(self.data, "marginals-excluding", j, float(x[j]))
        if p == "global-linear":
            return _product_with(d, j, Scaled(Lebesgue(), 2.0), lambda i: Dirac(0.0))
        if p == "local-linear":
            return _product_with(d, j, Dirac(x[j]), lambda i: Dirac(0.0))
        if p == "dirac-product":
            base = np.zeros(d) if self.baseline is None else np.asarray(self.baseline, dtype=float)
            return _product_with(d, j, Dirac(x[j]), lambda i: Dirac(base[i]))
        m = self.rule(j, x)
        if m.dim != d:
            raise ValidationError(f"custom rule returned a measure of dimension {m.dim}, expected {d}")
        return m

    def describe(self):
        if self.descriptor is not None:
            return self.descriptor
        out = {"preset": self.preset}
        if self.preset == "conditional":
            out["bandwidth"] = self.bandwidth
        if self.data is not None:
            out["data_rows"] = int(self.data.shape[0])
        if self.baseline is not None:
            out["baseline"] = np.asarray(self.baseline, dtype=float).tolist()
        return out


def _product_with(d: int, j: int, feature: Component, other: Callable[[int], Component]) -> ProductMeasure:
    return ProductMeasure(tuple(feature if i == j else other(i) for i in range(d)))


def family_measure(family: MeasureFamily, j: int, x) -> Measure:
    return family.measure(j, x)


# --------------------------------------------------------------------------
# file formats


def _component_from_descriptor(desc, xi: float) -> Component:
    if desc == "lebesgue" or (isinstance(desc, dict) and "lebesgue" in desc):
        return Lebesgue()
    if not isinstance(desc, dict):
        raise ValidationError(f"bad component descriptor {desc!r}")
    if "dirac" in desc:
        loc = desc["dirac"]
        return Dirac(xi if loc == "x" else float(loc))
    if "density" in desc:
        return Density.from_expression(str(desc["density"]))
    if "scaled" in desc:
        return Scaled(_component_from_descriptor(desc["scaled"], xi), float(desc.get("factor", 1.0)))
    raise ValidationError(f"bad component descriptor {desc!r}")


def family_from_dict(doc: dict, data: np.ndarray | None = None) -> MeasureFamily:
    """Build a family from an ``attrikit-measure/1`` document.

    ``family`` is a preset name, ``{"preset": name, ...options}``, or
    ``{"custom": {"feature": desc, "other": desc, "coordinates": {"<i>": desc}}}``
    where ``desc`` is ``"lebesgue"``, ``{"dirac": v | "x"}``,
    ``{"density": "<expr in y>"}`` or ``{"scaled": desc, "factor": s}``.
    ``"x"`` stands for the explained point's value at that coordinate;
    coordinate keys are 1-based.
    """
    if doc.get("format") != MEASURE_FORMAT:
        raise ValidationError(f"measure file format must be {MEASURE_FORMAT!r}")
    fam = doc.get("family")
    if isinstance(fam, str):
        return MeasureFamily(fam, data=data, descriptor={"preset": fam})
    if not isinstance(fam, dict):
        raise ValidationError("'family' must be a preset name or an object")
    if "custom" in fam:
        custom = fam["custom"]
        feature = custom.get("feature", {"dirac": "x"})
        other = custom.get("other", "lebesgue")
        overrides = {int(k) - 1: v for k, v in custom.get("coordinates", {}).items()}
        # fail fast on malformed descriptors
        for desc in [feature, other, *overrides.values()]:
            _component_from_descriptor(desc, 0.5)

        def rule(j, x):
            comps = []
            for i in range(x.shape[0]):
                desc = feature if i == j else overrides.get(i, other)
                comps.append(_component_from_descriptor(desc, float(x[i])))
            return ProductMeasure(tuple(comps))

        return MeasureFamily("custom", rule=rule, descriptor={"custom": custom})
    if "preset" in fam:
        opts = {k: v for k, v in fam.items() if k != "preset"}
        kwargs = {}
        if "bandwidth" in opts:
            kwargs["bandwidth"] = float(opts["bandwidth"])
        if "baseline" in opts:
            kwargs["baseline"] = np.asarray(opts["baseline"], dtype=float)
        return MeasureFamily(fam["preset"], data=data, descriptor=fam, **kwargs)
    raise ValidationError("'family' object needs 'preset' or 'custom'")


def load_family(content: str, data: np.ndarray | None = None) -> MeasureFamily:
    try:
        doc = json.loads(content)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"measure file is not valid JSON: {exc.msg}") from None
    return family_from_dict(doc, data)


def load_dataset(content: str) -> np.ndarray:
    """CSV with a header row and numeric columns in [0,1]."""
    rows = list(csv.reader(io.StringIO(content)))
    if len(rows) < 2:
        raise ValidationError("dataset needs a header row and at least one data row")
    header = rows[0]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"dataset: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValidationError("dataset rows must match the header width")
    if np.any(data < 0) or np.any(data > 1) or not np.all(np.isfinite(data)):
        raise ValidationError("dataset entries must lie in [0,1]")
    return data
