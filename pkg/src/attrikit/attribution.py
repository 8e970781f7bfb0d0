"""Attribution engine: ``phi_j(x, f) = int f d mu_{j,x}`` for every feature ``j``.

Backends
--------
exact       ReLU networks only; sum over linear regions of
            ``a_P . moment_P + b_P * mass_P`` (affine integrand per region)
grid        tensor midpoint quadrature (empirical measures are summed exactly)
mc          seeded Monte Carlo, reports a standard error per feature
atomic-sum  the grid-cell sum of a piecewise-constant approximation at ``p``
auto        exact when the network fits the geometry caps, else grid for
            ``d <= 4``, else mc
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field
from threading import Lock

import numpy as np

from .errors import DomainError, ValidationError
from .geometry import MAX_DIM, MAX_HIDDEN, RegionDecomposition, enumerate_regions, measure_mass_centroid
from .integrate import approx_attribution_sum, integrate_atoms, integrate_grid, integrate_mc
from .measures import DataMeasure, MeasureFamily
from .model import Function, ReluNetwork, approximate, as_function
from .parallel import ordered_map

REPORT_FORMAT = "attrikit-report/1"
METHODS = ("auto", "exact", "grid", "mc", "atomic-sum")
DEFAULT_GRID_RES = 1024
DEFAULT_MC_SAMPLES = 100_000
AUTO_GRID_MAX_DIM = 4


@dataclass
class AttributionReport:
    x: np.ndarray
    phi: np.ndarray
    method: str
    settings: dict = field(default_factory=dict)
    model_fingerprint: str = ""
    stderr: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.shape != self.x.shape:
            raise ValidationError("phi must have one entry per feature")
        if (self.stderr is not None) != (self.method == "mc"):
            raise ValidationError("stderr is reported for Monte Carlo attributions only")

    def to_dict(self) -> dict:
        out = {"format": REPORT_FORMAT, "x": self.x.tolist(), "phi": self.phi.tolist(), "method": self.method}
        if self.stderr is not None:
            out["stderr"] = np.asarray(self.stderr, dtype=float).tolist()
        out["settings"] = self.settings
        out["model_fingerprint"] = self.model_fingerprint
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# --------------------------------------------------------------------------
# exact ReLU backend

_CACHE_SIZE = 16
_region_cache: OrderedDict[str, RegionDecomposition] = OrderedDict()
_cache_lock = Lock()


def regions_for(net: ReluNetwork, max_dim: int = MAX_DIM, max_hidden: int = MAX_HIDDEN) -> RegionDecomposition:
    """Region decomposition, cached by network fingerprint."""
    key = net.fingerprint
    with _cache_lock:
        if key in _region_cache:
            _region_cache.move_to_end(key)
            return _region_cache[key]
    decomp = enumerate_regions(net, max_dim, max_hidden)
    with _cache_lock:
        _region_cache[key] = decomp
        while len(_region_cache) > _CACHE_SIZE:
            _region_cache.popitem(last=False)
    return decomp


def exact_from_regions(decomp, measure) -> float:
    """``sum_P a_P . int_P y dmu + b_P mu(P)``; zero-mass regions contribute nothing."""
    total = 0.0
    for r in decomp:
        mc = measure_mass_centroid(r.polytope, measure)
        if mc.mass != 0.0 or np.any(mc.moment != 0.0):
            total += float(r.a @ mc.moment) + r.b * mc.mass
    return total


def attribute_relu_exact(net: ReluNetwork, family: MeasureFamily, x, decomposition: RegionDecomposition | None = None,
                         threads: int | None = None) -> AttributionReport:
    x = _check_point(x, net.input_dim)
    decomp = decomposition if decomposition is not None else regions_for(net)
    phi = ordered_map(lambda j: exact_from_regions(decomp, family.measure(j, x)), range(x.shape[0]), threads)
    settings = {"family": family.describe(), "regions": len(decomp)}
    return AttributionReport(x, np.array(phi), "exact", settings, net.fingerprint)


def attribute_linear_closed_form(w, preset: str, x=None) -> np.ndarray:
    """``w`` for the global preset, ``w * x`` for the local one.

    The local form needs ``x`` strictly inside the box.
    """
    w = np.asarray(w, dtype=float)
    if preset == "global":
        return w.copy()
    if preset != "local":
        raise ValidationError(f"closed form preset must be 'global' or 'local', got {preset!r}")
    if x is None:
        raise ValidationError("local closed form needs a point x")
    x = np.asarray(x, dtype=float)
    if x.shape != w.shape:
        raise ValidationError("x and w must have the same length")
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise DomainError("local closed form requires x in the open box (0,1)^d")
    return w * x


# --------------------------------------------------------------------------
# dispatcher


def _check_point(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise ValidationError(f"point must have {d} coordinates, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x < 0) or np.any(x > 1):
        raise ValidationError("explained point must lie in [0,1]^d")
    return x


def _fits_exact(f: Function) -> bool:
    return isinstance(f, ReluNetwork) and f.input_dim <= MAX_DIM and sum(f.hidden_widths) <= MAX_HIDDEN


def resolve_method(f: Function, method: str) -> str:
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose one of {', '.join(METHODS)}")
    if method == "exact" and not isinstance(f, ReluNetwork):
        raise ValidationError("exact requires relu model")
    if method != "auto":
        return method
    if _fits_exact(f):
        return "exact"
    return "grid" if f.input_dim <= AUTO_GRID_MAX_DIM else "mc"


def _grid_one(f, measure, res):
    if isinstance(measure, DataMeasure):
        return integrate_atoms(f, measure)
    return integrate_grid(f, measure, res)


def attribute(f, family: MeasureFamily | str, x, method: str = "auto", *, grid_res: int = DEFAULT_GRID_RES,
              mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0, p: int | None = None,
              threads: int | None = None) -> AttributionReport:
    """Attribution of ``f`` at ``x`` under ``family`` with the chosen backend.

    Monte Carlo uses the same seed for every feature (common random numbers).
    ``threads`` only changes speed, never the result.
    """
    if isinstance(family, str):
        family = MeasureFamily(family)
    x = np.asarray(x, dtype=float)
    f = as_function(f, x.shape[0] if x.ndim == 1 else None)
    x = _check_point(x, f.input_dim)
    method = resolve_method(f, method)
    settings: dict = {"family": family.describe()}
    d = x.shape[0]

    if method == "exact":
        report = attribute_relu_exact(f, family, x, threads=threads)
        report.settings = {**settings, "regions": report.settings["regions"]}
        return report
    if method == "grid":
        settings["grid_res"] = grid_res
        phi = ordered_map(lambda j: _grid_one(f, family.measure(j, x), grid_res), range(d), threads)
        return AttributionReport(x, np.array(phi), "grid", settings, f.fingerprint)
    if method == "mc":
        settings.update(samples=mc_samples, seed=seed)
        res = [integrate_mc(f, family.measure(j, x), mc_samples, seed, threads) for j in range(d)]
        return AttributionReport(x, np.array([r.estimate for r in res]), "mc", settings, f.fingerprint,
                                 stderr=np.array([r.stderr for r in res]))
    if p is None:
        raise ValidationError("atomic-sum needs a resolution p")
    settings["p"] = p
    f_p = approximate(f, p)
    phi = [approx_attribution_sum(f_p, family.measure(j, x)) for j in range(d)]
    return AttributionReport(x, np.array(phi), "atomic-sum", settings, f.fingerprint)


# --------------------------------------------------------------------------
# named specializations


def pdp(f, x, data=None, method: str = "auto", **opts) -> AttributionReport:
    """Partial dependence: uniform over the other features, or their empirical joint law when ``data`` is given."""
    family = MeasureFamily("pdp") if data is None else MeasureFamily("pdp-data", data=data)
    return attribute(f, family, x, method, **opts)


def conditional_expectation(f, x, data, bandwidth: float, method: str = "grid", **opts) -> AttributionReport:
    family = MeasureFamily("conditional", data=data, bandwidth=bandwidth)
    return attribute(f, family, x, method, **opts)


def marginal_product(f, x, data, n: int = DEFAULT_MC_SAMPLES, seed: int = 0, **opts) -> AttributionReport:
    family = MeasureFamily("marginal-product", data=data)
    return attribute(f, family, x, "mc", mc_samples=n, seed=seed, **opts)


def approx_attribution_sequence(f, family: MeasureFamily, x, p_list) -> list[np.ndarray]:
    """``phi(x, f_p)`` for each ``p``; ``f_p`` is the piecewise-constant approximation on the ``p^d`` grid."""
    p_list = [int(p) for p in p_list]
    if any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise ValidationError("p values must be strictly ascending")
    x = np.asarray(x, dtype=float)
    f = as_function(f, x.shape[0])
    x = _check_point(x, f.input_dim)
    out = []
    for p in p_list:
        f_p = approximate(f, p)
        out.append(np.array([approx_attribution_sum(f_p, family.measure(j, x)) for j in range(x.shape[0])]))
    return out
