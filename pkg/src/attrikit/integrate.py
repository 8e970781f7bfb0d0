"""Numerical integration of models against attribution measures.

Three paths:

* ``integrate_grid``: tensor midpoint rule on the non-Dirac coordinates,
  each node weighted by the exact mass of its cell;
* ``integrate_mc``: seeded Monte Carlo, split into fixed-size chunks whose
  seeds are ``seed + chunk_index`` so the result does not depend on how many
  workers process the chunks;
* ``approx_attribution_sum``: the atomic sum of a piecewise-constant
  approximation, each cell value times the cell's measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ValidationError
from .measures import DataMeasure, ProductMeasure, cell_masses
from .model import MAX_GRID_CELLS, Function, PiecewiseConstantApprox, cell_index
from .parallel import ordered_map

MC_CHUNK = 1 << 16
EVAL_CHUNK = 1 << 18
MAX_ATOM_EVAL = 1 << 24


def integrate_grid(f: Function, measure: ProductMeasure, resolution: int, max_points: int = MAX_GRID_CELLS,
                   threads: int | None = None) -> float:
    if not isinstance(measure, ProductMeasure):
        raise ValidationError("grid quadrature needs a product measure")
    if resolution < 2:
        raise ValidationError("grid resolution must be >= 2")
    if measure.dim != f.input_dim:
        raise ValidationError(f"measure has dimension {measure.dim}, model has {f.input_dim}")
    axes = [c.grid(resolution) for c in measure.components]
    shape = tuple(n.shape[0] for n, _ in axes)
    total = math.prod(shape)
    if total > max_points:
        raise CapacityError(f"grid of {total} points exceeds cap {max_points}")

    def chunk_sum(start: int) -> float:
        idx = np.unravel_index(np.arange(start, min(start + EVAL_CHUNK, total)), shape)
        Y = np.column_stack([axes[i][0][k] for i, k in enumerate(idx)])
        w = np.ones(Y.shape[0])
        for i, k in enumerate(idx):
            w = w * axes[i][1][k]
        return float(np.dot(f(Y), w))

    return math.fsum(ordered_map(chunk_sum, range(0, total, EVAL_CHUNK), threads))


@dataclass(frozen=True)
class MCResult:
    estimate: float
    stderr: float
    n: int

    def __iter__(self):
        return iter((self.estimate, self.stderr))


def _merge(a, b):
    """Chan's pairwise merge of (count, mean, M2)."""
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def integrate_mc(f: Function, measure, n: int, seed: int = 0, threads: int | None = None,
                 chunk: int = MC_CHUNK) -> MCResult:
    """Unbiased estimate of ``int f dmu`` with its standard error.

    Samples carry importance weights (signed or scaled components, density
    draws from |h|); the estimator is the mean of ``f * weight``.
    """
    if n < 2:
        raise ValidationError("Monte Carlo needs n >= 2 samples")
    if measure.dim != f.input_dim:
        raise ValidationError(f"measure has dimension {measure.dim}, model has {f.input_dim}")
    starts = list(range(0, n, chunk))

    def run(k: int):
        m = min(chunk, n - starts[k])
        rng = np.random.default_rng(seed + k)
        Y, w = measure.sample(rng, m)
        v = f(Y) * w
        mean = float(v.mean())
        return m, mean, float(((v - mean) ** 2).sum())

    parts = ordered_map(run, range(len(starts)), threads)
    acc = parts[0]
    for p in parts[1:]:
        acc = _merge(acc, p)
    count, mean, m2 = acc
    return MCResult(mean, math.sqrt(m2 / (count - 1)) / math.sqrt(count), count)


def integrate_atoms(f: Function, measure: DataMeasure, max_atoms: int = MAX_ATOM_EVAL) -> float:
    """Exact integral against an empirical measure: the weighted sum over its atoms."""
    pts, w = measure.atoms(max_atoms)
    return float(np.dot(f(pts), w))


def _data_cell_masses(measure: DataMeasure, i: int, p: int) -> np.ndarray:
    if i == measure.fixed:
        out = np.zeros(p)
        out[cell_index(np.array([measure.value]), p)[0]] = 1.0
        return out
    return np.bincount(cell_index(measure.data[:, i], p), weights=measure.weights, minlength=p)


def approx_attribution_sum(f_p: PiecewiseConstantApprox, measure) -> float:
    """``sum over cells of f_p(cell) * mu(cell)`` on the ``p^d`` grid."""
    if measure.dim != f_p.input_dim:
        raise ValidationError(f"measure has dimension {measure.dim}, approximation has {f_p.input_dim}")
    p = f_p.p
    if isinstance(measure, DataMeasure) and measure.mode in ("joint", "conditional", "marginals-excluding"):
        pts, w = measure.atoms()
        return float(np.dot(f_p(pts), w))
    if isinstance(measure, DataMeasure):
        masses = [_data_cell_masses(measure, i, p) for i in range(measure.dim)]
    else:
        masses = [cell_masses(c, p) for c in measure.components]
    out = f_p.grid_values
    for m in masses:
        out = np.tensordot(m, out, axes=(0, 0))
    return float(out)


def max_grid_points(measure: ProductMeasure, resolution: int) -> int:
    return math.prod(1 if c.is_dirac else resolution for c in measure.components)
