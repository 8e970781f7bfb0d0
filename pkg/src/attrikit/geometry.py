"""Exact linear-region geometry of ReLU networks on the unit box.

Polytopes are kept in both representations: halfspaces ``A y <= c`` (rows
normalized, box facets always present) and their vertices.  Regions are
built by layer-wise subdivision: inside a cell the pre-activations of the
next layer are affine, so each unit contributes one cutting hyperplane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import CapacityError, ValidationError
from .measures import DataMeasure, Density, ProductMeasure, unwrap
from .model import ReluNetwork, affine_coeffs, pattern_bits

FEAS_TOL = 1e-9
DEDUP_TOL = 1e-8
SLIVER_VOLUME = 1e-12
RANK_TOL = 1e-10
MAX_DIM = 6
MAX_HIDDEN = 64
MAX_SUBSETS = 5_000_000
MC_SAMPLES = 20_000
REGIONS_FORMAT = "attrikit-regions/1"


def _dedupe(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol for q in kept):
            kept.append(p)
    if not kept:
        return np.empty((0, points.shape[1]))
    return np.array(kept)


def affine_dim(points: np.ndarray) -> int:
    if points.shape[0] == 0:
        return -1
    if points.shape[0] == 1:
        return 0
    return int(np.linalg.matrix_rank(points[1:] - points[0], tol=RANK_TOL))


@dataclass(frozen=True, eq=False)
class Polytope:
    """Bounded convex polytope ``{y : A y <= c}`` inside the unit box.

    ``box`` flags the rows that are box facets; those are never pruned.
    ``V`` caches the vertices.
    """

    A: np.ndarray
    c: np.ndarray
    V: np.ndarray
    box: np.ndarray

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @classmethod
    def unit_box(cls, d: int) -> "Polytope":
        A = np.vstack([np.eye(d), -np.eye(d)])
        c = np.concatenate([np.ones(d), np.zeros(d)])
        corners = np.array(np.meshgrid(*([[0.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T
        return cls(A, c, corners, np.ones(2 * d, dtype=bool))

    @classmethod
    def from_halfspaces(cls, A, c) -> "Polytope":
        """Intersect ``{A y <= c}`` with the unit box; vertices by d-subset enumeration."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        c = np.atleast_1d(np.asarray(c, dtype=float))
        d = A.shape[1]
        box = cls.unit_box(d)
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms < 1e-14):
            raise ValidationError("halfspace normals must be nonzero")
        A_all = np.vstack([box.A, A / norms[:, None]])
        c_all = np.concatenate([box.c, c / norms])
        flags = np.concatenate([box.box, np.zeros(A.shape[0], dtype=bool)])
        V = enumerate_vertices(A_all, c_all)
        return cls(A_all, c_all, V, flags)._pruned()

    @cached_property
    def tight(self) -> np.ndarray:
        return np.abs(self.V @ self.A.T - self.c) <= FEAS_TOL

    def _pruned(self) -> "Polytope":
        """Drop non-box rows that touch fewer than ``d`` vertices (not facets)."""
        if self.V.shape[0] == 0:
            return self
        keep = self.box | (self.tight.sum(axis=0) >= self.dim)
        if keep.all():
            return self
        return Polytope(self.A[keep], self.c[keep], self.V, self.box[keep])

    @property
    def is_empty(self) -> bool:
        return self.V.shape[0] == 0

    @cached_property
    def simplices(self) -> np.ndarray:
        return triangulate(self)

    @cached_property
    def volume(self) -> float:
        return lebesgue_volume(self)

    @cached_property
    def centroid(self) -> np.ndarray:
        return lebesgue_centroid(self)

    @property
    def interior_point(self) -> np.ndarray:
        return self.V.mean(axis=0)

    def contains(self, Y, tol: float = FEAS_TOL) -> np.ndarray:
        Y = np.atleast_2d(Y)
        return np.all(Y @ self.A.T - self.c <= tol, axis=1)


# --------------------------------------------------------------------------
# vertices


def enumerate_vertices(A: np.ndarray, c: np.ndarray) -> np.ndarray:
    """All feasible intersections of ``d`` halfspace boundaries, deduplicated."""
    m, d = A.shape
    if math.comb(m, d) > MAX_SUBSETS:
        raise CapacityError(f"vertex enumeration over C({m},{d}) subsets exceeds cap {MAX_SUBSETS}")
    found = []
    combos = np.array(list(combinations(range(m), d)), dtype=np.int64).reshape(-1, d)
    for s in range(0, combos.shape[0], 65536):
        idx = combos[s:s + 65536]
        M = A[idx]
        rhs = c[idx]
        ok = np.abs(np.linalg.det(M)) > 1e-12
        if not ok.any():
            continue
        pts = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        feas = np.all(pts @ A.T - c <= FEAS_TOL, axis=1)
        found.append(pts[feas])
    if not found:
        return np.empty((0, d))
    pts = np.vstack(found)
    if pts.shape[0] == 0:
        return pts
    order = np.lexsort(pts.T[::-1])
    return _dedupe(pts[order])


def vertices(polytope: Polytope) -> list[np.ndarray]:
    """Vertices recomputed from the halfspaces alone."""
    return list(enumerate_vertices(polytope.A, polytope.c))


def _crossings(P: Polytope, s: np.ndarray, neg: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Points where edges of ``P`` cross the level set ``s = 0``.

    Two vertices span an edge iff the rows tight at both have rank ``d - 1``.
    """
    d = P.dim
    ineg, ipos = np.flatnonzero(neg), np.flatnonzero(pos)
    T = P.tight[ineg][:, None, :] & P.tight[ipos][None, :, :]
    counts = T.sum(axis=-1)
    out = []
    rank_cache: dict[bytes, int] = {}
    for a, b in zip(*np.nonzero(counts >= d - 1)):
        mask = T[a, b]
        key = mask.tobytes()
        r = rank_cache.get(key)
        if r is None:
            r = int(np.linalg.matrix_rank(P.A[mask], tol=RANK_TOL)) if mask.any() else 0
            rank_cache[key] = r
        if r != d - 1:
            continue
        u, v = P.V[ineg[a]], P.V[ipos[b]]
        su, sv = s[ineg[a]], s[ipos[b]]
        out.append(u + (su / (su - sv)) * (v - u))
    if not out:
        return np.empty((0, d))
    return np.array(out)


def _with_row(P: Polytope, n: np.ndarray, o: float, V: np.ndarray) -> Polytope | None:
    V = _dedupe(V)
    if V.shape[0] == 0:
        return None
    Q = Polytope(np.vstack([P.A, n]), np.append(P.c, o), V, np.append(P.box, False))._pruned()
    if Q.volume < SLIVER_VOLUME:
        return None
    return Q


def split(polytope: Polytope, normal, offset: float) -> tuple[Polytope | None, Polytope | None]:
    """``(P ∩ {n.y <= o}, P ∩ {n.y >= o})``; a side is ``None`` when empty or a sliver.

    A hyperplane that does not cut the interior leaves ``P`` unchanged.
    """
    n = np.asarray(normal, dtype=float)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        return (polytope, None) if offset >= 0 else (None, polytope)
    n, o = n / norm, float(offset) / norm
    s = polytope.V @ n - o
    neg, pos = s < -FEAS_TOL, s > FEAS_TOL
    if not pos.any():
        return polytope, None
    if not neg.any():
        return None, polytope
    zero = ~neg & ~pos
    X = _crossings(polytope, s, neg, pos)
    below = _with_row(polytope, n, o, np.vstack([polytope.V[neg | zero], X]))
    above = _with_row(polytope, -n, -o, np.vstack([polytope.V[pos | zero], X]))
    return below, above


def section(polytope: Polytope, coords, values) -> Polytope | None:
    """Fix ``y[coords] = values`` and return the slice in the remaining coordinates.

    Returns ``None`` if the slice is empty.  The result may be lower dimensional
    (check ``affine_dim(result.V)``).
    """
    coords = list(coords)
    values = np.asarray(values, dtype=float)
    P = polytope
    V = P.V
    for i, v in zip(coords, values):
        s = V[:, i] - v
        neg, pos = s < -FEAS_TOL, s > FEAS_TOL
        zero = ~neg & ~pos
        if neg.any() and pos.any():
            tmp = Polytope(P.A, P.c, V, P.box)
            X = _crossings(tmp, s, neg, pos)
            V = np.vstack([V[zero], X])
        else:
            V = V[zero]
        if V.shape[0] == 0:
            return None
        V = _dedupe(V)
        V[:, i] = v
    free = [i for i in range(P.dim) if i not in set(coords)]
    A = P.A[:, free]
    c = P.c - P.A[:, coords] @ values
    norms = np.linalg.norm(A, axis=1)
    live = norms > 1e-12
    if np.any(c[~live] < -FEAS_TOL):
        return None
    A, c = A[live] / norms[live, None], c[live] / norms[live]
    box = P.box[live]
    Q = Polytope(A, c, V[:, free], box)
    return Q


# --------------------------------------------------------------------------
# triangulation, volume, centroid


def _fan(V: np.ndarray, tight: np.ndarray, S: np.ndarray, k: int, top: bool = False) -> list[np.ndarray]:
    # faces that are already simplices are not subdivided further
    if S.shape[0] == k + 1 and not top:
        return [V[S]]
    center = V[S].mean(axis=0)
    seen = set()
    out = []
    for i in range(tight.shape[1]):
        Si = S[tight[S, i]]
        if Si.shape[0] == 0 or Si.shape[0] == S.shape[0]:
            continue
        key = Si.tobytes()
        if key in seen:
            continue
        seen.add(key)
        if affine_dim(V[Si]) != k - 1:
            continue
        for simplex in _fan(V, tight, Si, k - 1):
            out.append(np.vstack([center, simplex]))
    return out


def triangulate(polytope: Polytope) -> np.ndarray:
    """Fan triangulation from the vertex average, applied recursively to facets.

    Returns an ``(n, d+1, d)`` array of simplices; empty for lower-dimensional input.
    """
    d = polytope.dim
    V = polytope.V
    if V.shape[0] <= d or affine_dim(V) < d:
        return np.empty((0, d + 1, d))
    simplices = _fan(V, polytope.tight, np.arange(V.shape[0]), d, top=True)
    return np.array(simplices) if simplices else np.empty((0, d + 1, d))


def simplex_volumes(simplices: np.ndarray) -> np.ndarray:
    if simplices.shape[0] == 0:
        return np.empty(0)
    d = simplices.shape[2]
    edges = simplices[:, 1:, :] - simplices[:, :1, :]
    return np.abs(np.linalg.det(edges)) / math.factorial(d)


def lebesgue_volume(polytope: Polytope) -> float:
    return float(simplex_volumes(polytope.simplices).sum())


def lebesgue_centroid(polytope: Polytope) -> np.ndarray:
    vols = simplex_volumes(polytope.simplices)
    total = vols.sum()
    if total == 0.0:
        return np.zeros(polytope.dim)
    return (vols @ polytope.simplices.mean(axis=1)) / total


def sample_uniform(polytope: Polytope, n: int, rng: np.random.Generator) -> np.ndarray:
    simplices = polytope.simplices
    vols = simplex_volumes(simplices)
    if vols.sum() == 0.0:
        raise ValidationError("cannot sample a degenerate polytope")
    which = rng.choice(vols.shape[0], size=n, p=vols / vols.sum())
    bary = rng.dirichlet(np.ones(polytope.dim + 1), size=n)
    return np.einsum("nk,nkd->nd", bary, simplices[which])


# --------------------------------------------------------------------------
# measures on polytopes


@dataclass(frozen=True)
class MassCentroid:
    """``mass = mu(P)``, ``moment = int_P y dmu``, ``centroid = moment / mass`` (0 if mass is 0)."""

    mass: float
    centroid: np.ndarray
    moment: np.ndarray
    stderr: float | None = None


_GENERIC = 1.0 + np.sqrt(2.0) * 0.1 * np.arange(1, 64)


def _tie_direction(Y: np.ndarray, active: np.ndarray | None = None) -> np.ndarray:
    """Direction used to break ties on shared facets.

    Moving slightly toward smaller values (toward larger at 0) mimics the
    right-closed-cell convention; the unequal magnitudes keep the direction
    off any hyperplane normal that is not axis-specific.
    """
    d = Y.shape[1]
    U = np.where(Y <= FEAS_TOL, 1.0, -1.0) * _GENERIC[:d]
    if active is not None:
        U = U * active
    return U


def owns(polytope: Polytope, Y, active: np.ndarray | None = None) -> np.ndarray:
    """Which points belong to ``polytope`` once boundary ties are broken.

    A point on a facet belongs here iff the tie direction points into the
    polytope for every row that is tight at it.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    r = Y @ polytope.A.T - polytope.c
    inside = np.all(r <= FEAS_TOL, axis=1)
    U = _tie_direction(Y, active)
    bad = (np.abs(r) <= FEAS_TOL) & (U @ polytope.A.T >= 0.0)
    return inside & ~bad.any(axis=1)


def _zero(d: int) -> MassCentroid:
    return MassCentroid(0.0, np.zeros(d), np.zeros(d))


def measure_mass_centroid(polytope: Polytope, measure, n_mc: int = MC_SAMPLES, seed: int = 0) -> MassCentroid:
    """Mass and center of mass of ``polytope`` under ``measure``.

    Lebesgue parts are exact (triangulation); Dirac coordinates are sliced
    out; density parts use seeded Monte Carlo over the slice and report a
    standard error; data measures sum the atoms the polytope owns.
    """
    d = polytope.dim
    if measure.dim != d:
        raise ValidationError(f"measure has dimension {measure.dim}, polytope has {d}")
    if isinstance(measure, DataMeasure):
        pts, w = measure.atoms()
        mine = owns(polytope, pts)
        mass = float(w[mine].sum())
        if mass == 0.0:
            return _zero(d)
        moment = w[mine] @ pts[mine]
        return MassCentroid(mass, moment / mass, moment)
    if not isinstance(measure, ProductMeasure):
        raise ValidationError(f"unsupported measure type {type(measure).__name__}")

    bases, factors = zip(*(unwrap(c) for c in measure.components))
    factor = float(np.prod(factors))
    D = [i for i, b in enumerate(bases) if b.is_dirac]
    free = [i for i in range(d) if i not in D]
    locs = np.array([bases[i].location for i in D])
    if factor == 0.0:
        return _zero(d)

    full = np.zeros(d)
    full[D] = locs
    active = np.zeros(d)
    active[D] = 1.0
    if not free:
        if not owns(polytope, full[None, :], active[None, :])[0]:
            return _zero(d)
        return MassCentroid(factor, full.copy(), factor * full)

    S = section(polytope, D, locs) if D else polytope
    if S is None or affine_dim(S.V) < len(free):
        return _zero(d)
    if D:
        full[free] = S.interior_point
        if not owns(polytope, full[None, :], active[None, :])[0]:
            return _zero(d)

    dens = [k for k, i in enumerate(free) if isinstance(bases[i], Density)]
    stderr = None
    if not dens:
        vol = S.volume
        mass_free, moment_free = vol, vol * S.centroid
    else:
        rng = np.random.default_rng(seed)
        Y = sample_uniform(S, n_mc, rng)
        w = np.ones(n_mc)
        for k in dens:
            base = bases[free[k]]
            w = w * np.interp(Y[:, k], base._t, base._H)
        vol = S.volume
        mass_free = vol * w.mean()
        moment_free = vol * (w @ Y) / n_mc
        stderr = float(abs(factor) * vol * w.std(ddof=1) / math.sqrt(n_mc))
    mass = factor * mass_free
    moment = np.zeros(d)
    moment[D] = mass * locs
    moment[free] = factor * moment_free
    centroid = moment / mass if mass != 0.0 else np.zeros(d)
    return MassCentroid(float(mass), centroid, moment, stderr)


# --------------------------------------------------------------------------
# region enumeration


@dataclass(frozen=True, eq=False)
class Region:
    polytope: Polytope
    pattern: tuple
    a: np.ndarray
    b: float


@dataclass(frozen=True, eq=False)
class RegionDecomposition:
    regions: list
    fingerprint: str
    network: ReluNetwork = field(repr=False)

    def __len__(self):
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)

    @property
    def total_volume(self) -> float:
        return float(sum(r.polytope.volume for r in self.regions))


def _hidden_affine(net: ReluNetwork, pattern: tuple, d: int) -> tuple[np.ndarray, np.ndarray]:
    M, c = np.eye(d), np.zeros(d)
    for (W, b), mask in zip(net.hidden, pattern):
        M = (W @ M) * mask[:, None]
        c = (W @ c + b) * mask
    return M, c


def enumerate_regions(net: ReluNetwork, max_dim: int = MAX_DIM, max_hidden: int = MAX_HIDDEN) -> RegionDecomposition:
    """Exact partition of the box into the network's linear regions.

    Cells are independent work items; their order only affects output order.
    """
    d = net.input_dim
    if d > max_dim:
        raise CapacityError(f"input dimension {d} exceeds cap {max_dim}")
    if sum(net.hidden_widths) > max_hidden:
        raise CapacityError(f"{sum(net.hidden_widths)} hidden units exceed cap {max_hidden}")
    cells = [(Polytope.unit_box(d), ())]
    for W, b in net.hidden:
        nxt = []
        for P, pattern in cells:
            M, c = _hidden_affine(net, pattern, d)
            ZA, Zb = W @ M, W @ c + b
            pieces = [P]
            for i in range(W.shape[0]):
                cut = []
                for Q in pieces:
                    # z_i <= 0  <=>  ZA_i . y <= -Zb_i
                    below, above = split(Q, ZA[i], -Zb[i])
                    cut.extend(x for x in (below, above) if x is not None)
                pieces = cut
            for Q in pieces:
                mask = (ZA @ Q.interior_point + Zb) > 0
                nxt.append((Q, pattern + (mask,)))
        cells = nxt
    regions = []
    for P, pattern in cells:
        a, b0 = affine_coeffs(net, pattern)
        regions.append(Region(P, pattern, a, b0))
    return RegionDecomposition(regions, net.fingerprint, net)


def regions_document(decomp: RegionDecomposition) -> dict:
    """Stable dump: one record per region, vertices sorted lexicographically."""
    records = []
    for r in decomp.regions:
        V = r.polytope.V
        V = V[np.lexsort(V.T[::-1])]
        records.append({
            "pattern": pattern_bits(r.pattern),
            "halfspaces": [{"normal": n.tolist(), "offset": float(o)} for n, o in zip(r.polytope.A, r.polytope.c)],
            "vertices": V.tolist(),
            "volume": r.polytope.volume,
            "a": r.a.tolist(),
            "b": r.b,
        })
    return {"format": REGIONS_FORMAT, "model_fingerprint": decomp.fingerprint, "regions": records}
