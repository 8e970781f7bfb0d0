"""Recall and precision of attributions against linear ground truth.

For a linear model ``f_w`` the golden features are ``D1 = {i : |w_i| > beta}``;
a feature is flagged when ``|phi_j| >= alpha``.  A measure vector is
represented by its centers of mass ``m_j``, so ``phi_j = w . m_j``.  The
ReLU variants sum the linear metric over the network's linear regions,
using each region's slope ``a_P`` as ``w``.

Feature indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError, ValidationError
from .geometry import RegionDecomposition
from .model import ReluNetwork


@dataclass(frozen=True)
class GoldenSplit:
    D1: frozenset
    D0: frozenset
    beta: float


def golden_split(w, beta: float) -> GoldenSplit:
    """``|w_i| == beta`` goes to ``D0``."""
    if not beta > 0:
        raise ValidationError("beta must be > 0")
    w = np.asarray(w, dtype=float)
    big = np.abs(w) > beta
    return GoldenSplit(frozenset(np.flatnonzero(big).tolist()), frozenset(np.flatnonzero(~big).tolist()), float(beta))


def _hits(phi, alpha: float) -> np.ndarray:
    if not alpha > 0:
        raise ValidationError("alpha must be > 0")
    return np.abs(np.asarray(phi, dtype=float)) >= alpha


def _check_lengths(w, phi):
    if np.shape(w) != np.shape(phi):
        raise ValidationError("w and phi must have the same length")


def recall(w, alpha: float, beta: float, phi) -> float:
    _check_lengths(w, phi)
    split = golden_split(w, beta)
    if not split.D1:
        raise UndefinedMetricError("recall is undefined: golden set D1 is empty")
    hits = _hits(phi, alpha)
    return sum(bool(hits[j]) for j in split.D1) / len(split.D1)


def precision(w, alpha: float, beta: float, phi) -> float:
    _check_lengths(w, phi)
    split = golden_split(w, beta)
    hits = _hits(phi, alpha)
    tp = sum(bool(hits[j]) for j in split.D1)
    fp = sum(bool(hits[j]) for j in split.D0)
    if tp + fp == 0:
        raise UndefinedMetricError("precision is undefined: no feature reaches alpha")
    return tp / (tp + fp)


def projected_attribution(w, m_list) -> np.ndarray:
    """``phi_j = w . m_j`` for centers of mass ``m_list`` (one row per feature)."""
    w = np.asarray(w, dtype=float)
    M = np.asarray(m_list, dtype=float)
    if M.shape != (w.shape[0], w.shape[0]):
        raise ValidationError(f"need {w.shape[0]} centers of dimension {w.shape[0]}, got shape {M.shape}")
    if np.any(M < 0) or np.any(M > 1):
        raise ValidationError("centers of mass must lie in [0,1]^d")
    return M @ w


def _check_center(w, m) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    m = np.asarray(m, dtype=float)
    if m.shape != w.shape:
        raise ValidationError("center must have the same dimension as w")
    if np.any(m < 0) or np.any(m > 1):
        raise ValidationError("center of mass must lie in [0,1]^d")
    return w, m


def recall_solution_set_contains(w, alpha: float, beta: float, j: int, m) -> bool:
    """Every center is optimal for a non-golden feature; golden ones need ``|w . m| >= alpha``."""
    w, m = _check_center(w, m)
    if j not in golden_split(w, beta).D1:
        return True
    return bool(abs(w @ m) >= alpha)


def precision_solution_set_contains(w, alpha: float, beta: float, j: int, m) -> bool:
    w, m = _check_center(w, m)
    s = abs(w @ m)
    if j in golden_split(w, beta).D1:
        return bool(s >= alpha)
    return bool(s < alpha)


# --------------------------------------------------------------------------
# ReLU networks


@dataclass(frozen=True)
class ReluMetric:
    """Sum of per-region metrics; regions where the metric is undefined are skipped and counted."""

    value: float
    skipped_regions: int
    regions: int

    def __float__(self):
        return self.value


def _decomposition(net: ReluNetwork, decomposition: RegionDecomposition | None) -> RegionDecomposition:
    if decomposition is not None:
        return decomposition
    from .attribution import regions_for

    return regions_for(net)


def _relu_metric(metric, net, alpha, beta, m_list, decomposition) -> ReluMetric:
    decomp = _decomposition(net, decomposition)
    total, skipped = 0.0, 0
    for r in decomp:
        try:
            total += metric(r.a, alpha, beta, projected_attribution(r.a, m_list))
        except UndefinedMetricError:
            skipped += 1
    return ReluMetric(total, skipped, len(decomp))


def relu_recall(net: ReluNetwork, alpha: float, beta: float, m_list,
                decomposition: RegionDecomposition | None = None) -> ReluMetric:
    return _relu_metric(recall, net, alpha, beta, m_list, decomposition)


def relu_precision(net: ReluNetwork, alpha: float, beta: float, m_list,
                   decomposition: RegionDecomposition | None = None) -> ReluMetric:
    return _relu_metric(precision, net, alpha, beta, m_list, decomposition)


def relu_solution_set_contains(net: ReluNetwork, alpha: float, beta: float, j: int, m, kind: str = "recall",
                               decomposition: RegionDecomposition | None = None) -> bool:
    """Membership in the intersection over regions of the per-region solution sets.

    An empty intersection is a valid outcome: the answer is then ``False`` for every ``m``.
    """
    if kind not in ("recall", "precision"):
        raise ValidationError(f"kind must be 'recall' or 'precision', got {kind!r}")
    check = recall_solution_set_contains if kind == "recall" else precision_solution_set_contains
    return all(check(r.a, alpha, beta, j, m) for r in _decomposition(net, decomposition))
