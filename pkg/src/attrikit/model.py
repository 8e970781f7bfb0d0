"""Evaluable models on the unit box: ReLU networks, analytic functions, and
the piecewise-constant grid approximation used to build attributions up from
indicator functions.

All models are vectorized: ``f(Y)`` takes an ``(n, d)`` array and returns
``(n,)`` values.  ``f.value(x)`` evaluates a single point.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, ValidationError
from .expr import compile_expression

MODEL_FORMAT = "attrikit-relu/1"
FD_STEP = 1e-5
MAX_GRID_CELLS = 2**26
_CHUNK = 1 << 18

ActivationPattern = tuple  # tuple of 1-D bool arrays, one per hidden layer


def _as_points(Y, d: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.ndim != 2 or Y.shape[1] != d:
        raise ValidationError(f"expected points of dimension {d}, got shape {Y.shape}")
    return Y


class Function:
    """Base class for deterministic models ``[0,1]^d -> R``.

    Subclasses implement ``_evaluate`` on an ``(n, d)`` array. ``gradient``
    falls back to central differences clamped to the unit box.
    """

    input_dim: int

    def __call__(self, Y) -> np.ndarray:
        return self._evaluate(_as_points(Y, self.input_dim))

    def _evaluate(self, Y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, x) -> float:
        return float(self(np.asarray(x, dtype=float)[None, :])[0])

    def gradient(self, x) -> np.ndarray:
        return finite_difference_gradient(self, x)

    @property
    def fingerprint(self) -> str:
        return "opaque:" + type(self).__name__

    def __add__(self, other: "Function") -> "Function":
        return Combination((self, other), (1.0, 1.0))

    def __mul__(self, scalar: float) -> "Function":
        return Combination((self,), (float(scalar),))

    __rmul__ = __mul__


def finite_difference_gradient(f: Function, x, h: float = FD_STEP) -> np.ndarray:
    """Central differences, each step clamped so probes stay inside [0,1]^d."""
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    hi = np.minimum(x + h, 1.0)
    lo = np.maximum(x - h, 0.0)
    probes = np.repeat(x[None, :], 2 * d, axis=0)
    idx = np.arange(d)
    probes[idx, idx] = hi
    probes[d + idx, idx] = lo
    vals = f(probes)
    return (vals[:d] - vals[d:]) / (hi - lo)


class FunctionModel(Function):
    """Wraps a plain vectorized callable."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], input_dim: int,
                 gradient: Callable[[np.ndarray], np.ndarray] | None = None, name: str = "function"):
        self.fn = fn
        self.input_dim = int(input_dim)
        self._grad = gradient
        self.name = name

    def _evaluate(self, Y):
        return np.asarray(self.fn(Y), dtype=float).reshape(Y.shape[0])

    def gradient(self, x):
        if self._grad is not None:
            return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)
        return finite_difference_gradient(self, x)

    @property
    def fingerprint(self):
        return "function:" + self.name


class Expression(Function):
    """A function given by the tiny expression language of :mod:`attrikit.expr`."""

    def __init__(self, text: str, input_dim: int | None = None):
        self.text = text
        self._node, used = compile_expression(text)
        needed = max(used) + 1 if used else 1
        if input_dim is None:
            input_dim = needed
        if needed > input_dim:
            raise ValidationError(f"expression uses x{needed} but input_dim is {input_dim}")
        self.input_dim = int(input_dim)

    def _evaluate(self, Y):
        return np.asarray(self._node(Y), dtype=float)

    @property
    def fingerprint(self):
        return "expr:" + hashlib.sha256(self.text.encode()).hexdigest()[:16]

    def __repr__(self):
        return f"Expression({self.text!r}, input_dim={self.input_dim})"


class LinearModel(Function):
    """``f_w(x) = w.x + b``."""

    def __init__(self, weights, bias: float = 0.0):
        self.w = np.asarray(weights, dtype=float)
        self.b = float(bias)
        self.input_dim = self.w.shape[0]

    def _evaluate(self, Y):
        return Y @ self.w + self.b

    def gradient(self, x):
        return self.w.copy()

    @property
    def fingerprint(self):
        return "linear:" + hashlib.sha256(self.w.tobytes() + np.float64(self.b).tobytes()).hexdigest()[:16]


class Combination(Function):
    """Linear combination ``sum_k c_k f_k``; gradients combine term-wise."""

    def __init__(self, terms: Sequence[Function], coefs: Sequence[float]):
        dims = {t.input_dim for t in terms}
        if len(dims) != 1:
            raise ValidationError("cannot combine functions of different input dimension")
        self.terms = tuple(terms)
        self.coefs = tuple(float(c) for c in coefs)
        self.input_dim = dims.pop()

    def _evaluate(self, Y):
        out = np.zeros(Y.shape[0])
        for c, t in zip(self.coefs, self.terms):
            out += c * t(Y)
        return out

    def gradient(self, x):
        return sum(c * t.gradient(x) for c, t in zip(self.coefs, self.terms))

    @property
    def fingerprint(self):
        inner = ",".join(f"{c!r}*{t.fingerprint}" for c, t in zip(self.coefs, self.terms))
        return "combo:" + hashlib.sha256(inner.encode()).hexdigest()[:16]


def as_function(f, input_dim: int | None = None) -> Function:
    if isinstance(f, Function):
        return f
    if isinstance(f, str):
        return Expression(f, input_dim)
    if callable(f):
        if input_dim is None:
            raise ValidationError("input_dim is required to wrap a bare callable")
        return FunctionModel(f, input_dim, name=getattr(f, "__name__", "function"))
    raise ValidationError(f"cannot interpret {type(f).__name__} as a model")


# --------------------------------------------------------------------------
# ReLU networks


@dataclass(frozen=True, eq=False)
class ReluNetwork(Function):
    """Fully connected ReLU network with scalar output.

    ``layers[k] = (W, b)``; all but the last layer are followed by ReLU.
    """

    layers: tuple
    input_dim: int = field(init=False)

    def __post_init__(self):
        layers = []
        if len(self.layers) == 0:
            raise ValidationError("network needs at least one layer")
        prev = None
        for k, (W, b) in enumerate(self.layers):
            W = np.array(W, dtype=float, ndmin=2)
            b = np.array(b, dtype=float, ndmin=1)
            if W.ndim != 2 or b.ndim != 1:
                raise ValidationError(f"layer {k}: weights must be 2-D and bias 1-D")
            if W.shape[0] != b.shape[0]:
                raise ValidationError(f"layer {k}: weights have {W.shape[0]} rows but bias has {b.shape[0]} entries")
            if prev is not None and W.shape[1] != prev:
                raise ValidationError(f"layer {k}: expected {prev} columns, got {W.shape[1]} (dimension-chain mismatch)")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {k}: non-finite entry")
            W.setflags(write=False)
            b.setflags(write=False)
            layers.append((W, b))
            prev = W.shape[0]
        if prev != 1:
            raise ValidationError(f"layer {len(layers) - 1}: output width must be 1, got {prev}")
        object.__setattr__(self, "layers", tuple(layers))
        object.__setattr__(self, "input_dim", layers[0][0].shape[1])

    @property
    def hidden(self) -> tuple:
        return self.layers[:-1]

    @property
    def hidden_widths(self) -> list[int]:
        return [W.shape[0] for W, _ in self.hidden]

    def _evaluate(self, Y):
        out = np.empty(Y.shape[0])
        for s in range(0, Y.shape[0], _CHUNK):
            h = Y[s:s + _CHUNK].T
            for W, b in self.hidden:
                h = np.maximum(W @ h + b[:, None], 0.0)
            W, b = self.layers[-1]
            out[s:s + _CHUNK] = (W @ h + b[:, None])[0]
        return out

    def gradient(self, x):
        a, _ = affine_coeffs(self, activation_pattern(self, x))
        return a

    @property
    def fingerprint(self):
        return "relu:" + hashlib.sha256(dumps_network(self).encode()).hexdigest()[:16]

    @classmethod
    def random(cls, input_dim: int, widths: Sequence[int], rng=None, scale: float = 1.0) -> "ReluNetwork":
        """Gaussian weights and biases; biases centered so hyperplanes cross the box."""
        rng = np.random.default_rng(rng)
        layers = []
        prev = input_dim
        for k, w in enumerate(list(widths) + [1]):
            W = rng.normal(scale=scale / math.sqrt(prev), size=(w, prev))
            if k == 0:
                centers = rng.uniform(0.0, 1.0, size=(w, prev))
                b = -np.einsum("ij,ij->i", W, centers)
            else:
                b = rng.normal(scale=0.1 * scale, size=w)
            layers.append((W, b))
            prev = w
        return cls(tuple(layers))


def forward(net: ReluNetwork, x) -> tuple[float, list[np.ndarray]]:
    """Value and the pre-activations ``z^(l)`` of every layer (hidden and output)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise ValidationError(f"expected a point of dimension {net.input_dim}, got shape {x.shape}")
    pre = []
    h = x
    for W, b in net.hidden:
        z = W @ h + b
        pre.append(z)
        h = np.maximum(z, 0.0)
    W, b = net.layers[-1]
    z = W @ h + b
    pre.append(z)
    return float(z[0]), pre


def activation_pattern(net: ReluNetwork, x) -> ActivationPattern:
    """Strict-positivity mask of each hidden layer; ``z == 0`` counts as inactive."""
    _, pre = forward(net, x)
    return tuple(z > 0 for z in pre[:-1])


def affine_coeffs(net: ReluNetwork, pattern: ActivationPattern) -> tuple[np.ndarray, float]:
    """Coefficients ``(a, b)`` with ``f(x) = a.x + b`` on the region of ``pattern``.

    Folds the masked layers left to right, which expands to the product form
    ``a = (prod_l W_l^T diag(mask_l)) W_out^T``.
    """
    if len(pattern) != len(net.hidden):
        raise ValidationError(f"pattern has {len(pattern)} layers, network has {len(net.hidden)}")
    d = net.input_dim
    M = np.eye(d)
    c = np.zeros(d)
    for k, ((W, b), mask) in enumerate(zip(net.hidden, pattern)):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (W.shape[0],):
            raise ValidationError(f"pattern layer {k} has length {mask.shape}, expected {W.shape[0]}")
        M = (W @ M) * mask[:, None]
        c = (W @ c + b) * mask
    W, b = net.layers[-1]
    return (W @ M)[0], float((W @ c + b)[0])


def pattern_bits(pattern: ActivationPattern) -> str:
    return "|".join("".join("1" if v else "0" for v in layer) for layer in pattern)


# --------------------------------------------------------------------------
# serialization


def network_to_dict(net: ReluNetwork) -> dict:
    return {
        "format": MODEL_FORMAT,
        "input_dim": net.input_dim,
        "layers": [{"weights": W.tolist(), "bias": b.tolist()} for W, b in net.layers],
    }


def dumps_network(net: ReluNetwork) -> str:
    return json.dumps(network_to_dict(net))


def load_network(content: bytes | str) -> ReluNetwork:
    """Parse and validate an ``attrikit-relu/1`` document."""
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    try:
        doc = json.loads(content)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ValidationError(f"model file format must be {MODEL_FORMAT!r}")
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise ValidationError("model file needs a non-empty 'layers' list")
    parsed = []
    for k, layer in enumerate(layers):
        if not isinstance(layer, dict) or "weights" not in layer or "bias" not in layer:
            raise ValidationError(f"layer {k}: needs 'weights' and 'bias'")
        try:
            W = np.array(layer["weights"], dtype=float)
            b = np.array(layer["bias"], dtype=float)
        except (TypeError, ValueError):
            raise ValidationError(f"layer {k}: weights/bias must be numeric arrays") from None
        if W.ndim != 2:
            raise ValidationError(f"layer {k}: weights must be a 2-D row-major array")
        parsed.append((W, b))
    net = ReluNetwork(tuple(parsed))
    if doc.get("input_dim") != net.input_dim:
        raise ValidationError(f"layer 0: input_dim {doc.get('input_dim')} does not match {net.input_dim} weight columns")
    return net


# --------------------------------------------------------------------------
# piecewise-constant approximation


def cell_index(Y: np.ndarray, p: int) -> np.ndarray:
    """Index of the right-closed cell ``(i/p, (i+1)/p]`` holding each coordinate (0 maps to cell 0)."""
    idx = np.ceil(np.asarray(Y) * p).astype(np.int64) - 1
    return np.clip(idx, 0, p - 1)


class PiecewiseConstantApprox(Function):
    """``f_p = sum_cells f(lower corner) 1{cell}`` on a uniform ``p^d`` grid."""

    def __init__(self, p: int, grid_values: np.ndarray, input_dim: int):
        grid_values = np.asarray(grid_values, dtype=float)
        if grid_values.size != p ** input_dim:
            raise ValidationError(f"expected {p ** input_dim} grid values, got {grid_values.size}")
        self.p = int(p)
        self.input_dim = int(input_dim)
        self.grid_values = grid_values.reshape((p,) * input_dim)

    def _evaluate(self, Y):
        idx = cell_index(Y, self.p)
        return self.grid_values[tuple(idx.T)]

    def gradient(self, x):
        return np.zeros(self.input_dim)


def grid_points(p: int, d: int) -> np.ndarray:
    """Lower corners ``(i_1/p, ..., i_d/p)`` in C order."""
    axes = np.arange(p) / p
    return np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)


def approximate(f: Function, p: int, max_cells: int = MAX_GRID_CELLS) -> PiecewiseConstantApprox:
    if p < 1:
        raise ValidationError("resolution p must be >= 1")
    d = f.input_dim
    if p ** d > max_cells:
        raise CapacityError(f"approximation needs {p}^{d} cells, cap is {max_cells}")
    values = f(grid_points(p, d))
    return PiecewiseConstantApprox(p, values, d)
