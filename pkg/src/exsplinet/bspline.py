"""Univariate B-spline machinery on open-uniform knot vectors over [0, 1].

Provides basis evaluation along three routes (a slow literal-recursion oracle,
a sparse local evaluation, and dense matrices for batches), de Boor spline
evaluation, derivative weight transforms, Greville abscissae, and Schoenberg
quasi-interpolation weights.

Conventions
-----------
* Basis indices are 1-based in the public API (``n = 1, ..., N``); internal
  arrays are 0-based.
* Evaluation follows the half-open interval convention ``[xi_m, xi_{m+1})``;
  the single exception is ``x = 1`` where all functions are left continuous.
* All floats are 64-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegreeTooLowError,
    InvalidHyperparameterError,
    OutOfDomainError,
)

__all__ = [
    "KnotVector",
    "SparseBasis",
    "Spline1D",
    "open_uniform_knots",
    "basis_oracle",
    "support_window",
    "basis_sparse",
    "basis_matrix",
    "de_boor_eval",
    "greville",
    "derivative_spline",
    "derivative_weights",
    "derivative_weights_adjoint",
    "schoenberg_weights",
]


@dataclass(frozen=True)
class KnotVector:
    """Open-uniform knot sequence for ``N`` B-splines of degree ``p`` on [0, 1].

    Attributes
    ----------
    knots : np.ndarray
        Nondecreasing array of length ``N + p + 1``; the first and last
        ``p + 1`` entries are 0 and 1, interior knots are equally spaced.
    degree : int
        Polynomial degree ``p >= 0``.
    basis_count : int
        Number of B-splines ``N > p``.
    """

    knots: np.ndarray
    degree: int
    basis_count: int

    def __post_init__(self):
        if len(self.knots) != self.basis_count + self.degree + 1:
            raise InvalidHyperparameterError(
                f"knot vector length {len(self.knots)} != N + p + 1 "
                f"= {self.basis_count + self.degree + 1}"
            )
        self.knots.setflags(write=False)


@dataclass(frozen=True)
class SparseBasis:
    """The at most ``p + 1`` potentially nonzero basis values at one point.

    ``offset`` is the 1-based index of the first stored basis function;
    ``values`` has length exactly ``p + 1``, is nonnegative, and sums to 1.
    """

    offset: int
    values: np.ndarray


@dataclass(frozen=True)
class Spline1D:
    """A spline ``s(x) = sum_n weights[n] * B_{N,p,n}(x)`` on [0, 1]."""

    weights: np.ndarray
    basis_count: int
    degree: int

    def __post_init__(self):
        if len(self.weights) != self.basis_count:
            raise InvalidHyperparameterError(
                f"{len(self.weights)} weights for N = {self.basis_count}"
            )


def _check_np(N: int, p: int, min_degree: int = 0) -> None:
    if p < min_degree or N <= p:
        raise InvalidHyperparameterError(f"need N > p >= {min_degree}, got N={N}, p={p}")


def _check_domain(x) -> None:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise OutOfDomainError(f"evaluation point outside [0, 1]: {x}")


def open_uniform_knots(N: int, p: int) -> KnotVector:
    """Build the open-uniform knot vector for ``N`` basis functions of degree ``p``.

    The first and last knot have multiplicity ``p + 1`` and the interior knots
    are uniform with step ``1 / (N - p)``.
    """
    _check_np(N, p)
    interior = np.arange(N - p + 1, dtype=float) / (N - p)
    knots = np.concatenate([np.zeros(p), interior, np.ones(p)])
    return KnotVector(knots=knots, degree=p, basis_count=N)


def basis_oracle(kv: KnotVector, n: int, x: float) -> float:
    """Evaluate the ``n``-th B-spline (1-based) by the literal two-term recursion.

    Intentionally slow; serves as the correctness oracle for every faster
    evaluation path. Zero-denominator fractions are treated as zero and the
    value at ``x = 1`` is the left limit.
    """
    if not 1 <= n <= kv.basis_count:
        raise IndexError(f"basis index {n} outside 1..{kv.basis_count}")
    _check_domain(x)
    return _oracle_rec(kv.knots, kv.degree, n - 1, float(x))


def _oracle_rec(t: np.ndarray, p: int, n: int, x: float) -> float:
    # n is 0-based here
    if t[n + p + 1] == t[n]:
        return 0.0
    if p == 0:
        if x < 1.0:
            return 1.0 if t[n] <= x < t[n + 1] else 0.0
        # left limit at 1: the indicator of the last nonempty interval
        return 1.0 if t[n] < 1.0 and t[n + 1] == 1.0 else 0.0
    left = 0.0
    if t[n + p] != t[n]:
        left = (x - t[n]) / (t[n + p] - t[n]) * _oracle_rec(t, p - 1, n, x)
    right = 0.0
    if t[n + p + 1] != t[n + 1]:
        right = (t[n + p + 1] - x) / (t[n + p + 1] - t[n + 1]) * _oracle_rec(
            t, p - 1, n + 1, x
        )
    return left + right


def support_window(N: int, p: int, x: float) -> tuple[int, int]:
    """1-based index window guaranteed to contain all nonzero basis values at ``x``.

    Uses the window ``floor(z) + 1 - p .. ceil(z)`` with ``z = (1 - x) p + x N``,
    clamped to ``[1, N]``. The window may include zero entries near the
    endpoints; it never misses a nonzero one.
    """
    _check_np(N, p, min_degree=1)
    _check_domain(x)
    z = (1.0 - x) * p + x * N
    lo = max(1, math.floor(z) + 1 - p)
    hi = min(N, math.ceil(z))
    return lo, hi


def _find_span(knots: np.ndarray, N: int, p: int, x: float) -> int:
    """0-based span index ``j`` with ``knots[j] <= x < knots[j+1]``, ``p <= j <= N-1``."""
    if x >= 1.0:
        return N - 1
    j = int(np.searchsorted(knots, x, side="right")) - 1
    return min(max(j, p), N - 1)


def _span_values(knots: np.ndarray, p: int, j: int, x: float) -> np.ndarray:
    """The p+1 nonzero basis values ``B_{j-p}, ..., B_j`` (0-based) at ``x``."""
    vals = np.empty(p + 1)
    vals[0] = 1.0
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    for r in range(1, p + 1):
        left[r] = x - knots[j + 1 - r]
        right[r] = knots[j + r] - x
        saved = 0.0
        for i in range(r):
            tmp = vals[i] / (right[i + 1] + left[r - i])
            vals[i] = saved + right[i + 1] * tmp
            saved = left[r - i] * tmp
        vals[r] = saved
    return vals


def basis_sparse(N: int, p: int, x: float) -> SparseBasis:
    """Sparse evaluation of the B-spline vector at ``x``.

    Returns the ``p + 1`` local values together with the 1-based offset of the
    first one. Agrees with :func:`basis_oracle` on the window; everything
    outside is exactly zero.
    """
    _check_np(N, p)
    _check_domain(x)
    kv = open_uniform_knots(N, p)
    j = _find_span(kv.knots, N, p, float(x))
    vals = _span_values(kv.knots, p, j, float(x))
    np.maximum(vals, 0.0, out=vals)  # clamp -0.0 / tiny negative roundoff
    return SparseBasis(offset=j - p + 1, values=vals)


def basis_matrix(N: int, p: int, x: np.ndarray) -> np.ndarray:
    """Dense basis matrix, shape ``(len(x), N)``, vectorized over points.

    Batch workhorse used by the model and gradient code; loops only over the
    degree, not over the points.
    """
    _check_np(N, p)
    x = np.asarray(x, dtype=float).ravel()
    _check_domain(x)
    kv = open_uniform_knots(N, p)
    t = kv.knots
    K = len(x)
    j = np.searchsorted(t, x, side="right") - 1
    np.clip(j, p, N - 1, out=j)
    vals = np.zeros((K, p + 1))
    vals[:, 0] = 1.0
    left = np.empty((K, p + 1))
    right = np.empty((K, p + 1))
    for r in range(1, p + 1):
        left[:, r] = x - t[j + 1 - r]
        right[:, r] = t[j + r] - x
        saved = np.zeros(K)
        for i in range(r):
            tmp = vals[:, i] / (right[:, i + 1] + left[:, r - i])
            vals[:, i] = saved + right[:, i + 1] * tmp
            saved = left[:, r - i] * tmp
        vals[:, r] = saved
    np.maximum(vals, 0.0, out=vals)
    out = np.zeros((K, N))
    cols = (j - p)[:, None] + np.arange(p + 1)[None, :]
    np.put_along_axis(out, cols, vals, axis=1)
    return out


def de_boor_eval(s: Spline1D, x: float) -> float:
    """Evaluate a spline by the de Boor triangular scheme, O(p^2) per point."""
    _check_domain(x)
    N, p = s.basis_count, s.degree
    kv = open_uniform_knots(N, p)
    t = kv.knots
    x = float(x)
    j = _find_span(t, N, p, x)
    if p == 0:
        return float(s.weights[j])
    # d[i] holds the coefficient of B_{j-p+i} at stage q
    d = np.array(s.weights[j - p : j + 1], dtype=float)
    for q in range(1, p + 1):
        for i in range(p, q - 1, -1):
            n = j - p + i
            denom = t[n + p - q + 1] - t[n]
            alpha = (x - t[n]) / denom
            d[i] = (1.0 - alpha) * d[i - 1] + alpha * d[i]
    return float(d[p])


def greville(N: int, p: int) -> np.ndarray:
    """Greville abscissae ``(xi_{n+1} + ... + xi_{n+p}) / p`` for ``n = 1..N``.

    These are the weights for which the spline reproduces the identity.
    """
    _check_np(N, p, min_degree=1)
    t = open_uniform_knots(N, p).knots
    # 0-based n: mean of t[n+1 : n+p+1]
    csum = np.concatenate([[0.0], np.cumsum(t)])
    n = np.arange(N)
    return (csum[n + p + 1] - csum[n + 1]) / p


def _derivative_denominators(N: int, p: int) -> np.ndarray:
    """``xi_{n+p+1} - xi_{n+1}`` (0-based ``n = 0..N-2``) for the degree drop."""
    t = open_uniform_knots(N, p).knots
    n = np.arange(N - 1)
    return t[n + p + 1] - t[n + 1]


def derivative_weights(w: np.ndarray, N: int, p: int) -> np.ndarray:
    """Weights of the (right-hand) derivative spline, on knots for ``(N-1, p-1)``.

    ``w`` may carry leading batch axes; the transform acts on the last axis.
    """
    if p < 1:
        raise DegreeTooLowError("cannot differentiate a degree-0 spline")
    _check_np(N, p)
    den = _derivative_denominators(N, p)
    w = np.asarray(w, dtype=float)
    return p * (w[..., 1:] - w[..., :-1]) / den


def derivative_weights_adjoint(g: np.ndarray, N: int, p: int) -> np.ndarray:
    """Adjoint of :func:`derivative_weights`: maps length ``N-1`` back to ``N``.

    Needed when accumulating gradients through a derivative transform, and to
    express the vector of per-basis derivative values ``B'_n(x)`` in terms of
    the lower-degree basis.
    """
    if p < 1:
        raise DegreeTooLowError("cannot differentiate a degree-0 spline")
    _check_np(N, p)
    den = _derivative_denominators(N, p)
    g = np.asarray(g, dtype=float)
    h = p * g / den
    out = np.zeros(g.shape[:-1] + (N,))
    out[..., :-1] -= h
    out[..., 1:] += h
    return out


def derivative_spline(s: Spline1D) -> Spline1D:
    """Derivative of ``s`` as a spline of degree ``p - 1`` with ``N - 1`` weights.

    For ``p >= 2`` this is the classical derivative on all of [0, 1]; for
    ``p = 1`` it is the right-hand derivative, valid on [0, 1).
    """
    if s.degree < 1:
        raise DegreeTooLowError("cannot differentiate a degree-0 spline")
    wd = derivative_weights(s.weights, s.basis_count, s.degree)
    return Spline1D(weights=wd, basis_count=s.basis_count - 1, degree=s.degree - 1)


def schoenberg_weights(
    f: Callable[[float], float], N: int, p: int
) -> np.ndarray:
    """Schoenberg quasi-interpolation weights: ``f`` sampled at the Greville points.

    The resulting spline stays inside the convex hull of the sampled values
    and approximates smooth ``f`` at rate ``O(h^2)``.
    """
    xs = greville(N, p)
    return np.array([float(f(x)) for x in xs])
