"""Tensor-product B-spline vectors, sparse dot products, and axis derivatives.

Weight tensors are stored flat in lexicographic order with axis 1 slowest,
i.e. the C-order flattening of an array of shape ``(M_1, ..., M_L)``. The
sparse tensor basis keeps the per-axis factors unexpanded; the full Kronecker
product is only formed implicitly inside dot products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bspline
from .errors import DegreeTooLowError, ShapeMismatchError

__all__ = [
    "TensorBasisSparse",
    "tensor_basis",
    "tensor_dot",
    "tensor_dense",
    "axis_derivative_weights",
    "axis_derivative_adjoint",
]


@dataclass(frozen=True)
class TensorBasisSparse:
    """Per-axis sparse bases whose outer product is the tensor-product basis."""

    factors: tuple[bspline.SparseBasis, ...]

    @property
    def levels(self) -> int:
        return len(self.factors)


def tensor_basis(M: list[int], q: list[int], y: list[float]) -> TensorBasisSparse:
    """Sparse tensor-product basis at the point ``y`` in ``[0, 1]^L``."""
    if not len(M) == len(q) == len(y):
        raise ShapeMismatchError("M, q, y must have equal length")
    factors = tuple(
        bspline.basis_sparse(M[l], q[l], y[l]) for l in range(len(M))
    )
    return TensorBasisSparse(factors=factors)


def tensor_dense(tb: TensorBasisSparse, M: list[int]) -> np.ndarray:
    """Expand to the dense flat Kronecker vector of length ``prod(M)``.

    Debug/verification helper; production paths stay sparse.
    """
    full = np.array([1.0])
    for l, f in enumerate(tb.factors):
        dense = np.zeros(M[l])
        dense[f.offset - 1 : f.offset - 1 + len(f.values)] = f.values
        full = np.kron(full, dense)
    return full


def tensor_dot(w: np.ndarray, tb: TensorBasisSparse) -> float:
    """Dot product of a weight tensor with the sparse tensor basis.

    ``w`` is given either flat (length ``prod(M)``) or already shaped
    ``(M_1, ..., M_L)``; cost is ``O(prod(q_l + 1))`` plus indexing.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim == 1 and tb.levels > 1:
        raise ShapeMismatchError(
            "pass the weight tensor shaped (M_1, ..., M_L); flat vectors are ambiguous"
        )
    if w.ndim != tb.levels:
        raise ShapeMismatchError(f"{w.ndim}-axis tensor for {tb.levels} levels")
    for ax, f in enumerate(tb.factors):
        if f.offset - 1 + len(f.values) > w.shape[ax]:
            raise ShapeMismatchError(
                f"axis {ax}: basis window exceeds tensor extent {w.shape[ax]}"
            )
    sub = w[
        tuple(
            slice(f.offset - 1, f.offset - 1 + len(f.values)) for f in tb.factors
        )
    ]
    for f in tb.factors:
        sub = np.tensordot(f.values, sub, axes=([0], [0]))
    return float(sub)


def axis_derivative_weights(
    w: np.ndarray, M: list[int], q: list[int], axis: int
) -> tuple[np.ndarray, list[int], list[int]]:
    """Weight transform realizing the partial derivative along one tensor axis.

    Returns the transformed tensor (extent ``M[axis] - 1`` along ``axis``)
    together with the lowered shape and degree lists, such that a tensor dot
    with the degree-lowered basis equals the partial derivative of the
    original tensor spline. ``w`` may carry leading batch axes before the
    ``len(M)`` tensor axes.
    """
    if q[axis] < 1:
        raise DegreeTooLowError(f"axis {axis} has degree {q[axis]}")
    w = np.asarray(w, dtype=float)
    nd_batch = w.ndim - len(M)
    ax = nd_batch + axis
    moved = np.moveaxis(w, ax, -1)
    out = bspline.derivative_weights(moved, M[axis], q[axis])
    out = np.moveaxis(out, -1, ax)
    M2 = list(M)
    q2 = list(q)
    M2[axis] -= 1
    q2[axis] -= 1
    return out, M2, q2


def axis_derivative_adjoint(
    g: np.ndarray, M: list[int], q: list[int], axis: int
) -> np.ndarray:
    """Adjoint of :func:`axis_derivative_weights` along ``axis``.

    ``M`` and ``q`` refer to the original (pre-derivative) tensor; ``g`` has
    extent ``M[axis] - 1`` along that axis and is mapped back to ``M[axis]``.
    """
    if q[axis] < 1:
        raise DegreeTooLowError(f"axis {axis} has degree {q[axis]}")
    g = np.asarray(g, dtype=float)
    nd_batch = g.ndim - len(M)
    ax = nd_batch + axis
    moved = np.moveaxis(g, ax, -1)
    out = bspline.derivative_weights_adjoint(moved, M[axis], q[axis])
    return np.moveaxis(out, -1, ax)
