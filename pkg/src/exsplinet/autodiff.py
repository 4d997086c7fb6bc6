"""Closed-form derivatives of the model: with respect to inputs (first and
second order) and with respect to all trainable parameters.

Everything is assembled from two weight-transform primitives, applied once per
derivative order: the univariate degree-lowering transform for the inner
splines and its tensor-axis analogue for the outer splines. No numeric
differentiation happens anywhere in this module; the finite-difference
comparisons live in the test suite.

The per-derivative bookkeeping uses multi-orders ``alpha`` over the L outer
axes: ``phi_alpha`` is the outer function differentiated ``alpha[l]`` times
along axis ``l``, realized by transformed weight tensors evaluated on
degree-lowered bases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import bspline, tensor
from .errors import DegreeTooLowError, ShapeMismatchError
from .model import ExSpliNetModel, ModelConfig, inner_basis, outer_basis

__all__ = [
    "GradientBundle",
    "grad_input",
    "grad_input_batch",
    "second_input_derivative",
    "laplacian_batch",
    "grad_params",
    "risk_grad",
    "forward_and_risk_grad",
    "laplacian_param_grad",
    "value_param_grad",
]


@dataclass
class GradientBundle:
    """Gradient of a scalar with respect to all raw trainable parameters.

    ``d_inner_raw[l]`` matches ``u[l]`` (shape ``(T, D, N_l)``), ``d_outer``
    matches the outer tensor ``(O, T, M_1, ..., M_L)``. ``flat`` follows the
    model's canonical parameter order.
    """

    d_inner_raw: list[np.ndarray]
    d_outer: np.ndarray

    def flat(self) -> np.ndarray:
        parts = [g.ravel() for g in self.d_inner_raw]
        parts.append(self.d_outer.ravel())
        return np.concatenate(parts)

    def add(self, other: "GradientBundle", scale: float = 1.0) -> None:
        for a, b in zip(self.d_inner_raw, other.d_inner_raw):
            a += scale * b
        self.d_outer += scale * other.d_outer


def _zero_bundle(cfg: ModelConfig) -> GradientBundle:
    return GradientBundle(
        d_inner_raw=[np.zeros((cfg.T, cfg.D, cfg.N[l])) for l in range(cfg.L)],
        d_outer=np.zeros((cfg.O, cfg.T) + cfg.M),
    )


class _Pack:
    """Shared evaluation tables for one batch of points.

    ``inner_order`` is the highest inner-spline derivative needed (0..2);
    ``outer_order`` the highest outer multi-order total (0..3).
    """

    def __init__(self, model: ExSpliNetModel, X: np.ndarray, inner_order: int, outer_order: int):
        cfg = model.config
        X = model._check_inputs(X)
        self.model = model
        self.cfg = cfg
        self.X = X
        K = X.shape[0]

        if inner_order > 0 and min(cfg.p) < inner_order:
            raise DegreeTooLowError(
                f"inner degrees {cfg.p} cannot support order-{inner_order} derivatives"
            )
        if outer_order > 0 and min(cfg.q) < outer_order:
            raise DegreeTooLowError(
                f"outer degrees {cfg.q} cannot support order-{outer_order} derivatives"
            )

        # inner bases per level and reduction: (K, D, N_l - r)
        self.B = [
            [inner_basis(cfg, X, l, reduction=r) for r in range(inner_order + 1)]
            for l in range(cfg.L)
        ]
        # constrained inner weights and their derivative transforms
        self.v = [model.inner.v_level(l) for l in range(cfg.L)]
        self.v_deriv = []
        for l in range(cfg.L):
            stack = [self.v[l]]
            for r in range(inner_order):
                stack.append(
                    bspline.derivative_weights(stack[-1], cfg.N[l] - r, cfg.p[l] - r)
                )
            self.v_deriv.append(stack)
        # psi derivatives: psi[r][l] has shape (K, T, D)
        self.psi = [
            [
                np.einsum("kdn,tdn->ktd", self.B[l][r], self.v_deriv[l][r])
                for l in range(cfg.L)
            ]
            for r in range(inner_order + 1)
        ]
        # features (K, T, L)
        self.Y = np.stack([self.psi[0][l].sum(axis=2) for l in range(cfg.L)], axis=2)
        np.clip(self.Y, 0.0, 1.0, out=self.Y)
        # outer bases per level and reduction: (K, T, M_l - r)
        self.OB = [
            [outer_basis(cfg, self.Y[:, :, l], l, r) for r in range(outer_order + 1)]
            for l in range(cfg.L)
        ]
        # transformed outer weight tensors per multi-order alpha
        self.W = {}
        base = (0,) * cfg.L
        self.W[base] = model.outer.w
        for total in range(1, outer_order + 1):
            for alpha in _alphas(cfg.L, total):
                l = next(i for i in range(cfg.L) if alpha[i] > 0)
                prev = list(alpha)
                prev[l] -= 1
                prev = tuple(prev)
                Mr = [cfg.M[i] - prev[i] for i in range(cfg.L)]
                qr = [cfg.q[i] - prev[i] for i in range(cfg.L)]
                w2, _, _ = tensor.axis_derivative_weights(self.W[prev], Mr, qr, l)
                self.W[alpha] = w2
        # per-basis derivative values B'_n, B''_n expressed on the original index set
        self.Bp = [self.B[l][0] for l in range(cfg.L)]
        self.Bp1 = []
        self.Bp2 = []
        if inner_order >= 1:
            for l in range(cfg.L):
                self.Bp1.append(
                    bspline.derivative_weights_adjoint(self.B[l][1], cfg.N[l], cfg.p[l])
                )
        if inner_order >= 2:
            for l in range(cfg.L):
                inner1 = bspline.derivative_weights_adjoint(
                    self.B[l][2], cfg.N[l] - 1, cfg.p[l] - 1
                )
                self.Bp2.append(
                    bspline.derivative_weights_adjoint(inner1, cfg.N[l], cfg.p[l])
                )
        self._phi_cache = {}

    def phi(self, alpha: tuple[int, ...]) -> np.ndarray:
        """Outer derivative values per (point, output, tree): shape (K, O, T)."""
        if alpha not in self._phi_cache:
            bases = [self.OB[l][alpha[l]] for l in range(self.cfg.L)]
            res = np.einsum("ktm,otm...->kot...", bases[0], self.W[alpha])
            for Bx in bases[1:]:
                res = np.einsum("ktm,kotm...->kot...", Bx, res)
            self._phi_cache[alpha] = res
        return self._phi_cache[alpha]

    def outputs(self) -> np.ndarray:
        """Model outputs, shape (K, O)."""
        return self.phi((0,) * self.cfg.L).sum(axis=2)

    def scatter_outer(self, coeff: np.ndarray, alpha: tuple[int, ...]) -> np.ndarray:
        """Accumulate ``sum_k coeff[k,o,t] * (tensor basis at order alpha)`` and
        pull it back through the transform adjoints to the original w shape."""
        cfg = self.cfg
        P = self.OB[0][alpha[0]]
        K = P.shape[0]
        P = P.reshape(K, cfg.T, -1)
        for l in range(1, cfg.L):
            Bx = self.OB[l][alpha[l]]
            P = (P[:, :, :, None] * Bx[:, :, None, :]).reshape(K, cfg.T, -1)
        g = np.einsum("kot,ktm->otm", coeff, P)
        shape = tuple(cfg.M[l] - alpha[l] for l in range(cfg.L))
        g = g.reshape((cfg.O, cfg.T) + shape)
        # adjoint of the forward transform chain, axis by axis
        for l in range(cfg.L):
            for r in range(alpha[l], 0, -1):
                Mr = [cfg.M[i] - (alpha[i] if i != l else r - 1) for i in range(cfg.L)]
                qr = [cfg.q[i] - (alpha[i] if i != l else r - 1) for i in range(cfg.L)]
                g = tensor.axis_derivative_adjoint(g, Mr, qr, l)
        return g


def _alphas(L: int, total: int):
    """All multi-orders over L axes with the given total order."""
    for combo in itertools.combinations_with_replacement(range(L), total):
        alpha = [0] * L
        for c in combo:
            alpha[c] += 1
        yield tuple(alpha)


def _unit(L: int, l: int) -> tuple[int, ...]:
    e = [0] * L
    e[l] = 1
    return tuple(e)


def _add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


def _chain_to_raw(model: ExSpliNetModel, g_v: list[np.ndarray]) -> list[np.ndarray]:
    """Chain per-block v-gradients through the reparameterization Jacobian.

    For one block: ``g_u = (2 u / S) * (g_v - <g_v, v>)`` with ``S = sum(u^2)``.
    Frozen blocks report zero.
    """
    cfg = model.config
    out = []
    for l in range(cfg.L):
        gl = np.zeros_like(g_v[l])
        for t in range(cfg.T):
            if model.inner.frozen[t, l]:
                continue
            u = model.inner.u[l][t]
            S = float(np.sum(u * u))
            v = u * u / S
            gv = g_v[l][t]
            gl[t] = (2.0 * u / S) * (gv - float(np.sum(gv * v)))
        out.append(gl)
    return out


# -- input derivatives -----------------------------------------------------


def grad_input_batch(model: ExSpliNetModel, X: np.ndarray) -> np.ndarray:
    """Jacobian of outputs w.r.t. inputs for a batch, shape ``(K, O, D)``."""
    pack = _Pack(model, X, inner_order=1, outer_order=1)
    cfg = model.config
    K = pack.X.shape[0]
    J = np.zeros((K, cfg.O, cfg.D))
    for l in range(cfg.L):
        phi_l = pack.phi(_unit(cfg.L, l))  # (K, O, T)
        J += np.einsum("kot,ktd->kod", phi_l, pack.psi[1][l])
    return J


def grad_input(model: ExSpliNetModel, x: np.ndarray) -> np.ndarray:
    """Jacobian at one point, shape ``(O, D)``."""
    return grad_input_batch(model, np.asarray(x, dtype=float)[None, :])[0]


def _second_derivative_terms(pack: _Pack) -> np.ndarray:
    """All pure second input derivatives, shape ``(K, O, D)`` (entry (k,o,d) is
    the second derivative of output o along coordinate d)."""
    cfg = pack.cfg
    K = pack.X.shape[0]
    H = np.zeros((K, cfg.O, cfg.D))
    for l in range(cfg.L):
        for l2 in range(cfg.L):
            phi2 = pack.phi(_add(_unit(cfg.L, l), _unit(cfg.L, l2)))
            H += np.einsum(
                "kot,ktd,ktd->kod", phi2, pack.psi[1][l], pack.psi[1][l2]
            )
        phi1 = pack.phi(_unit(cfg.L, l))
        H += np.einsum("kot,ktd->kod", phi1, pack.psi[2][l])
    return H


def second_input_derivative(model: ExSpliNetModel, x: np.ndarray, d: int) -> np.ndarray:
    """Pure second derivative of the outputs along coordinate ``d`` (1-based)."""
    if not 1 <= d <= model.config.D:
        raise IndexError(f"coordinate {d} outside 1..{model.config.D}")
    pack = _Pack(model, np.asarray(x, dtype=float)[None, :], inner_order=2, outer_order=2)
    return _second_derivative_terms(pack)[0, :, d - 1]


def laplacian_batch(model: ExSpliNetModel, X: np.ndarray) -> np.ndarray:
    """Laplacian of every output over a batch, shape ``(K, O)``."""
    pack = _Pack(model, X, inner_order=2, outer_order=2)
    return _second_derivative_terms(pack).sum(axis=2)


# -- parameter gradients ---------------------------------------------------


def _value_grad_from_pack(pack: _Pack, coeff: np.ndarray) -> GradientBundle:
    """Gradient of ``sum_k sum_o coeff[k,o] * E_o(x_k)`` w.r.t. raw parameters."""
    cfg = pack.cfg
    coeff3 = np.repeat(coeff[:, :, None], cfg.T, axis=2)
    g_outer = pack.scatter_outer(coeff3, (0,) * cfg.L)
    g_v = []
    for l in range(cfg.L):
        phi_l = pack.phi(_unit(cfg.L, l))  # (K, O, T)
        s = np.einsum("ko,kot->kt", coeff, phi_l)
        g_v.append(np.einsum("kt,kdn->tdn", s, pack.B[l][0]))
    return GradientBundle(
        d_inner_raw=_chain_to_raw(pack.model, g_v), d_outer=g_outer
    )


def value_param_grad(model: ExSpliNetModel, X: np.ndarray, coeff: np.ndarray) -> GradientBundle:
    """Gradient of the coefficient-weighted sum of outputs over a batch."""
    pack = _Pack(model, X, inner_order=1, outer_order=1)
    return _value_grad_from_pack(pack, np.asarray(coeff, dtype=float))


def grad_params(model: ExSpliNetModel, x: np.ndarray) -> list[GradientBundle]:
    """Per-output gradients of the model value at one point."""
    cfg = model.config
    pack = _Pack(model, np.asarray(x, dtype=float)[None, :], inner_order=1, outer_order=1)
    bundles = []
    for o in range(cfg.O):
        coeff = np.zeros((1, cfg.O))
        coeff[0, o] = 1.0
        bundles.append(_value_grad_from_pack(pack, coeff))
    return bundles


def forward_and_risk_grad(
    model: ExSpliNetModel, X: np.ndarray, targets: np.ndarray
) -> tuple[float, GradientBundle]:
    """Squared-loss empirical risk over a batch and its parameter gradient.

    ``targets`` has shape ``(K, O)``; the risk is the mean over samples of the
    summed squared output errors.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    pack = _Pack(model, X, inner_order=1, outer_order=1)
    E = pack.outputs()
    if E.shape != targets.shape:
        raise ShapeMismatchError(
            f"targets shape {targets.shape} does not match outputs {E.shape}"
        )
    K = E.shape[0]
    resid = E - targets
    risk = float(np.sum(resid * resid) / K)
    grad = _value_grad_from_pack(pack, (2.0 / K) * resid)
    return risk, grad


def risk_grad(model: ExSpliNetModel, X: np.ndarray, targets: np.ndarray) -> GradientBundle:
    """Parameter gradient of the squared-loss empirical risk over a batch."""
    return forward_and_risk_grad(model, X, targets)[1]


# -- parameter gradient of the Laplacian (PINN interior term) --------------


def laplacian_param_grad(
    model: ExSpliNetModel, X: np.ndarray, coeff: np.ndarray, pack: _Pack | None = None
) -> GradientBundle:
    """Gradient of ``sum_k sum_o coeff[k,o] * Laplacian(E_o)(x_k)`` w.r.t. raw
    parameters, assembled symbolically (third-order outer transforms).
    """
    if pack is None:
        pack = _Pack(model, X, inner_order=2, outer_order=3)
    cfg = pack.cfg
    coeff = np.asarray(coeff, dtype=float)
    L = cfg.L

    # precomputed per-tree couplings
    A = {}  # (l, l2) -> (K, T): sum_d psi'_l psi'_l2
    for l in range(L):
        for l2 in range(l, L):
            A[(l, l2)] = np.einsum("ktd,ktd->kt", pack.psi[1][l], pack.psi[1][l2])
            A[(l2, l)] = A[(l, l2)]
    G = [pack.psi[2][l].sum(axis=2) for l in range(L)]  # (K, T)

    # outer-weight gradient
    g_outer = np.zeros_like(model.outer.w)
    for l in range(L):
        for l2 in range(L):
            alpha = _add(_unit(L, l), _unit(L, l2))
            c = coeff[:, :, None] * A[(l, l2)][:, None, :]
            g_outer += pack.scatter_outer(c, alpha)
        alpha = _unit(L, l)
        c = coeff[:, :, None] * G[l][:, None, :]
        g_outer += pack.scatter_outer(c, alpha)

    # inner-weight gradient
    g_v = []
    for lam in range(L):
        e_lam = _unit(L, lam)
        term_a = np.zeros((pack.X.shape[0], cfg.T))
        for l in range(L):
            for l2 in range(L):
                phi3 = pack.phi(_add(_add(_unit(L, l), _unit(L, l2)), e_lam))
                term_a += np.einsum("ko,kot,kt->kt", coeff, phi3, A[(l, l2)])
            phi2 = pack.phi(_add(_unit(L, l), e_lam))
            term_a += np.einsum("ko,kot,kt->kt", coeff, phi2, G[l])
        term_b = np.zeros((pack.X.shape[0], cfg.T, cfg.D))
        for l2 in range(L):
            phi2 = pack.phi(_add(e_lam, _unit(L, l2)))
            term_b += np.einsum("ko,kot,ktd->ktd", coeff, phi2, pack.psi[1][l2])
        phi1 = pack.phi(e_lam)
        term_c = np.einsum("ko,kot->kt", coeff, phi1)
        gl = (
            np.einsum("kt,kdn->tdn", term_a, pack.B[lam][0])
            + 2.0 * np.einsum("ktd,kdn->tdn", term_b, pack.Bp1[lam])
            + np.einsum("kt,kdn->tdn", term_c, pack.Bp2[lam])
        )
        g_v.append(gl)

    return GradientBundle(
        d_inner_raw=_chain_to_raw(model, g_v), d_outer=g_outer
    )
