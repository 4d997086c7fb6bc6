"""The spline network model: constrained inner additive splines feeding
tensor-product outer splines, summed over trees.

Parameterization
----------------
Raw inner weights ``u[t, l, d, n]`` are unconstrained; the constrained weights
used in evaluation are ``v = u^2 / sum(u^2)`` with the sum running over both
``d`` and ``n`` of one ``(t, l)`` block, so every block is nonnegative with
grand sum 1. Blocks produced by the exact-identity initializers violate the
grand-sum normalization on purpose; they are flagged *frozen*: their ``v`` is
stored verbatim and they receive zero gradients.

Canonical flat parameter order: the raw inner blocks level by level
(``l = 1..L``, each as the C-order flattening of ``(T, D, N_l)``), followed by
the outer tensors as the C-order flattening of ``(O, T, M_1, ..., M_L)``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import bspline, tensor
from .errors import (
    DegenerateWeightsError,
    InvalidHyperparameterError,
    OutOfDomainError,
    ShapeMismatchError,
)

__all__ = [
    "ModelConfig",
    "InnerWeights",
    "OuterWeights",
    "ExSpliNetModel",
    "param_count",
    "reparam",
    "init_random",
    "init_identity",
    "init_coordinate_select",
    "init_convex",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_FORMAT",
]

CHECKPOINT_FORMAT = "exsplinet-v1"

_FEATURE_CLAMP_SLACK = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters: dimensions, tree/level counts, basis counts, degrees."""

    D: int
    O: int
    T: int
    L: int
    N: tuple[int, ...]
    M: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "N", tuple(int(v) for v in self.N))
        object.__setattr__(self, "M", tuple(int(v) for v in self.M))
        object.__setattr__(self, "p", tuple(int(v) for v in self.p))
        object.__setattr__(self, "q", tuple(int(v) for v in self.q))
        if min(self.D, self.O, self.T, self.L) < 1:
            raise InvalidHyperparameterError("D, O, T, L must all be >= 1")
        if not len(self.N) == len(self.M) == len(self.p) == len(self.q) == self.L:
            raise InvalidHyperparameterError("N, M, p, q must have length L")
        for l in range(self.L):
            if not self.N[l] > self.p[l] >= 0:
                raise InvalidHyperparameterError(
                    f"level {l + 1}: need N > p >= 0, got N={self.N[l]}, p={self.p[l]}"
                )
            if not self.M[l] > self.q[l] >= 0:
                raise InvalidHyperparameterError(
                    f"level {l + 1}: need M > q >= 0, got M={self.M[l]}, q={self.q[l]}"
                )


def param_count(config: ModelConfig) -> int:
    """Total number of trainable weight parameters of a configuration."""
    inner = config.D * config.T * sum(config.N)
    outer = config.O * config.T * int(np.prod(config.M))
    return inner + outer


def reparam(u: np.ndarray) -> np.ndarray:
    """Map one raw block to the constrained simplex: ``u^2 / sum(u^2)``.

    The sum runs over all entries of the block. Raises if the block is all
    zero rather than silently perturbing it.
    """
    u = np.asarray(u, dtype=float)
    s = float(np.sum(u * u))
    if s == 0.0:
        raise DegenerateWeightsError("raw inner weight block is entirely zero")
    return u * u / s


@dataclass
class InnerWeights:
    """Raw inner weights plus frozen overrides.

    ``u[l]`` has shape ``(T, D, N_l)``. ``frozen[t, l]`` marks blocks whose
    constrained weights are taken verbatim from ``v_frozen[l][t]`` instead of
    the reparameterization; those blocks are excluded from training.
    """

    u: list[np.ndarray]
    frozen: np.ndarray
    v_frozen: list[np.ndarray] = field(default_factory=list)

    def v_level(self, level: int) -> np.ndarray:
        """Constrained weights ``v`` for one level, shape ``(T, D, N_l)``."""
        ul = self.u[level]
        T = ul.shape[0]
        out = np.empty_like(ul)
        for t in range(T):
            if self.frozen[t, level]:
                out[t] = self.v_frozen[level][t]
            else:
                out[t] = reparam(ul[t])
        return out


@dataclass
class OuterWeights:
    """One weight tensor per (output, tree): shape ``(O, T, M_1, ..., M_L)``."""

    w: np.ndarray


class ExSpliNetModel:
    """A full model instance: configuration, inner and outer weights."""

    def __init__(self, config: ModelConfig, inner: InnerWeights, outer: OuterWeights):
        for l in range(config.L):
            if inner.u[l].shape != (config.T, config.D, config.N[l]):
                raise ShapeMismatchError(f"inner level {l + 1} shape {inner.u[l].shape}")
        expected = (config.O, config.T) + config.M
        if outer.w.shape != expected:
            raise ShapeMismatchError(
                f"outer shape {outer.w.shape}, expected {expected}"
            )
        self.config = config
        self.inner = inner
        self.outer = outer

    # -- evaluation -------------------------------------------------------

    def _check_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.config.D:
            raise ShapeMismatchError(
                f"input has {X.shape[1]} columns, model D = {self.config.D}"
            )
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise OutOfDomainError("inputs must lie in [0, 1]^D")
        return X

    def features_batch(self, X: np.ndarray) -> np.ndarray:
        """Inner feature values for a batch, shape ``(K, T, L)``, clamped to [0, 1]."""
        X = self._check_inputs(X)
        cfg = self.config
        K = X.shape[0]
        Y = np.empty((K, cfg.T, cfg.L))
        for l in range(cfg.L):
            B = inner_basis(cfg, X, l)  # (K, D, N_l)
            v = self.inner.v_level(l)  # (T, D, N_l)
            Y[:, :, l] = np.einsum("kdn,tdn->kt", B, v)
        np.clip(Y, 0.0, 1.0, out=Y)
        return Y

    def inner_feature(self, t: int, level: int, x: np.ndarray) -> float:
        """Feature value of one (tree, level) at a single point; ``t``/``level`` 1-based."""
        Y = self.features_batch(np.asarray(x, dtype=float)[None, :])
        return float(Y[0, t - 1, level - 1])

    def forward_batch(self, X: np.ndarray) -> np.ndarray:
        """Model outputs for a batch of points, shape ``(K, O)``."""
        Y = self.features_batch(X)
        cfg = self.config
        out = np.zeros((Y.shape[0], cfg.O))
        bases = [
            outer_basis(cfg, Y[:, :, l], l, reduction=0) for l in range(cfg.L)
        ]  # each (K, T, M_l)
        contracted = _contract_outer(self.outer.w, bases)  # (K, O, T)
        out = contracted.sum(axis=2)
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Model output at one point, shape ``(O,)``."""
        return self.forward_batch(np.asarray(x, dtype=float)[None, :])[0]

    # -- flat parameter vector -------------------------------------------

    def flat_params(self) -> np.ndarray:
        parts = [ul.ravel() for ul in self.inner.u]
        parts.append(self.outer.w.ravel())
        return np.concatenate(parts)

    def set_flat_params(self, theta: np.ndarray) -> None:
        theta = np.asarray(theta, dtype=float)
        if theta.size != param_count(self.config):
            raise ShapeMismatchError("flat parameter vector has wrong length")
        pos = 0
        for l in range(self.config.L):
            n = self.inner.u[l].size
            self.inner.u[l] = theta[pos : pos + n].reshape(self.inner.u[l].shape).copy()
            pos += n
        self.outer.w = theta[pos:].reshape(self.outer.w.shape).copy()

    def trainable_mask(self) -> np.ndarray:
        """Boolean mask over the flat vector; frozen inner blocks are False."""
        cfg = self.config
        parts = []
        for l in range(cfg.L):
            m = np.ones((cfg.T, cfg.D, cfg.N[l]), dtype=bool)
            m[self.inner.frozen[:, l]] = False
            parts.append(m.ravel())
        parts.append(np.ones(self.outer.w.size, dtype=bool))
        return np.concatenate(parts)

    def copy(self) -> "ExSpliNetModel":
        inner = InnerWeights(
            u=[ul.copy() for ul in self.inner.u],
            frozen=self.inner.frozen.copy(),
            v_frozen=[vl.copy() for vl in self.inner.v_frozen],
        )
        return ExSpliNetModel(self.config, inner, OuterWeights(self.outer.w.copy()))


# -- cached basis helpers (module-level so autodiff can share them) --------


def inner_basis(cfg: ModelConfig, X: np.ndarray, level: int, reduction: int = 0) -> np.ndarray:
    """Dense inner basis values per input dimension, shape ``(K, D, N_l - r)``.

    ``reduction`` lowers the degree (and basis count) ``r`` times; used for
    derivative evaluation.
    """
    N = cfg.N[level] - reduction
    p = cfg.p[level] - reduction
    K, D = X.shape
    B = bspline.basis_matrix(N, p, X.ravel(order="F"))
    return B.reshape(D, K, N).transpose(1, 0, 2)


def outer_basis(cfg: ModelConfig, Yl: np.ndarray, level: int, reduction: int) -> np.ndarray:
    """Dense outer basis on one level at feature values ``Yl`` of shape ``(K, T)``.

    Returns shape ``(K, T, M_l - r)`` for degree lowered ``r`` times.
    """
    M = cfg.M[level] - reduction
    q = cfg.q[level] - reduction
    K, T = Yl.shape
    B = bspline.basis_matrix(M, q, Yl.ravel())
    return B.reshape(K, T, M)


def _contract_outer(w: np.ndarray, bases: list[np.ndarray]) -> np.ndarray:
    """Contract a weight tensor ``(O, T, M_1.., M_L)`` with per-axis bases ``(K, T, M_l)``.

    Returns ``(K, O, T)``: per-tree outer function values for a whole batch.
    """
    res = np.einsum("ktm,otm...->kot...", bases[0], w)
    for B in bases[1:]:
        res = np.einsum("ktm,kotm...->kot...", B, res)
    return res


# -- initializers ----------------------------------------------------------


def init_random(config: ModelConfig, seed: int) -> ExSpliNetModel:
    """Random model: raw inner uniform on [0.5, 1.5], outer uniform on [-1/T, 1/T].

    The distribution is a documented choice of this implementation; with the
    chosen outer scale, outputs at initialization are bounded by 1 in absolute
    value thanks to the partition of unity.
    """
    rng = np.random.default_rng(seed)
    u = [
        rng.uniform(0.5, 1.5, size=(config.T, config.D, config.N[l]))
        for l in range(config.L)
    ]
    frozen = np.zeros((config.T, config.L), dtype=bool)
    v_frozen = [np.zeros_like(ul) for ul in u]
    s = 1.0 / config.T
    w = rng.uniform(-s, s, size=(config.O, config.T) + config.M)
    return ExSpliNetModel(config, InnerWeights(u, frozen, v_frozen), OuterWeights(w))


def _inner_from_targets(config: ModelConfig, targets: list[np.ndarray]) -> InnerWeights:
    """Build inner weights whose constrained values equal ``targets`` exactly.

    ``targets[l]`` has shape ``(T, D, N_l)``, entries nonnegative. Blocks whose
    grand sum is 1 live on the normalized manifold and stay trainable
    (``u = sqrt(v)``); the rest are stored verbatim and frozen.
    """
    u = []
    frozen = np.zeros((config.T, config.L), dtype=bool)
    v_frozen = []
    for l in range(config.L):
        tgt = np.asarray(targets[l], dtype=float)
        if np.any(tgt < 0):
            raise InvalidHyperparameterError("target inner weights must be nonnegative")
        u.append(np.sqrt(tgt))
        v_frozen.append(tgt.copy())
        for t in range(config.T):
            s = tgt[t].sum()
            if abs(s - 1.0) > 1e-12:
                frozen[t, l] = True
    return InnerWeights(u=u, frozen=frozen, v_frozen=v_frozen)


def init_identity(config: ModelConfig) -> InnerWeights:
    """Inner weights making feature ``l`` reproduce coordinate ``x_l`` exactly.

    Requires ``L = D`` and all inner degrees >= 1. Level ``l`` carries the
    Greville abscissae on dimension ``l`` and zeros elsewhere.
    """
    if config.L != config.D:
        raise InvalidHyperparameterError("identity initialization needs L = D")
    targets = []
    for l in range(config.L):
        if config.p[l] < 1:
            raise InvalidHyperparameterError("identity initialization needs p >= 1")
        tgt = np.zeros((config.T, config.D, config.N[l]))
        tgt[:, l, :] = bspline.greville(config.N[l], config.p[l])
        targets.append(tgt)
    return _inner_from_targets(config, targets)


def init_coordinate_select(config: ModelConfig, sigma) -> InnerWeights:
    """Inner weights making feature ``(t, l)`` reproduce ``x_{sigma[t][l]}``.

    ``sigma`` is indexable as ``sigma[t][l]`` with 1-based dimension values.
    """
    sigma = np.asarray(sigma, dtype=int)
    if sigma.shape != (config.T, config.L):
        raise ShapeMismatchError(f"sigma must have shape (T, L) = ({config.T}, {config.L})")
    if np.any(sigma < 1) or np.any(sigma > config.D):
        raise IndexError("sigma values must lie in 1..D")
    targets = []
    for l in range(config.L):
        if config.p[l] < 1:
            raise InvalidHyperparameterError("coordinate selection needs p >= 1")
        g = bspline.greville(config.N[l], config.p[l])
        tgt = np.zeros((config.T, config.D, config.N[l]))
        for t in range(config.T):
            tgt[t, sigma[t, l] - 1, :] = g
        targets.append(tgt)
    return _inner_from_targets(config, targets)


def init_convex(config: ModelConfig, nu: np.ndarray) -> InnerWeights:
    """Inner weights making feature ``(t, l)`` a convex combination of the inputs.

    Uses the ``p = 1``, ``N = 2`` construction where the second hat function is
    the identity, so the feature equals ``sum_d nu[t, l, d] * x_d``. The
    resulting blocks have grand sum 1 and remain trainable.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (config.T, config.L, config.D):
        raise ShapeMismatchError("nu must have shape (T, L, D)")
    if np.any(nu < 0) or not np.allclose(nu.sum(axis=2), 1.0, atol=1e-12):
        raise InvalidHyperparameterError("nu must be nonnegative and sum to 1 over d")
    targets = []
    for l in range(config.L):
        if config.p[l] != 1 or config.N[l] != 2:
            raise InvalidHyperparameterError("convex initialization needs p = 1, N = 2")
        tgt = np.zeros((config.T, config.D, 2))
        tgt[:, :, 1] = nu[:, l, :]
        targets.append(tgt)
    return _inner_from_targets(config, targets)


# -- checkpoint io ---------------------------------------------------------


def _fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _dump_array(arr: np.ndarray, out: io.StringIO) -> None:
    out.write("[")
    flat = arr.ravel()
    for i, v in enumerate(flat):
        if i:
            out.write(", ")
        out.write(_fmt_float(v))
    out.write("]")


def save_checkpoint(model: ExSpliNetModel, path) -> None:
    """Write a model to a JSON text document.

    Arrays are flat in canonical C order with 17 significant digits so a
    round trip is bit faithful.
    """
    cfg = model.config
    out = io.StringIO()
    out.write("{\n")
    out.write(f'  "format": {json.dumps(CHECKPOINT_FORMAT)},\n')
    out.write(
        '  "config": '
        + json.dumps(
            {
                "D": cfg.D,
                "O": cfg.O,
                "T": cfg.T,
                "L": cfg.L,
                "N": list(cfg.N),
                "M": list(cfg.M),
                "p": list(cfg.p),
                "q": list(cfg.q),
            }
        )
        + ",\n"
    )
    out.write('  "inner_u": [')
    for l in range(cfg.L):
        if l:
            out.write(", ")
        _dump_array(model.inner.u[l], out)
    out.write("],\n")
    out.write(
        '  "inner_frozen": '
        + json.dumps(model.inner.frozen.astype(int).tolist())
        + ",\n"
    )
    out.write('  "inner_v_frozen": [')
    for l in range(cfg.L):
        if l:
            out.write(", ")
        _dump_array(model.inner.v_frozen[l], out)
    out.write("],\n")
    out.write('  "outer_w": ')
    _dump_array(model.outer.w, out)
    out.write("\n}\n")
    with open(path, "w") as fh:
        fh.write(out.getvalue())


def load_checkpoint(path) -> ExSpliNetModel:
    """Read a model written by :func:`save_checkpoint`."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise InvalidHyperparameterError(
            f"unsupported checkpoint format: {doc.get('format')!r}"
        )
    c = doc["config"]
    cfg = ModelConfig(
        D=c["D"], O=c["O"], T=c["T"], L=c["L"],
        N=tuple(c["N"]), M=tuple(c["M"]), p=tuple(c["p"]), q=tuple(c["q"]),
    )
    u = []
    v_frozen = []
    for l in range(cfg.L):
        shape = (cfg.T, cfg.D, cfg.N[l])
        u.append(np.array(doc["inner_u"][l], dtype=float).reshape(shape))
        v_frozen.append(np.array(doc["inner_v_frozen"][l], dtype=float).reshape(shape))
    frozen = np.array(doc["inner_frozen"], dtype=bool)
    w = np.array(doc["outer_w"], dtype=float).reshape((cfg.O, cfg.T) + cfg.M)
    return ExSpliNetModel(cfg, InnerWeights(u, frozen, v_frozen), OuterWeights(w))
