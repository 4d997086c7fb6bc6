"""Physics-informed training for the Poisson problem -Laplacian(u) = f with
Dirichlet boundary data on the unit interval or an implicitly defined planar
domain inside the unit square.

The objective is the differential empirical risk ``E_i + lambda * E_b``:
interior PDE residuals plus boundary mismatches, both as mean squared values
over collocation points. Optimization is full-batch Adam; all gradients are
analytic (the interior term differentiates the model's Laplacian with respect
to the weights symbolically).
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff
from .errors import (
    DegreeTooLowError,
    InvalidHyperparameterError,
    SamplingError,
)
from .model import ExSpliNetModel, param_count
from .training import AdamState, TrainConfig, adam_step

__all__ = [
    "ImplicitDomain2D",
    "DifferentialProblem",
    "CollocationSet",
    "PinnConfig",
    "PinnReport",
    "egg_domain",
    "sample_collocation",
    "differential_risk",
    "pinn_train",
    "evaluation_grid",
    "solution_mse",
    "write_solution_csv",
    "rescale_rhs",
    "builtin_problem",
    "BUILTIN_PROBLEMS",
]


@dataclass(frozen=True)
class ImplicitDomain2D:
    """A planar domain inside the unit square given by ``phi(x) <= 0`` plus a
    parametric boundary curve ``curve(s)`` for ``s`` in [0, 1)."""

    phi: Callable[[np.ndarray], np.ndarray]
    curve: Callable[[np.ndarray], np.ndarray]

    def inside(self, X: np.ndarray) -> np.ndarray:
        """Strict interior mask for points of shape (K, 2)."""
        return self.phi(np.atleast_2d(X)) < 0.0

    def boundary_points(self, s: np.ndarray) -> np.ndarray:
        P = self.curve(np.asarray(s, dtype=float))
        res = np.abs(self.phi(P))
        if np.any(res > 1e-9):
            raise InvalidHyperparameterError(
                "boundary curve leaves the implicit zero set"
            )
        return P


def egg_domain(a: float = 0.42, b: float = 0.32, c: float = 0.15) -> ImplicitDomain2D:
    """Egg-shaped implicit domain centered at (0.5, 0.5).

    With ``X = x1 - 1/2`` and ``Y = x2 - 1/2`` the region is
    ``(X/a)^2 + (Y / (b (1 + c X / a)))^2 <= 1``: an ellipse whose vertical
    radius grows linearly toward the +X end, giving the asymmetric egg
    profile. Defaults keep the domain strictly inside the unit square.
    """
    if not (0 < a < 0.5 and 0 < b * (1 + abs(c)) < 0.5):
        raise InvalidHyperparameterError("egg domain must fit inside the unit square")

    def phi(X):
        X = np.atleast_2d(X)
        u = X[:, 0] - 0.5
        v = X[:, 1] - 0.5
        return (u / a) ** 2 + (v / (b * (1.0 + c * u / a))) ** 2 - 1.0

    def curve(s):
        theta = 2.0 * np.pi * np.asarray(s, dtype=float)
        u = a * np.cos(theta)
        v = b * (1.0 + c * np.cos(theta)) * np.sin(theta)
        return np.column_stack([u + 0.5, v + 0.5])

    return ImplicitDomain2D(phi=phi, curve=curve)


@dataclass(frozen=True)
class DifferentialProblem:
    """Problem data for ``-Laplacian(u) = f`` with ``u = g`` on the boundary.

    All functions take point arrays of shape ``(K, D)`` and return ``(K,)``
    vectors, and are expressed in the unit-domain coordinates (rescale
    beforehand with :func:`rescale_rhs` when the native domain differs).
    ``domain`` is ``None`` for the unit interval (``dimension`` 1) or an
    :class:`ImplicitDomain2D` (``dimension`` 2). ``exact`` is optional and
    only used for error reporting.
    """

    dimension: int
    rhs: Callable[[np.ndarray], np.ndarray]
    boundary: Callable[[np.ndarray], np.ndarray]
    domain: ImplicitDomain2D | None = None
    exact: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise InvalidHyperparameterError("dimension must be 1 or 2")
        if self.dimension == 2 and self.domain is None:
            raise InvalidHyperparameterError("2D problems need an implicit domain")


def rescale_rhs(
    f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, scale: float
) -> Callable[[np.ndarray], np.ndarray]:
    """Compose a right-hand side with the affine map ``x = lo + scale * z`` and
    absorb the Laplacian's ``scale**2`` factor, so the rescaled problem on the
    unit domain has the rescaled original solution."""
    lo = np.asarray(lo, dtype=float)

    def f2(Z):
        return (scale**2) * f(lo + scale * np.atleast_2d(Z))

    return f2


@dataclass(frozen=True)
class CollocationSet:
    """Interior and boundary sample points, shapes (K_i, D) and (K_b, D)."""

    interior: np.ndarray
    boundary: np.ndarray


def sample_collocation(
    problem: DifferentialProblem, K_i: int, K_b: int, seed: int
) -> CollocationSet:
    """Seeded collocation points: rejection sampling in the interior, uniform
    parameter (or endpoint) sampling on the boundary."""
    if K_i < 1 or K_b < 1:
        raise InvalidHyperparameterError("K_i and K_b must be >= 1")
    rng = np.random.default_rng(seed)
    if problem.dimension == 1:
        interior = rng.uniform(0.0, 1.0, size=(K_i, 1))
        while np.any((interior <= 0.0) | (interior >= 1.0)):
            bad = (interior <= 0.0) | (interior >= 1.0)
            interior[bad] = rng.uniform(0.0, 1.0, size=int(bad.sum()))
        boundary = np.array([[0.0], [1.0]])[np.arange(K_b) % 2]
        return CollocationSet(interior=interior, boundary=boundary)
    dom = problem.domain
    accepted = []
    n_acc = 0
    n_drawn = 0
    while n_acc < K_i:
        draw = rng.uniform(0.0, 1.0, size=(4096, 2))
        keep = draw[dom.inside(draw)]
        accepted.append(keep)
        n_acc += len(keep)
        n_drawn += len(draw)
        if n_drawn >= 10**6 and n_acc / n_drawn < 1e-3:
            raise SamplingError(
                f"interior rejection sampling stalled: {n_acc}/{n_drawn} accepted"
            )
    interior = np.concatenate(accepted)[:K_i]
    boundary = dom.boundary_points(rng.uniform(0.0, 1.0, size=K_b))
    return CollocationSet(interior=interior, boundary=boundary)


def _check_degrees(model: ExSpliNetModel) -> None:
    cfg = model.config
    if min(cfg.p) < 3 or min(cfg.q) < 3:
        raise DegreeTooLowError(
            "differential training needs all spline degrees >= 3 for a "
            f"twice-differentiable model (got p={cfg.p}, q={cfg.q})"
        )


def differential_risk(
    model: ExSpliNetModel,
    problem: DifferentialProblem,
    colloc: CollocationSet,
    lam: float = 1e4,
) -> tuple[float, float, float]:
    """The differential empirical risk and its two parts ``(total, E_i, E_b)``."""
    _check_degrees(model)
    if model.config.O != 1:
        raise InvalidHyperparameterError("differential problems are scalar (O = 1)")
    lap = autodiff.laplacian_batch(model, colloc.interior)[:, 0]
    r_i = -lap - problem.rhs(colloc.interior)
    E_i = float(np.mean(r_i * r_i))
    vals = model.forward_batch(colloc.boundary)[:, 0]
    r_b = vals - problem.boundary(colloc.boundary)
    E_b = float(np.mean(r_b * r_b))
    return E_i + lam * E_b, E_i, E_b


@dataclass(frozen=True)
class PinnConfig:
    """Full-batch optimizer settings for differential training."""

    epochs: int = 5000
    learning_rate: float = 0.001
    lam: float = 1e4
    seed: int = 0
    K_i: int = 998
    K_b: int = 2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1 or self.learning_rate <= 0 or self.lam < 0:
            raise InvalidHyperparameterError("invalid differential training settings")


@dataclass
class PinnReport:
    """Per-epoch differential risk plus final diagnostics."""

    der: list[float] = field(default_factory=list)
    final_der: float = 0.0
    final_interior: float = 0.0
    final_boundary: float = 0.0
    mse_exact: float | None = None
    best_epoch: int = 0
    seconds: float = 0.0
    n_params: int = 0
    lam: float = 0.0
    n_interior: int = 0
    n_boundary: int = 0


def _adam_cfg(config: PinnConfig) -> TrainConfig:
    return TrainConfig(
        epochs=1,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
    )


def pinn_train(
    model: ExSpliNetModel,
    problem: DifferentialProblem,
    config: PinnConfig,
    colloc: CollocationSet | None = None,
) -> tuple[ExSpliNetModel, PinnReport]:
    """Minimize the differential empirical risk with full-batch Adam.

    Returns the best epoch snapshot by total risk. The exact-solution MSE (if
    an exact solution is attached) is evaluated on the standard grid of
    :func:`evaluation_grid`.
    """
    _check_degrees(model)
    if model.config.O != 1:
        raise InvalidHyperparameterError("differential problems are scalar (O = 1)")
    if colloc is None:
        colloc = sample_collocation(problem, config.K_i, config.K_b, config.seed)
    model = model.copy()
    X_i, X_b = colloc.interior, colloc.boundary
    f_i = problem.rhs(X_i)
    g_b = problem.boundary(X_b)
    K_i, K_b = len(X_i), len(X_b)
    adam_cfg = _adam_cfg(config)
    theta = model.flat_params()
    state = AdamState.zeros(theta.size)
    report = PinnReport(
        n_params=param_count(model.config),
        lam=config.lam,
        n_interior=K_i,
        n_boundary=K_b,
    )
    best = (np.inf, theta.copy(), 0)
    t0 = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        pack = autodiff._Pack(model, X_i, inner_order=2, outer_order=3)
        lap = autodiff._second_derivative_terms(pack).sum(axis=2)[:, 0]
        r_i = -lap - f_i
        E_i = float(np.mean(r_i * r_i))
        grad = autodiff.laplacian_param_grad(
            model, X_i, (-2.0 / K_i) * r_i[:, None], pack=pack
        )
        vals = model.forward_batch(X_b)[:, 0]
        r_b = vals - g_b
        E_b = float(np.mean(r_b * r_b))
        g_bnd = autodiff.value_param_grad(
            model, X_b, (2.0 / K_b) * r_b[:, None]
        )
        grad.add(g_bnd, scale=config.lam)
        total = E_i + config.lam * E_b
        report.der.append(total)
        if total < best[0]:
            best = (total, theta.copy(), epoch)
        state, theta = adam_step(state, theta, grad.flat(), adam_cfg)
        model.set_flat_params(theta)
    # final epoch's risk for the final parameters
    total, E_i, E_b = differential_risk(model, problem, colloc, config.lam)
    report.der.append(total)
    if total < best[0]:
        best = (total, theta.copy(), config.epochs + 1)
    model.set_flat_params(best[1])
    report.best_epoch = best[2]
    report.final_der, report.final_interior, report.final_boundary = differential_risk(
        model, problem, colloc, config.lam
    )
    if problem.exact is not None:
        report.mse_exact = solution_mse(model, problem)
    report.seconds = time.perf_counter() - t0
    return model, report


def evaluation_grid(problem: DifferentialProblem, n_points: int = 300) -> np.ndarray:
    """Deterministic evaluation grid: ``n_points`` uniformly spaced points on
    [0, 1] in 1D; in 2D, the first ``n_points`` interior nodes (in row-major
    order) of the coarsest square lattice containing at least that many."""
    if problem.dimension == 1:
        return np.linspace(0.0, 1.0, n_points)[:, None]
    for n in range(10, 400):
        g = np.linspace(0.0, 1.0, n)
        GX, GY = np.meshgrid(g, g, indexing="ij")
        P = np.column_stack([GX.ravel(), GY.ravel()])
        P = P[problem.domain.inside(P)]
        if len(P) >= n_points:
            return P[:n_points]
    raise SamplingError("could not build an interior lattice of the requested size")


def solution_mse(
    model: ExSpliNetModel, problem: DifferentialProblem, n_points: int | None = None
) -> float:
    """MSE between the trained surrogate and the exact solution on the
    standard grid (300 points in 1D, 927 in 2D unless overridden)."""
    if problem.exact is None:
        raise InvalidHyperparameterError("problem has no exact solution attached")
    if n_points is None:
        n_points = 300 if problem.dimension == 1 else 927
    G = evaluation_grid(problem, n_points)
    diff = model.forward_batch(G)[:, 0] - problem.exact(G)
    return float(np.mean(diff * diff))


def write_solution_csv(
    model: ExSpliNetModel, problem: DifferentialProblem, path, n_points: int | None = None
) -> None:
    """Sample the surrogate on the standard grid and write (x, u_hat[, u_exact,
    error]) rows."""
    if n_points is None:
        n_points = 300 if problem.dimension == 1 else 927
    G = evaluation_grid(problem, n_points)
    u_hat = model.forward_batch(G)[:, 0]
    u_ex = problem.exact(G) if problem.exact is not None else None
    coords = [f"x{d + 1}" for d in range(problem.dimension)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = coords + ["u_hat"]
        if u_ex is not None:
            header += ["u_exact", "error"]
        writer.writerow(header)
        for k in range(len(G)):
            row = [f"{v:.10g}" for v in G[k]] + [f"{u_hat[k]:.10g}"]
            if u_ex is not None:
                row += [f"{u_ex[k]:.10g}", f"{u_hat[k] - u_ex[k]:.10g}"]
            writer.writerow(row)


# -- built-in manufactured problems ----------------------------------------


def _problem_sine_1d() -> DifferentialProblem:
    # -u'' = 4 pi^2 sin(2 pi x), u = sin(2 pi x)
    def rhs(X):
        return 4.0 * math.pi**2 * np.sin(2.0 * math.pi * np.atleast_2d(X)[:, 0])

    def exact(X):
        return np.sin(2.0 * math.pi * np.atleast_2d(X)[:, 0])

    return DifferentialProblem(
        dimension=1, rhs=rhs, boundary=exact, exact=exact, name="sine-1d"
    )


def _problem_egg_2d() -> DifferentialProblem:
    # u = sin(pi (x1^2 + x2^2)) on the egg domain; f and g manufactured
    def s(X):
        X = np.atleast_2d(X)
        return X[:, 0] ** 2 + X[:, 1] ** 2

    def exact(X):
        return np.sin(math.pi * s(X))

    def rhs(X):
        ss = s(X)
        return 4.0 * math.pi**2 * ss * np.sin(math.pi * ss) - 4.0 * math.pi * np.cos(
            math.pi * ss
        )

    return DifferentialProblem(
        dimension=2,
        rhs=rhs,
        boundary=exact,
        domain=egg_domain(),
        exact=exact,
        name="egg-2d",
    )


BUILTIN_PROBLEMS = {
    "exp3": _problem_sine_1d,
    "exp4": _problem_egg_2d,
}


def builtin_problem(name: str) -> DifferentialProblem:
    """Look up a manufactured problem by registry name."""
    if name not in BUILTIN_PROBLEMS:
        raise InvalidHyperparameterError(
            f"unknown problem {name!r}; available: {sorted(BUILTIN_PROBLEMS)}"
        )
    return BUILTIN_PROBLEMS[name]()
