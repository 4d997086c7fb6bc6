"""Probabilistic-tree reading of a trained model: per-level gating
distributions, hierarchical joint class probabilities, pruned feature
summaries, and rule extraction.

Each tree level carries ``M_l`` hidden classes; the B-spline values at the
level's feature are read as a distribution over those classes (they are
nonnegative and sum to one). Multiplying across levels gives the joint
distribution over hierarchical classes, and every output is a weighted sum of
those probabilities with the outer weights — so the model doubles as a fuzzy
decision tree whose rules can be dumped.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import bspline
from .errors import InvalidHyperparameterError
from .model import ExSpliNetModel

__all__ = [
    "LevelDistribution",
    "FeatureSummary",
    "Rule",
    "RuleSet",
    "level_distribution",
    "joint_distribution",
    "feature_summary",
    "extract_rules",
    "predict_explain",
    "format_rules",
]


@dataclass(frozen=True)
class LevelDistribution:
    """Distribution over the hidden classes of one (tree, level); 1-based ids."""

    tree: int
    level: int
    probabilities: np.ndarray


@dataclass(frozen=True)
class FeatureSummary:
    """Sparse description of one inner feature after thresholding.

    ``terms`` lists ``(d, n, v)`` with 1-based dimension and basis indices for
    every retained coefficient; ``affine`` holds per-dimension slopes when the
    feature is a plain convex combination (degree 1, two basis functions), in
    which case the feature is approximately ``sum_d affine[d] * x_d``.
    """

    tree: int
    level: int
    threshold: float
    terms: list[tuple[int, int, float]]
    affine: np.ndarray | None = None


@dataclass(frozen=True)
class Rule:
    """One hierarchical class of one tree with its per-output weights."""

    tree: int
    classes: tuple[int, ...]  # 1-based hidden-class index per level
    weights: np.ndarray  # (O,)
    conditions: tuple[str, ...]  # human-readable gating descriptions per level


@dataclass
class RuleSet:
    """Every rule of every tree plus the pruned feature summaries."""

    rules: list[Rule]
    features: list[FeatureSummary]
    stochastic: bool  # True when all weight rows are probability vectors
    output_names: list[str] = field(default_factory=list)


def level_distribution(
    model: ExSpliNetModel, t: int, level: int, x: np.ndarray
) -> LevelDistribution:
    """Hidden-class distribution of one (tree, level) at a point (1-based ids)."""
    cfg = model.config
    if not 1 <= t <= cfg.T:
        raise IndexError(f"tree {t} outside 1..{cfg.T}")
    if not 1 <= level <= cfg.L:
        raise IndexError(f"level {level} outside 1..{cfg.L}")
    y = model.inner_feature(t, level, x)
    probs = bspline.basis_matrix(cfg.M[level - 1], cfg.q[level - 1], np.array([y]))[0]
    return LevelDistribution(tree=t, level=level, probabilities=probs)


def joint_distribution(model: ExSpliNetModel, t: int, x: np.ndarray) -> np.ndarray:
    """Joint hidden-class probabilities of one tree: the outer product of the
    level distributions, shape ``(M_1, ..., M_L)``; entries sum to one."""
    cfg = model.config
    joint = np.array(1.0)
    for level in range(1, cfg.L + 1):
        probs = level_distribution(model, t, level, x).probabilities
        joint = np.multiply.outer(joint, probs)
    return joint


def feature_summary(
    model: ExSpliNetModel, t: int, level: int, threshold: float = 1e-2
) -> FeatureSummary:
    """Constrained inner coefficients of one feature with small entries pruned."""
    if threshold <= 0:
        raise InvalidHyperparameterError("threshold must be > 0")
    cfg = model.config
    v = model.inner.v_level(level - 1)[t - 1]  # (D, N_l)
    terms = [
        (d + 1, n + 1, float(v[d, n]))
        for d in range(cfg.D)
        for n in range(cfg.N[level - 1])
        if v[d, n] >= threshold
    ]
    affine = None
    if cfg.p[level - 1] == 1 and cfg.N[level - 1] == 2:
        # the second hat function is the identity, so the feature reads
        # sum_d v[d, 1] * x_d (plus nothing from the first hat at x = 0 slope)
        affine = v[:, 1].copy()
    return FeatureSummary(
        tree=t, level=level, threshold=threshold, terms=terms, affine=affine
    )


def _gating_conditions(model: ExSpliNetModel, level: int) -> list[str]:
    """Textual gating description per hidden class of one level.

    Degree-1 classes map to the interval where their hat function dominates
    all others (between neighboring Greville midpoints); higher degrees report
    the support interval of the B-spline only.
    """
    cfg = model.config
    M = cfg.M[level - 1]
    q = cfg.q[level - 1]
    out = []
    if q == 1:
        g = bspline.greville(M, 1)
        edges = np.concatenate([[0.0], (g[:-1] + g[1:]) / 2.0, [1.0]])
        for m in range(M):
            out.append(f"y_{level} in [{edges[m]:.4g}, {edges[m + 1]:.4g}]")
        return out
    kv = bspline.open_uniform_knots(M, q)
    for m in range(M):
        lo = kv.knots[m]
        hi = kv.knots[m + q + 1]
        out.append(f"y_{level} in supp [{lo:.4g}, {hi:.4g}]")
    return out


def extract_rules(
    model: ExSpliNetModel, threshold: float = 1e-2, output_names: list[str] | None = None
) -> RuleSet:
    """One rule per (tree, hidden class tuple) with its output-weight vector."""
    cfg = model.config
    conditions = [_gating_conditions(model, level) for level in range(1, cfg.L + 1)]
    rules = []
    for t in range(1, cfg.T + 1):
        w_t = model.outer.w[:, t - 1]  # (O, M_1, ..., M_L)
        for classes in np.ndindex(*cfg.M):
            rules.append(
                Rule(
                    tree=t,
                    classes=tuple(m + 1 for m in classes),
                    weights=w_t[(slice(None),) + classes].copy(),
                    conditions=tuple(
                        conditions[level][classes[level]] for level in range(cfg.L)
                    ),
                )
            )
    features = [
        feature_summary(model, t, level, threshold)
        for t in range(1, cfg.T + 1)
        for level in range(1, cfg.L + 1)
    ]
    w2 = model.outer.w.reshape(cfg.O, cfg.T, -1)
    stochastic = bool(
        np.all(w2 >= 0) and np.allclose(w2.sum(axis=(1, 2)), 1.0, atol=1e-9)
    )
    return RuleSet(
        rules=rules,
        features=features,
        stochastic=stochastic,
        output_names=list(output_names or []),
    )


def predict_explain(
    model: ExSpliNetModel, x: np.ndarray, output_names: list[str] | None = None
) -> dict:
    """Predicted label plus, per tree, the most probable hidden-class path and
    the output weights attached to it. Argmax ties break to the lowest index."""
    cfg = model.config
    out = model.forward(x)
    label = int(np.argmax(out))
    trees = []
    for t in range(1, cfg.T + 1):
        joint = joint_distribution(model, t, x)
        path = np.unravel_index(int(np.argmax(joint)), joint.shape)
        trees.append(
            {
                "tree": t,
                "path": tuple(m + 1 for m in path),
                "path_probability": float(joint[path]),
                "weights": model.outer.w[(slice(None), t - 1) + path].copy(),
            }
        )
    name = output_names[label] if output_names else str(label)
    return {"label": label, "label_name": name, "outputs": out, "trees": trees}


def format_rules(ruleset: RuleSet, limit: int | None = None) -> str:
    """Human-readable rule dump."""
    kind = "probabilities" if ruleset.stochastic else "weights"
    buf = io.StringIO()
    buf.write(f"rule {kind} per (tree, hidden-class tuple)\n")
    for fs in ruleset.features:
        desc = ", ".join(f"v[d={d},n={n}]={v:.4g}" for d, n, v in fs.terms)
        buf.write(
            f"feature t={fs.tree} level={fs.level} (threshold {fs.threshold:g}): {desc}\n"
        )
        if fs.affine is not None:
            lin = " + ".join(
                f"{c:.4g}*x{d + 1}" for d, c in enumerate(fs.affine) if c >= fs.threshold
            )
            buf.write(f"  approx: y_{fs.level} = {lin}\n")
    rules = ruleset.rules if limit is None else ruleset.rules[:limit]
    for r in rules:
        w = ", ".join(
            f"{ruleset.output_names[o] if ruleset.output_names else 'out' + str(o + 1)}:"
            f" {r.weights[o]:.4g}"
            for o in range(len(r.weights))
        )
        cond = " and ".join(r.conditions)
        cls = ",".join(str(c) for c in r.classes)
        buf.write(f"[tree {r.tree}] class ({cls}): {cond} => {w}\n")
    return buf.getvalue()
