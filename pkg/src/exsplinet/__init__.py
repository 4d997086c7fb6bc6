"""Spline-network toolkit: additive univariate B-spline feature extractors
composed with tensor-product B-spline outer functions, with analytic
gradients, constrained training, physics-informed solving, and a
probabilistic-tree interpretation layer.
"""

from .errors import (
    ConfigError,
    DataError,
    DegenerateWeightsError,
    DegreeTooLowError,
    ExSpliNetError,
    InvalidHyperparameterError,
    OutOfDomainError,
    SamplingError,
    ShapeMismatchError,
)
from .model import (
    CHECKPOINT_FORMAT,
    ExSpliNetModel,
    InnerWeights,
    ModelConfig,
    OuterWeights,
    init_convex,
    init_coordinate_select,
    init_identity,
    init_random,
    load_checkpoint,
    param_count,
    reparam,
    save_checkpoint,
)
from .autodiff import (
    GradientBundle,
    grad_input,
    grad_params,
    laplacian_batch,
    risk_grad,
    second_input_derivative,
)
from .training import (
    TrainConfig,
    TrainReport,
    empirical_risk,
    evaluate,
    fit_outer_least_squares,
    kfold,
    train,
)
from .pinn import (
    CollocationSet,
    DifferentialProblem,
    ImplicitDomain2D,
    PinnConfig,
    PinnReport,
    builtin_problem,
    differential_risk,
    egg_domain,
    pinn_train,
    sample_collocation,
)
from .interpret import (
    LevelDistribution,
    Rule,
    RuleSet,
    extract_rules,
    feature_summary,
    joint_distribution,
    level_distribution,
    predict_explain,
)
from .dataio import (
    CSVSchema,
    Dataset,
    load_csv,
    load_idx,
    normalize_minmax,
    synthetic,
)

__version__ = "0.1.0"

__all__ = [
    "ExSpliNetError", "InvalidHyperparameterError", "OutOfDomainError",
    "DegreeTooLowError", "DegenerateWeightsError", "ShapeMismatchError",
    "DataError", "SamplingError", "ConfigError",
    "ModelConfig", "InnerWeights", "OuterWeights", "ExSpliNetModel",
    "param_count", "reparam", "init_random", "init_identity",
    "init_coordinate_select", "init_convex", "save_checkpoint",
    "load_checkpoint", "CHECKPOINT_FORMAT",
    "GradientBundle", "grad_input", "second_input_derivative",
    "laplacian_batch", "grad_params", "risk_grad",
    "TrainConfig", "TrainReport", "empirical_risk", "train", "evaluate",
    "kfold", "fit_outer_least_squares",
    "DifferentialProblem", "ImplicitDomain2D", "CollocationSet",
    "PinnConfig", "PinnReport", "egg_domain", "sample_collocation",
    "differential_risk", "pinn_train", "builtin_problem",
    "LevelDistribution", "Rule", "RuleSet", "level_distribution",
    "joint_distribution", "feature_summary", "extract_rules",
    "predict_explain",
    "Dataset", "CSVSchema", "load_csv", "normalize_minmax", "synthetic",
    "load_idx",
    "__version__",
]
