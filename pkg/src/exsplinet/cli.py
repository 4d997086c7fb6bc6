"""Command-line front end: run experiments from JSON config files, solve
differential problems, dump rules from checkpoints, and export basis tables.

Exit codes: 0 success, 1 numerical/training failure, 2 usage or configuration
error. Relative dataset paths resolve against the ``EXSPLINET_DATA_DIR``
environment variable when it is set. All outputs land under ``--out`` with
fixed names (``checkpoint.esn``, ``report.txt``, ``metrics.csv``,
``rules.txt``, ``solution.csv``, ``basis.csv``).
"""

from __future__ import annotations

import datetime
import json
import os
import sys

import click
import numpy as np

from . import bspline, dataio, interpret, pinn, training
from .errors import ConfigError, DataError, ExSpliNetError
from .model import (
    ExSpliNetModel,
    ModelConfig,
    OuterWeights,
    init_coordinate_select,
    init_identity,
    init_random,
    load_checkpoint,
    param_count,
    save_checkpoint,
)

_CONFIG_EXIT = 2
_NUMERIC_EXIT = 1


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _load_config(path) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def _data_path(p: str) -> str:
    if os.path.isabs(p):
        return p
    root = os.environ.get("EXSPLINET_DATA_DIR")
    if root:
        return os.path.join(root, p)
    return p


def _model_config(section: dict) -> ModelConfig:
    _check_keys(section, {"D", "O", "T", "L", "N", "M", "p", "q"}, "model")
    try:
        return ModelConfig(
            D=section["D"], O=section["O"], T=section["T"], L=section["L"],
            N=tuple(section["N"]), M=tuple(section["M"]),
            p=tuple(section["p"]), q=tuple(section["q"]),
        )
    except KeyError as exc:
        raise ConfigError(f"model: missing key {exc.args[0]!r}") from exc


def _build_model(cfg: ModelConfig, init_section: dict | None, seed: int) -> ExSpliNetModel:
    if not init_section:
        return init_random(cfg, seed)
    _check_keys(init_section, {"kind", "sigma"}, "init")
    kind = init_section.get("kind", "random")
    if kind == "random":
        return init_random(cfg, seed)
    rng = np.random.default_rng(seed)
    s = 1.0 / cfg.T
    w = rng.uniform(-s, s, size=(cfg.O, cfg.T) + cfg.M)
    if kind == "identity":
        return ExSpliNetModel(cfg, init_identity(cfg), OuterWeights(w))
    if kind == "coordinate-select":
        sigma = init_section.get("sigma")
        if sigma is None:
            raise ConfigError("init: coordinate-select needs 'sigma'")
        return ExSpliNetModel(cfg, init_coordinate_select(cfg, sigma), OuterWeights(w))
    raise ConfigError(f"init: unknown kind {kind!r}")


def _stratified_split(ds: dataio.Dataset, test_fraction: float, seed: int, stratify: bool):
    rng = np.random.default_rng(seed)
    if stratify and ds.labels is not None:
        test_idx = []
        for cls in np.unique(ds.labels):
            idx = np.flatnonzero(ds.labels == cls)
            idx = rng.permutation(idx)
            n_test = max(1, int(round(test_fraction * len(idx))))
            test_idx.append(idx[:n_test])
        test_idx = np.sort(np.concatenate(test_idx))
    else:
        order = rng.permutation(ds.K)
        n_test = max(1, int(round(test_fraction * ds.K)))
        test_idx = np.sort(order[:n_test])
    mask = np.zeros(ds.K, dtype=bool)
    mask[test_idx] = True
    return ds.subset(np.flatnonzero(~mask)), ds.subset(test_idx)


def _build_data(section: dict, seed: int):
    _check_keys(
        section,
        {"synthetic", "K_train", "K_test", "csv", "n_features", "n_targets",
         "label_column", "has_header", "normalize", "test_fraction", "stratify",
         "idx", "subset"},
        "data",
    )
    if "synthetic" in section:
        return dataio.synthetic(
            section["synthetic"],
            int(section.get("K_train", 1000)),
            int(section.get("K_test", 500)),
            seed,
        )
    if "csv" in section:
        schema = dataio.CSVSchema(
            n_features=int(section["n_features"]),
            n_targets=int(section.get("n_targets", 1)),
            label_column=bool(section.get("label_column", False)),
            has_header=section.get("has_header"),
        )
        ds = dataio.load_csv(_data_path(section["csv"]), schema)
        if section.get("normalize", False):
            ds, _ = dataio.normalize_minmax(ds)
        return _stratified_split(
            ds,
            float(section.get("test_fraction", 0.2)),
            seed,
            bool(section.get("stratify", True)),
        )
    if "idx" in section:
        paths = section["idx"]
        _check_keys(
            paths,
            {"train_images", "train_labels", "test_images", "test_labels"},
            "data.idx",
        )
        train = dataio.load_idx(
            _data_path(paths["train_images"]), _data_path(paths["train_labels"])
        )
        test = dataio.load_idx(
            _data_path(paths["test_images"]), _data_path(paths["test_labels"])
        )
        subset = section.get("subset")
        if subset:
            train = train.subset(np.arange(int(subset)))
        return train, test
    raise ConfigError("data: need one of 'synthetic', 'csv', 'idx'")


def _write_report(path, lines: list[str], no_timestamp: bool) -> None:
    with open(path, "w") as fh:
        if not no_timestamp:
            fh.write(f"generated: {datetime.datetime.now().isoformat()}\n")
        fh.write("\n".join(lines) + "\n")


def _apply_threads(threads: int | None) -> None:
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


@click.group()
def main():
    """Spline-network toolkit: training, differential solving, interpretation."""


@main.command("train")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_dir", required=True, type=str)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--threads", type=int, default=None)
@click.option("--no-timestamp", is_flag=True, default=False)
def cmd_train(config_path, out_dir, seed, threads, no_timestamp):
    """Train a model from an experiment config and write all artifacts."""
    _apply_threads(threads)
    try:
        doc = _load_config(config_path)
        _check_keys(doc, {"model", "init", "train", "data", "seed"}, "config")
        run_seed = seed if seed is not None else int(doc.get("seed", 0))
        mcfg = _model_config(doc.get("model", {}))
        tsec = dict(doc.get("train", {}))
        _check_keys(
            tsec,
            {"epochs", "learning_rate", "batch_size", "loss", "beta1", "beta2",
             "eps", "eval_each_epoch"},
            "train",
        )
        tcfg = training.TrainConfig(seed=run_seed, **tsec)
        train_set, test_set = _build_data(doc.get("data", {}), run_seed)
        if train_set.D != mcfg.D:
            raise ConfigError(
                f"dataset has D={train_set.D} features but model D={mcfg.D}"
            )
        if train_set.O != mcfg.O:
            raise ConfigError(
                f"dataset has O={train_set.O} targets but model O={mcfg.O}"
            )
        model = _build_model(mcfg, doc.get("init"), run_seed)
    except (ConfigError, DataError) as exc:
        _fail(_CONFIG_EXIT, str(exc))
    except ExSpliNetError as exc:
        _fail(_CONFIG_EXIT, str(exc))
    try:
        model, report = training.train(model, train_set, test_set, tcfg)
    except ExSpliNetError as exc:
        _fail(_NUMERIC_EXIT, str(exc))
    os.makedirs(out_dir, exist_ok=True)
    save_checkpoint(model, os.path.join(out_dir, "checkpoint.esn"))
    training.write_metrics_csv(report, os.path.join(out_dir, "metrics.csv"))
    lines = [
        f"config: {config_path}",
        f"seed: {run_seed}",
        f"params: {report.n_params}",
        f"epochs: {tcfg.epochs}",
        f"batch_size: {report.batch_size}",
        f"best_epoch: {report.best_epoch}",
        f"final_train_risk: {report.train_risk[-1]:.10g}",
    ] + [f"test_{k}: {v:.10g}" for k, v in report.final_test.items()] + [
        f"seconds: {report.seconds:.2f}"
    ]
    _write_report(os.path.join(out_dir, "report.txt"), lines, no_timestamp)
    click.echo(f"trained; params: {report.n_params}; artifacts in {out_dir}")


@main.command("pinn")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_dir", required=True, type=str)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--no-timestamp", is_flag=True, default=False)
def cmd_pinn(config_path, out_dir, seed, threads, no_timestamp):
    """Solve a built-in differential problem by physics-informed training."""
    _apply_threads(threads)
    try:
        doc = _load_config(config_path)
        _check_keys(doc, {"model", "pinn", "seed"}, "config")
        run_seed = seed if seed is not None else int(doc.get("seed", 0))
        mcfg = _model_config(doc.get("model", {}))
        psec = dict(doc.get("pinn", {}))
        _check_keys(
            psec,
            {"problem", "epochs", "learning_rate", "lambda", "K_i", "K_b"},
            "pinn",
        )
        problem = pinn.builtin_problem(psec.get("problem", "exp3"))
        pcfg = pinn.PinnConfig(
            epochs=int(psec.get("epochs", 5000)),
            learning_rate=float(psec.get("learning_rate", 0.001)),
            lam=float(psec.get("lambda", 1e4)),
            seed=run_seed,
            K_i=int(psec.get("K_i", 998)),
            K_b=int(psec.get("K_b", 2)),
        )
        if problem.dimension != mcfg.D:
            raise ConfigError(
                f"problem dimension {problem.dimension} but model D={mcfg.D}"
            )
        model = init_random(mcfg, run_seed)
        pinn._check_degrees(model)  # refuse before any training starts
    except (ConfigError, DataError) as exc:
        _fail(_CONFIG_EXIT, str(exc))
    except ExSpliNetError as exc:
        _fail(_CONFIG_EXIT, str(exc))
    try:
        model, report = pinn.pinn_train(model, problem, pcfg)
    except ExSpliNetError as exc:
        _fail(_NUMERIC_EXIT, str(exc))
    os.makedirs(out_dir, exist_ok=True)
    save_checkpoint(model, os.path.join(out_dir, "checkpoint.esn"))
    pinn.write_solution_csv(model, problem, os.path.join(out_dir, "solution.csv"))
    lines = [
        f"config: {config_path}",
        f"problem: {problem.name}",
        f"seed: {run_seed}",
        f"params: {report.n_params}",
        f"lambda: {report.lam:g}",
        f"collocation: {report.n_interior} interior + {report.n_boundary} boundary",
        f"epochs: {pcfg.epochs}",
        f"best_epoch: {report.best_epoch}",
        f"initial_der: {report.der[0]:.10g}",
        f"final_der: {report.final_der:.10g}",
        f"final_interior: {report.final_interior:.10g}",
        f"final_boundary: {report.final_boundary:.10g}",
    ]
    if report.mse_exact is not None:
        lines.append(f"mse_vs_exact: {report.mse_exact:.10g}")
    lines.append(f"seconds: {report.seconds:.2f}")
    _write_report(os.path.join(out_dir, "report.txt"), lines, no_timestamp)
    click.echo(f"solved {problem.name}; final DER {report.final_der:.3e}")


@main.command("interpret")
@click.argument("checkpoint", type=str)
@click.option("--out", "out_dir", required=True, type=str)
@click.option("--data", "data_csv", type=str, default=None,
              help="Optional CSV for per-sample explanations.")
@click.option("--n-features", type=int, default=None)
@click.option("--label-column", is_flag=True, default=False)
@click.option("--threshold", type=float, default=0.01, show_default=True)
@click.option("--no-timestamp", is_flag=True, default=False)
def cmd_interpret(checkpoint, out_dir, data_csv, n_features, label_column, threshold,
                  no_timestamp):
    """Dump rules and feature summaries from a checkpoint."""
    try:
        model = load_checkpoint(checkpoint)
    except FileNotFoundError:
        _fail(_CONFIG_EXIT, f"checkpoint not found: {checkpoint}")
    except ExSpliNetError as exc:
        _fail(_CONFIG_EXIT, str(exc))
    try:
        ruleset = interpret.extract_rules(model, threshold=threshold)
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "rules.txt"), "w") as fh:
            if not no_timestamp:
                fh.write(f"generated: {datetime.datetime.now().isoformat()}\n")
            fh.write(interpret.format_rules(ruleset))
        if data_csv is not None:
            if n_features is None:
                _fail(_CONFIG_EXIT, "--data requires --n-features")
            schema = dataio.CSVSchema(
                n_features=n_features, label_column=label_column
            )
            ds = dataio.load_csv(_data_path(data_csv), schema)
            with open(os.path.join(out_dir, "explanations.txt"), "w") as fh:
                for k in range(ds.K):
                    exp = interpret.predict_explain(model, ds.inputs[k])
                    paths = "; ".join(
                        f"tree {t['tree']}: path {t['path']} (p={t['path_probability']:.3g})"
                        for t in exp["trees"]
                    )
                    fh.write(f"sample {k + 1}: label {exp['label_name']}; {paths}\n")
    except (ConfigError, DataError) as exc:
        _fail(_CONFIG_EXIT, str(exc))
    except ExSpliNetError as exc:
        _fail(_NUMERIC_EXIT, str(exc))
    click.echo(f"wrote rules for {len(ruleset.rules)} hidden classes to {out_dir}")


@main.command("basis")
@click.option("--n", "N", required=True, type=int, help="Number of basis functions.")
@click.option("--p", required=True, type=int, help="Degree.")
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--out", "out_dir", required=True, type=str)
def cmd_basis(N, p, samples, out_dir):
    """Dump basis values on a uniform grid as CSV (columns x, B_1..B_N)."""
    try:
        xs = np.linspace(0.0, 1.0, samples)
        B = bspline.basis_matrix(N, p, xs)
    except ExSpliNetError as exc:
        _fail(_CONFIG_EXIT, str(exc))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "basis.csv")
    with open(path, "w") as fh:
        fh.write("x," + ",".join(f"B_{n + 1}" for n in range(N)) + "\n")
        for k in range(samples):
            fh.write(
                f"{xs[k]:.10g}," + ",".join(f"{v:.10g}" for v in B[k]) + "\n"
            )
    click.echo(f"wrote {samples} rows to {path}")


if __name__ == "__main__":
    main()
