"""Command line front end.

Subcommands cover the two workflows end to end: proxy-search finds a
cheap training scheme, collect/fit/tune/eval build and check surrogate
models, simulate runs zero-cost architecture search against saved
models, and pareto extracts a front from result tables. One TOML config
file drives everything; flags override config values. Outputs are
deterministic, so a rerun with the same config writes identical bytes.

Exit codes: 0 success, 2 config error, 3 infeasible search, 4 I/O or
file format error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from anbkit import archspace, data, optim, proxysearch, surrogate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


class ConfigError(ValueError):
    """The config file or flag values are invalid."""


# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------

def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_float(v):
    return _is_int(v) or isinstance(v, float)


def _is_str(v):
    return isinstance(v, str)


def _list_of(check):
    return lambda v: isinstance(v, list) and all(check(x) for x in v)


_GRID_SCHEMA = {name: _list_of(_is_int)
                for name in proxysearch.SCHEME_FIELDS}

SCHEMA = {
    "space": {"num_blocks": _is_int},
    "oracle": {"noise": _is_float, "seed": _is_int},
    "proxy_search": {"t_spec": _is_float, "n_models": _is_int,
                     "pool": _is_int, "models_seed": _is_int,
                     "seed": _is_int, "grid": _GRID_SCHEMA,
                     "early_stop": {"tau_min": _is_float,
                                    "t_max": _is_float}},
    "collect": {"n": _is_int, "devices": _list_of(_is_str),
                "seed": _is_int},
    "split": {"ratios": _list_of(_is_float), "seed": _is_int},
    "fit": {"dataset": _is_str, "model": _is_str, "n_trees": _is_int,
            "max_depth": _is_int, "learning_rate": _is_float,
            "min_samples_leaf": _is_int, "subsample_rows": _is_float,
            "subsample_features": _is_float, "seed": _is_int},
    "tune": {"dataset": _is_str, "model": _is_str, "budget": _is_int,
             "seed": _is_int},
    "eval": {"dataset": _is_str, "model": _is_str, "split": _is_str},
    "simulate": {"optimizers": _list_of(_is_str), "budget": _is_int,
                 "seeds": _list_of(_is_int), "objective": _is_str,
                 "perf_metric": _is_str, "target": _is_float,
                 "weight": _is_float, "acc_model": _is_str,
                 "perf_model": _is_str, "population": _is_int,
                 "sample": _is_int, "lr": _is_float,
                 "baseline_decay": _is_float},
    "pareto": {"inputs": _list_of(_is_str), "direction": _is_str,
               "out": _is_str},
    "paths": {"out": _is_str},
}


def _check_keys(doc: dict, schema: dict, where: str) -> None:
    for key, value in doc.items():
        if key not in schema:
            raise ConfigError(
                f"unknown config key '{where}{key}'; "
                f"allowed: {', '.join(sorted(schema))}")
        rule = schema[key]
        if isinstance(rule, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {where}{key} must be "
                                  f"a table")
            _check_keys(value, rule, f"{where}{key}.")
        elif not rule(value):
            raise ConfigError(f"config key {where}{key} has wrong type")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    _check_keys(doc, SCHEMA, "")
    return doc


class Run:
    """Resolved config plus the output directory for one invocation."""

    def __init__(self, args):
        self.config = load_config(args.config)
        self.seed_override = args.seed
        self.jobs = args.jobs
        out = args.out or self.config.get("paths", {}).get("out") or "."
        self.out_dir = Path(out)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def section(self, name: str) -> dict:
        return self.config.get(name, {})

    def seed(self, section: dict, key: str = "seed", default: int = 0) -> int:
        if self.seed_override is not None:
            return self.seed_override
        return section.get(key, default)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def space(self) -> archspace.SpaceDef:
        cfg = self.section("space")
        try:
            return archspace.SpaceDef(**cfg)
        except archspace.SpaceError as exc:
            raise ConfigError(f"bad space config: {exc}") from exc

    def oracle(self, space) -> proxysearch.SyntheticTrainerOracle:
        cfg = self.section("oracle")
        noise = cfg.get("noise", proxysearch.DEFAULT_NOISE)
        try:
            return proxysearch.synthetic_oracle(space, noise=noise)
        except ValueError as exc:
            raise ConfigError(f"bad oracle config: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_proxy_search(run: Run, args) -> int:
    cfg = run.section("proxy_search")
    space = run.space()
    oracle = run.oracle(space)
    seed = run.seed(cfg)

    grid_cfg = cfg.get("grid", {})
    try:
        grid = proxysearch.SchemeGrid(**{k: tuple(v)
                                         for k, v in grid_cfg.items()})
    except proxysearch.SchemeError as exc:
        raise ConfigError(f"bad scheme grid: {exc}") from exc

    if args.t_spec is not None:
        t_spec = math.inf if args.t_spec == "inf" else float(args.t_spec)
    else:
        t_spec = float(cfg.get("t_spec", 3.0))

    models = archspace.uniform_grid(space, cfg.get("n_models", 20),
                                    cfg.get("pool", 2000),
                                    cfg.get("models_seed", 42))
    ref_accs = [oracle.evaluate(a, proxysearch.REFERENCE_SCHEME, seed)[0]
                for a in models]
    result = proxysearch.grid_search(grid, models, ref_accs, oracle,
                                     t_spec, early_stop=cfg.get("early_stop"),
                                     seed=seed, jobs=run.jobs)
    gain = proxysearch.speedup(result.best_scheme,
                               proxysearch.REFERENCE_SCHEME, models, oracle,
                               seed=seed)
    proxysearch.write_report(result, run.path("proxy_search.csv"),
                             run.path("proxy_search.json"),
                             speedup_vs_reference=gain)
    best = result.best_scheme
    print(f"best scheme: b={best.b} e_t={best.e_t} e_s={best.e_s} "
          f"e_f={best.e_f} res_s={best.res_s} res_f={best.res_f} "
          f"tau={result.tau:.4f} t_p={result.t_p:.3f}h "
          f"speedup={gain:.2f}x")
    return EXIT_OK


def cmd_collect(run: Run, args) -> int:
    cfg = run.section("collect")
    space = run.space()
    oracle_seed = run.section("oracle").get("seed", 0)
    oracles = data.default_oracles(space, cfg.get("devices", ("A100", "ZCU")),
                                   seed=oracle_seed)
    n = cfg.get("n", 100)
    datasets = data.collect(space, n, oracles, run.seed(cfg))
    for name, ds in sorted(datasets.items()):
        path = run.path(f"{name}.jsonl")
        data.save_dataset(ds, path)
        print(f"wrote {path} ({len(ds.records)} records)")
    return EXIT_OK


def _load_split_matrices(run: Run, dataset_name: str):
    space = run.space()
    ds = data.load_dataset(run.path(dataset_name))
    split_cfg = run.section("split")
    assignment = data.split(ds, split_cfg.get("ratios", (0.8, 0.1, 0.1)),
                            split_cfg.get("seed", 1))
    matrices = {tag: data.design_matrix(ds, space, assignment, tag)
                for tag in ("train", "val", "test")}
    return ds, matrices


def _metric_report(model, matrices, tag: str) -> dict:
    X, y = matrices[tag]
    return surrogate.evaluate(model, X, y)


def _dataset_and_model(cfg: dict, args, command: str) -> tuple[str, str]:
    dataset = args.dataset or cfg.get("dataset")
    if dataset is None:
        raise ConfigError(f"{command} needs a dataset ([{command}].dataset "
                          f"or --dataset)")
    model = args.model or cfg.get("model", "model.json")
    return dataset, model


def cmd_fit(run: Run, args) -> int:
    cfg = run.section("fit")
    dataset, model_name = _dataset_and_model(cfg, args, "fit")
    ds, matrices = _load_split_matrices(run, dataset)
    fit_keys = {k: v for k, v in cfg.items() if k not in ("dataset", "model")}
    if run.seed_override is not None:
        fit_keys["seed"] = run.seed_override
    try:
        config = surrogate.FitConfig(**fit_keys)
    except ValueError as exc:
        raise ConfigError(f"bad fit config: {exc}") from exc
    X, y = matrices["train"]
    model = surrogate.fit(X, y, config, metric_name=ds.metric)
    surrogate.save(model, run.path(model_name))
    report = _metric_report(model, matrices, "test")
    run.path("fit_metrics.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_tune(run: Run, args) -> int:
    cfg = run.section("tune")
    dataset, model_name = _dataset_and_model(cfg, args, "tune")
    ds, matrices = _load_split_matrices(run, dataset)
    budget = cfg.get("budget", 8)
    rng = np.random.default_rng(run.seed(cfg, default=1))
    Xt, yt = matrices["train"]
    Xv, yv = matrices["val"]
    try:
        config, val_tau = surrogate.tune(Xt, yt, Xv, yv, budget, rng)
    except ValueError as exc:
        raise ConfigError(f"bad tune config: {exc}") from exc
    model = surrogate.fit(Xt, yt, config, metric_name=ds.metric)
    surrogate.save(model, run.path(model_name))
    report = _metric_report(model, matrices, "test")
    summary = {"config": {f: getattr(config, f)
                          for f in ("n_trees", "max_depth", "learning_rate",
                                    "min_samples_leaf", "subsample_rows",
                                    "subsample_features", "seed")},
               "val_tau": val_tau, "test": report}
    run.path("tune_metrics.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_eval(run: Run, args) -> int:
    cfg = run.section("eval")
    dataset, model_name = _dataset_and_model(cfg, args, "eval")
    tag = args.split or cfg.get("split", "test")
    if tag not in ("train", "val", "test"):
        raise ConfigError(f"unknown split {tag!r}")
    ds, matrices = _load_split_matrices(run, dataset)
    model = surrogate.load(run.path(model_name))
    report = _metric_report(model, matrices, tag)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _surrogate_evaluator(space, acc_model, perf_model=None):
    def uni(arch):
        return acc_model.predict(archspace.encode(space, arch))

    if perf_model is None:
        return uni

    def bi(arch):
        features = archspace.encode(space, arch)
        return (acc_model.predict(features), perf_model.predict(features))

    return bi


def cmd_simulate(run: Run, args) -> int:
    cfg = run.section("simulate")
    space = run.space()
    if "acc_model" not in cfg:
        raise ConfigError("simulate needs [simulate].acc_model")
    acc_model = surrogate.load(run.path(cfg["acc_model"]))

    mode = cfg.get("objective", "accuracy")
    perf_model = None
    if mode == "bi":
        if "perf_model" not in cfg:
            raise ConfigError("bi-objective simulate needs "
                              "[simulate].perf_model")
        perf_model = surrogate.load(run.path(cfg["perf_model"]))
    try:
        objective = optim.Objective(mode=mode,
                                    perf_metric=cfg.get("perf_metric",
                                                        "throughput"),
                                    target=cfg.get("target", 1.0),
                                    weight=cfg.get("weight", 0.0))
    except optim.ObjectiveError as exc:
        raise ConfigError(str(exc)) from exc

    evaluator = _surrogate_evaluator(space, acc_model, perf_model)
    budget = cfg.get("budget", 2000)
    seeds = cfg.get("seeds", list(optim.DEFAULT_SEEDS))
    if run.seed_override is not None:
        seeds = [run.seed_override]
    optimizers = cfg.get("optimizers", list(optim.OPTIMIZERS))

    kwargs_by_name = {
        "regularized-evolution": {
            k: cfg[ck] for k, ck in (("population", "population"),
                                     ("sample", "sample")) if ck in cfg},
        "reinforce": {
            k: cfg[ck] for k, ck in (("lr", "lr"),
                                     ("baseline_decay", "baseline_decay"))
            if ck in cfg},
        "random-search": {},
    }

    all_rows = []
    for name in optimizers:
        if name not in optim.OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {name!r}; choose from "
                              f"{', '.join(sorted(optim.OPTIMIZERS))}")
        try:
            result = optim.simulate_runs(name, space, evaluator, budget,
                                         seeds=seeds, objective=objective,
                                         **kwargs_by_name[name])
        except (ValueError, optim.ObjectiveError) as exc:
            raise ConfigError(f"simulate {name}: {exc}") from exc
        for trajectory in result.trajectories:
            optim.write_trajectory(
                trajectory, run.path(f"trajectory_{name}_"
                                     f"seed{trajectory.seed}.csv"))
            if mode == "bi":
                all_rows.extend((str(s.arch), s.accuracy, s.perf)
                                for s in trajectory.steps)
        optim.write_aggregate(result, run.path(f"aggregate_{name}.csv"))
        print(f"{name}: mean final incumbent "
              f"{float(result.mean_incumbent[-1]):.6f}")

    if mode == "bi":
        direction = "min" if objective.perf_metric == "latency" else "max"
        table = optim.pareto_table(all_rows, direction)
        optim.write_pareto(table, run.path("pareto.csv"))
        print(f"pareto front: {len(table)} points")
    return EXIT_OK


def _read_points_csv(path) -> list[tuple[str, float, float]]:
    import csv as _csv

    rows = []
    with open(path, newline="") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is None or "arch" not in reader.fieldnames:
            raise data.DatasetError(f"{path}: no arch column")
        acc_col = "accuracy"
        if acc_col not in reader.fieldnames:
            raise data.DatasetError(f"{path}: no accuracy column")
        for line in reader:
            perf = line.get("perf", "")
            if perf in ("", None):
                continue
            rows.append((line["arch"], float(line[acc_col]), float(perf)))
    return rows


def cmd_pareto(run: Run, args) -> int:
    cfg = run.section("pareto")
    inputs = args.inputs or cfg.get("inputs")
    if not inputs:
        raise ConfigError("pareto needs input CSVs ([pareto].inputs "
                          "or positional arguments)")
    direction = cfg.get("direction", "max")
    if direction not in ("max", "min"):
        raise ConfigError(f"bad pareto direction {direction!r}")
    rows = []
    for name in inputs:
        rows.extend(_read_points_csv(run.path(name)))
    if not rows:
        raise data.DatasetError("input files contain no (arch, accuracy, "
                                "perf) rows")
    table = optim.pareto_table(rows, direction)
    out = run.path(cfg.get("out", "pareto.csv"))
    optim.write_pareto(table, out)
    print(f"wrote {out} ({len(table)} points)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="TOML config file")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the command's primary seed")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (default: config "
                             "[paths].out or '.')")
    common.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="parallel workers where supported")

    parser = argparse.ArgumentParser(
        prog="anbkit",
        description="Surrogate benchmarks and zero-cost architecture "
                    "search utilities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("proxy-search", parents=[common],
                       help="grid-search cheap training schemes")
    p.add_argument("--t-spec", metavar="HOURS",
                   help="time budget in hours, or 'inf'")
    p.set_defaults(func=cmd_proxy_search)

    p = sub.add_parser("collect", parents=[common],
                       help="sample architectures and write metric datasets")
    p.set_defaults(func=cmd_collect)

    model_io = argparse.ArgumentParser(add_help=False)
    model_io.add_argument("--dataset", metavar="FILE",
                          help="dataset file, relative to the output dir")
    model_io.add_argument("--model", metavar="FILE",
                          help="model file, relative to the output dir")

    p = sub.add_parser("fit", parents=[common, model_io],
                       help="fit a surrogate on a dataset's train split")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tune", parents=[common, model_io],
                       help="random-search surrogate hyperparameters")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", parents=[common, model_io],
                       help="score a saved model on a dataset split")
    p.add_argument("--split", choices=("train", "val", "test"),
                   help="which split to score (default from config)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", parents=[common],
                       help="run seeded search over saved surrogates")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pareto", parents=[common],
                       help="extract a Pareto front from result CSVs")
    p.add_argument("inputs", nargs="*", metavar="CSV",
                   help="input CSVs with arch, accuracy, perf columns")
    p.set_defaults(func=cmd_pareto)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = Run(args)
        return args.func(run, args)
    except proxysearch.InfeasibleGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, proxysearch.SchemeError, optim.ObjectiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, OSError, data.DatasetError,
            surrogate.ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (archspace.SpaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())
