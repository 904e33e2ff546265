"""Command-line interface: ``rrmkrr {fit,predict,tune,simulate}``.

Every artifact embeds the fully resolved configuration; passing an artifact
back through ``--config`` re-runs the command that produced it. Precedence
is built-in defaults < config file < explicit flags.

Exit codes: 0 success, 2 usage error, 3 data or parse error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .kernel import KernelSpec, UnsupportedOrderError
from .nuclear import SolverOptions, fit_relaxed
from .reduced_rank import fit_hard_rank
from .ridge import Dataset, FittedModel, NumericalError, fit_elementwise, predict, training_objective
from .simulate import SimConfig, run_experiment
from .tuning import TuneGrid, default_grid, gcv_univariate, normalize_method, tune_validation

log = logging.getLogger("rrmkrr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS: dict[str, dict[str, Any]] = {
    "fit": {
        "method": "elementwise", "nu": None, "d": None, "lambda": None, "lambda1": None,
        "lambda2": 0.0, "r1": None, "tol": 1e-8, "max_iters": 5000, "starts": 1,
        "solver": "admm", "seed": 0,
    },
    "predict": {},
    "tune": {
        "method": "elementwise", "nu": None, "d": None, "valid": None, "gcv": False,
        "lambdas": None, "r1_values": None, "lambda2s": None, "tol": 1e-8,
        "max_iters": 5000, "starts": 1, "solver": "admm", "seed": 0,
    },
    "simulate": {
        "d": 1, "r": 2, "s": None, "p": 10, "n": 20, "noise_sd": 0.1, "seed": 0,
        "n_test": 200, "replicates": 1, "methods": "elementwise,hard_rank,relaxed",
        "nu": None, "fixed_loading": False, "summary": None, "tol": 1e-8,
        "max_iters": 5000, "solver": "admm",
    },
}
REQUIRED = {
    "fit": ("train", "out"),
    "predict": ("model", "input", "out"),
    "tune": ("train", "out"),
    "simulate": ("out",),
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# --- file formats ---------------------------------------------------------

def read_csv_matrix(path) -> tuple[list[str], np.ndarray]:
    """Read a headed, comma-separated numeric table."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return [], np.zeros((0, 0))
    header = [h.strip() for h in rows[0]]
    if not header or any(h == "" for h in header):
        raise DataError(f"{path}: line 1: header row has empty column names")
    try:
        float(header[0])
    except ValueError:
        pass
    else:
        raise DataError(f"{path}: line 1: expected a header row, found numbers")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from exc
        if not all(np.isfinite(vals)):
            raise DataError(f"{path}: line {lineno}: non-finite value")
        data.append(vals)
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return header, arr


def infer_input_dim(header: list[str], d: int | None) -> int:
    """Explicit ``d`` wins; otherwise count leading ``x``-prefixed columns (at least 1)."""
    if d is not None:
        if not 1 <= d < len(header):
            raise UsageError(f"--d {d} leaves no response columns in a {len(header)}-column file")
        return d
    lead = 0
    for name in header:
        if name.lower().startswith("x"):
            lead += 1
        else:
            break
    return min(max(lead, 1), len(header) - 1) if len(header) > 1 else 1


def load_dataset(path, d: int | None) -> Dataset:
    header, arr = read_csv_matrix(path)
    if len(header) < 2:
        raise DataError(f"{path}: need at least one input and one response column")
    if arr.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    d = infer_input_dim(header, d)
    return Dataset(arr[:, :d], arr[:, d:])


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"


def provenance(command: str, config: dict[str, Any]) -> dict[str, Any]:
    return {"tool": "rrmkrr", "version": __version__, "command": command, "config": config}


# --- config resolution ----------------------------------------------------

def load_config_file(path) -> dict[str, Any]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataError(f"config {path} must be a JSON object")
    # artifacts carry their config under "provenance"
    if "provenance" in doc and isinstance(doc["provenance"], dict):
        doc = doc["provenance"].get("config", {})
    return dict(doc)


def resolve(command: str, args: argparse.Namespace) -> dict[str, Any]:
    config = dict(DEFAULTS[command])
    if args.config is not None:
        file_cfg = load_config_file(args.config)
        unknown = set(file_cfg) - set(config) - set(REQUIRED[command]) - {"summary"}
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        config.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("command", "config", "func", "verbose") or value is None:
            continue
        config[key] = value
    missing = [k for k in REQUIRED[command] if config.get(k) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return config


def _float_list(text, name):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--{name}: {exc}") from exc


def _kernel(nu, d: int) -> KernelSpec:
    try:
        return KernelSpec.default(d) if nu is None else KernelSpec(nu=float(nu), dim=d)
    except (UnsupportedOrderError, ValueError) as exc:
        raise UsageError(f"--nu: {exc}") from exc


def _solver_opts(cfg) -> SolverOptions:
    try:
        return SolverOptions(
            tol=float(cfg["tol"]), max_iters=int(cfg["max_iters"]),
            starts=int(cfg.get("starts", 1)), seed=int(cfg.get("seed", 0)),
            solver=cfg.get("solver", "admm"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# --- commands -------------------------------------------------------------

def cmd_fit(cfg: dict[str, Any]) -> int:
    try:
        method = normalize_method(cfg["method"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = load_dataset(cfg["train"], cfg["d"])
    spec = _kernel(cfg["nu"], data.d)
    lam, lam1 = cfg["lambda"], cfg["lambda1"]
    if lam is None and lam1 is None:
        raise UsageError("one of --lambda or --lambda1 is required")
    lam = float(lam) if lam is not None else data.p * float(lam1)
    if not lam > 0:
        raise UsageError("--lambda must be positive")
    report = None
    if method == "elementwise":
        model = fit_elementwise(data, spec, lam)
    elif method == "hard_rank":
        r1 = cfg["r1"]
        if r1 is None or int(r1) != r1 or not 1 <= int(r1) <= data.p:
            raise UsageError(f"--r1 must be an integer in [1, {data.p}], got {r1}")
        model = fit_hard_rank(data, spec, lam, int(r1))
    else:
        lam2 = float(cfg["lambda2"])
        if lam2 < 0:
            raise UsageError("--lambda2 must be non-negative")
        model, report = fit_relaxed(data, spec, lam / data.p, lam2, _solver_opts(cfg))
    doc = model.to_dict()
    objective = report.final_objective if report else training_objective(model, data)
    doc["training_objective"] = objective
    if report is not None:
        doc["solver"] = {
            "iterations": report.iterations, "stop_reason": report.stop_reason,
            "effective_rank": report.effective_rank, "gap": report.gap,
        }
    doc["provenance"] = provenance("fit", cfg)
    atomic_write(cfg["out"], dump_json(doc))
    print(f"training objective: {objective:.10g}")
    print(f"effective rank: {model.rank}")
    return EXIT_OK


def load_model(path) -> FittedModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    try:
        return FittedModel.from_json(text)
    except (json.JSONDecodeError, ValueError) as exc:
        raise DataError(f"model {path} could not be parsed: {exc}") from exc


def cmd_predict(cfg: dict[str, Any]) -> int:
    model = load_model(cfg["model"])
    header, X = read_csv_matrix(cfg["input"])
    d = model.kernel.dim
    if header and len(header) != d:
        raise DataError(f"input has {len(header)} columns but the model expects d = {d}")
    X = X.reshape(-1, d) if X.size else np.zeros((0, d))
    Yhat = predict(model, X)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"out_{k + 1}" for k in range(model.p)])
    for row in Yhat:
        writer.writerow([repr(float(v)) for v in row])
    atomic_write(cfg["out"], buf.getvalue())
    atomic_write(meta_path(cfg["out"]), dump_json({"rows": int(Yhat.shape[0]),
                                                   "provenance": provenance("predict", cfg)}))
    return EXIT_OK


def meta_path(out) -> Path:
    """Sidecar holding the provenance of a CSV artifact."""
    return Path(str(out) + ".meta.json")


def cmd_tune(cfg: dict[str, Any]) -> int:
    try:
        method = normalize_method(cfg["method"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    train = load_dataset(cfg["train"], cfg["d"])
    spec = _kernel(cfg["nu"], train.d)
    base = default_grid(train.p, method)
    lambdas = _float_list(cfg["lambdas"], "lambdas")
    r1s = _float_list(cfg["r1_values"], "r1-values")
    l2s = _float_list(cfg["lambda2s"], "lambda2s")
    try:
        if cfg["gcv"]:
            if train.p != 1:
                raise UsageError("--gcv needs a single response column")
            result = gcv_univariate(train, spec, lambdas if lambdas is not None else base.lambdas)
        else:
            if cfg["valid"] is None:
                raise UsageError("--valid is required unless --gcv is given for p = 1")
            valid = load_dataset(cfg["valid"], train.d)
            grid = TuneGrid(
                lambdas if lambdas is not None else base.lambdas,
                r1_values=r1s if r1s is not None else base.r1_values,
                lambda2s=l2s if l2s is not None else base.lambda2s,
            )
            result = tune_validation(train, valid, spec, grid, method, _solver_opts(cfg))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = result.to_dict()
    doc["provenance"] = provenance("tune", cfg)
    atomic_write(cfg["out"], dump_json(doc))
    print(f"best: {json.dumps(result.best_params)} (score {result.best_score:.6g})")
    return EXIT_OK


def cmd_simulate(cfg: dict[str, Any]) -> int:
    methods = [m.strip() for m in str(cfg["methods"]).split(",") if m.strip()]
    try:
        sim = SimConfig(
            d=int(cfg["d"]), r=int(cfg["r"]), p=int(cfg["p"]), n=int(cfg["n"]),
            s=None if cfg["s"] is None else int(cfg["s"]), noise_sd=float(cfg["noise_sd"]),
            seed=int(cfg["seed"]), n_test=int(cfg["n_test"]), replicates=int(cfg["replicates"]),
            methods=tuple(methods), nu=None if cfg["nu"] is None else float(cfg["nu"]),
            fixed_loading=bool(cfg["fixed_loading"]),
        )
        sim.kernel
        opts = SolverOptions(tol=float(cfg["tol"]), max_iters=int(cfg["max_iters"]),
                             solver=cfg["solver"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_experiment(sim, opts)
    summary_path = cfg["summary"] or str(Path(cfg["out"]).with_suffix(".json"))
    summary = result.summary()
    summary["provenance"] = provenance("simulate", cfg)
    atomic_write(cfg["out"], result.to_csv())
    atomic_write(summary_path, dump_json(_jsonable(summary)))
    for m, v in result.medians.items():
        print(f"median l2 error {m}: {v:.6g}")
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


# --- argument parsing -----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rrmkrr", description="Reduced-rank multivariate kernel ridge regression.")
    parser.add_argument("--version", action="version", version=f"rrmkrr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def shared(p, method=True):
        p.add_argument("--config", help="JSON config file or a previously written artifact")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int)
        p.add_argument("--nu", type=float, help="Matern smoothness (default 3.5 + d/2)")
        if method:
            p.add_argument("--method", choices=["elementwise", "hard_rank", "relaxed"])
        p.add_argument("-v", "--verbose", action="store_true")

    def solver(p):
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iters", type=int, dest="max_iters")
        p.add_argument("--starts", type=int)
        p.add_argument("--solver", choices=["admm", "apg"])

    fit = sub.add_parser("fit", help="fit a model from a training CSV")
    shared(fit)
    solver(fit)
    fit.add_argument("--train", help="CSV: header, d input columns then p responses")
    fit.add_argument("--d", type=int, help="number of input columns")
    fit.add_argument("--lambda", type=float, dest="lambda", help="ridge parameter in K + n*lambda*I")
    fit.add_argument("--lambda1", type=float, help="objective weight; lambda = p * lambda1")
    fit.add_argument("--lambda2", type=float, help="nuclear-norm weight (relaxed)")
    fit.add_argument("--r1", type=int, help="rank bound (hard_rank)")

    pred = sub.add_parser("predict", help="evaluate a model file on new inputs")
    pred.add_argument("--config")
    pred.add_argument("--out")
    pred.add_argument("--model")
    pred.add_argument("--input", help="CSV with header and d input columns")
    pred.add_argument("-v", "--verbose", action="store_true")

    tune = sub.add_parser("tune", help="select hyperparameters on a validation set or by GCV")
    shared(tune)
    solver(tune)
    tune.add_argument("--train")
    tune.add_argument("--valid")
    tune.add_argument("--d", type=int)
    tune.add_argument("--gcv", action="store_true", default=None)
    tune.add_argument("--lambdas", help="comma-separated lambda grid")
    tune.add_argument("--r1-values", dest="r1_values", help="comma-separated r1 grid")
    tune.add_argument("--lambda2s", help="comma-separated lambda2 grid")

    sim = sub.add_parser("simulate", help="run the low-rank simulation study")
    shared(sim, method=False)
    sim.add_argument("--solver", choices=["admm", "apg"])
    sim.add_argument("--tol", type=float)
    sim.add_argument("--max-iters", type=int, dest="max_iters")
    for name in ("d", "r", "s", "p", "n", "replicates"):
        sim.add_argument(f"--{name}", type=int)
    sim.add_argument("--n-test", type=int, dest="n_test")
    sim.add_argument("--noise-sd", type=float, dest="noise_sd")
    sim.add_argument("--methods", help="comma-separated subset of elementwise,hard_rank,relaxed")
    sim.add_argument("--fixed-loading", action="store_true", default=None, dest="fixed_loading")
    sim.add_argument("--summary", help="summary JSON path (default: --out with .json suffix)")
    return parser


COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "tune": cmd_tune, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
