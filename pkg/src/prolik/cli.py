"""Command-line interface: ``prolik <command> [options]``.

Every command writes a JSON report (``schema: 1``) to stdout or ``--out``;
``--format csv`` writes a flat table instead. Exit codes: 0 success,
1 error, 2 finished with warnings.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib.resources import files

import numpy as np

from . import __version__, mcmc, oracle, tracers
from .errors import (EmptyDataError, ProlikError, SchemaError, UnsupportedModelError)
from .models import (GevRegressionSpec, LinearGaussianSpec, build_gev_regression, build_iid_gev,
                     build_linear_gaussian)
from .numerics import deviance_threshold
from .optimizer import delta_interval, fit_mle, profile_bound
from .targets import CoordinateTarget, LinearTarget, ReturnLevelTarget

SCHEMA = 1
BUILTIN_VENICE = "builtin:venice"
VENICE_NOTE = ("Venice sea-level annual maxima 1931-1981 (51 years), largest value per year "
               "(column r1), converted from cm to m.")


# ---------------------------------------------------------------------- ingestion


@dataclass
class Dataset:
    name: str
    columns: dict
    provenance: str = ""
    dropped: int = 0

    @property
    def n(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0


def _open_source(path):
    if path in (None, BUILTIN_VENICE):
        return io.StringIO(files("prolik").joinpath("data/venice.csv").read_text("utf-8")), \
            BUILTIN_VENICE, VENICE_NOTE
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return io.StringIO(text), os.path.basename(path), ""


def load_csv(path, columns):
    """Read the named numeric columns; rows with unparseable cells are dropped."""
    fh, name, note = _open_source(path)
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyDataError(f"{name}: file is empty") from None
    missing = [c for c in columns if c not in header]
    if missing:
        raise SchemaError(f"{name}: missing column(s) {', '.join(missing)}; have {', '.join(header)}")
    idx = [header.index(c) for c in columns]
    data = {c: [] for c in columns}
    dropped = 0
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            vals = [float(row[i]) for i in idx]
        except (ValueError, IndexError):
            dropped += 1
            continue
        if not all(math.isfinite(v) for v in vals):
            dropped += 1
            continue
        for c, v in zip(columns, vals):
            data[c].append(v)
    if not data[columns[0]]:
        raise EmptyDataError(f"{name}: no usable rows")
    return Dataset(name, {c: np.array(v) for c, v in data.items()}, note, dropped)


def parse_formula(text):
    """``"1 + x + z"`` -> (intercept, ["x", "z"]); only intercept and column names."""
    terms = [t.strip() for t in text.split("+")]
    if any(not t for t in terms):
        raise SchemaError(f"malformed formula {text!r}")
    intercept = "1" in terms
    cols = [t for t in terms if t != "1"]
    for c in cols:
        if not c.replace("_", "").replace(".", "").isalnum():
            raise SchemaError(f"formula terms must be column names, got {c!r}")
    if not intercept and not cols:
        raise SchemaError("formula has no terms")
    return intercept, cols


def parse_periods(text):
    """``"2:1000:log"`` (optionally ``:n``) or a comma-separated list."""
    parts = text.split(":")
    if len(parts) == 1:
        vals = np.array([float(v) for v in text.split(",")])
    else:
        if len(parts) not in (3, 4) or parts[2] not in ("log", "lin"):
            raise SchemaError(f"periods must look like 2:1000:log[:n], got {text!r}")
        a, b = float(parts[0]), float(parts[1])
        n = int(parts[3]) if len(parts) == 4 else 50
        vals = np.geomspace(a, b, n) if parts[2] == "log" else np.linspace(a, b, n)
    if np.any(vals <= 1.0) or np.any(np.diff(vals) <= 0):
        raise SchemaError("return periods must exceed 1 and increase")
    return vals


# -------------------------------------------------------------------------- model


@dataclass
class Problem:
    model: object
    dataset: Dataset
    spec: dict
    covariates: dict = field(default_factory=dict)  # formula columns per parameter


def _design(ds, formula, time_unit):
    intercept, cols = parse_formula(formula)
    n = ds.n
    mats = ([np.ones(n)] if intercept else []) + [ds.columns[c] / time_unit for c in cols]
    names = (["1"] if intercept else []) + cols
    return np.column_stack(mats), names


def build_problem(args):
    if args.model == "gev":
        ds = load_csv(args.data, [args.column])
        model = build_iid_gev(ds.columns[args.column])
        spec = {"model": "gev", "column": args.column}
        return Problem(model, ds, spec)
    if args.model == "gev-reg":
        forms = {"mu": args.loc, "sigma": args.scale, "xi": args.shape}
        needed = [args.column]
        for f in forms.values():
            needed += [c for c in parse_formula(f)[1] if c not in needed]
        ds = load_csv(args.data, needed)
        designs, cols = {}, {}
        for k, f in forms.items():
            designs[k], cols[k] = _design(ds, f, args.time_unit)
        spec = GevRegressionSpec(ds.columns[args.column], designs["mu"], designs["sigma"],
                                 designs["xi"], args.scale_link, cols["mu"], cols["sigma"],
                                 cols["xi"])
        model = build_gev_regression(spec, standardize=not args.no_standardize)
        out = {"model": "gev-reg", "column": args.column, "loc": args.loc, "scale": args.scale,
               "shape": args.shape, "scale_link": args.scale_link, "time_unit": args.time_unit,
               "standardize": not args.no_standardize}
        return Problem(model, ds, out, cols)
    if args.model == "linreg":
        intercept, xcols = parse_formula(args.x)
        ds = load_csv(args.data, [args.column] + [c for c in xcols if c != args.column])
        X, names = _design(ds, args.x, args.time_unit)
        model = build_linear_gaussian(LinearGaussianSpec(X, ds.columns[args.column],
                                                         args.variance, names))
        spec = {"model": "linreg", "column": args.column, "x": args.x, "variance": args.variance,
                "time_unit": args.time_unit}
        return Problem(model, ds, spec, {"x": names})
    raise SchemaError(f"unknown model {args.model!r}")


def _resolve_param(model, name):
    names = list(model.raw_names)
    if name not in names and f"{name}_1" in names:
        name = f"{name}_1"
    if name not in names and f"theta_{name}" in names:
        name = f"theta_{name}"
    if name not in names:
        raise SchemaError(f"unknown parameter {name!r}; choose from {', '.join(names)}")
    j = names.index(name)
    T = model.raw_transform
    if np.array_equal(T, np.eye(model.p)):
        return CoordinateTarget(j, model.p, label=name), name
    return LinearTarget(T[j], label=name), name


def _parse_at(text):
    out = {}
    if text:
        for item in text.split(","):
            k, _, v = item.partition("=")
            if not _:
                raise SchemaError(f"--at expects col=value pairs, got {item!r}")
            out[k.strip()] = float(v)
    return out


def return_level_target(problem, args, s=None):
    model = problem.model
    if not hasattr(model, "gev_map"):
        raise UnsupportedModelError("return levels need a GEV model")
    at = _parse_at(args.at)
    M_raw = np.zeros((3, model.p))
    for a, key in enumerate(("mu", "sigma", "xi")):
        cols = problem.covariates.get(key, ["1"])
        row = []
        for c in cols:
            if c == "1":
                row.append(1.0)
            elif c in at:
                row.append(at[c] / args.time_unit)
            else:
                # default: the last observed covariate row
                row.append(problem.dataset.columns[c][-1] / args.time_unit)
        M_raw[a, model.slices[a]] = row
    M = M_raw @ model.raw_transform
    return ReturnLevelTarget(M, log_scale=model.scale_link == "log", s=s)


def _scalar_target(problem, args):
    if args.param and args.return_period:
        raise SchemaError("give either --param or --return-period, not both")
    if args.return_period:
        if not args.return_period > 1:
            raise SchemaError("return period must exceed 1")
        tg = return_level_target(problem, args, s=math.log(args.return_period))
        return tg, f"return_level_{args.return_period:g}"
    if not args.param:
        raise SchemaError("a target is required: --param NAME or --return-period T")
    return _resolve_param(problem.model, args.param)


# ------------------------------------------------------------------------ commands


def _fit(problem):
    return fit_mle(problem.model)


def _fit_payload(problem, fit):
    model = problem.model
    T = model.raw_transform
    cov = T @ np.linalg.inv(fit.neg_hessian) @ T.T
    return {"names": list(model.raw_names), "estimate": model.to_raw(fit.theta_hat),
            "std_error": np.sqrt(np.diag(cov)), "loglik_max": fit.loglik_max,
            "iterations": fit.iterations, "converged": fit.converged,
            "grad_norm": fit.grad_norm}


def cmd_fit(problem, args, ctx):
    fit = _fit(problem)
    payload = _fit_payload(problem, fit)
    rows = [(n, e, s) for n, e, s in zip(payload["names"], payload["estimate"],
                                         payload["std_error"])]
    return payload, ("name", "estimate", "std_error"), rows


def _bound_payload(b):
    return {"value": b.value, "theta": b.theta, "nu": b.nu, "kkt_residual": b.kkt_residual,
            "constraint_residual": b.constraint_residual, "converged": b.converged,
            "iterations": b.iterations}


def _mcmc_trace(problem, args, fit, ctx):
    if args.trace:
        tr = mcmc.read_trace_csv(args.trace, problem.model, args.recompute_loglik)
        if tr.iterates.shape[1] != problem.model.p:
            raise SchemaError("trace dimension does not match the model")
        return tr
    return mcmc.rw_metropolis(problem.model, fit.theta_hat, args.K, seed=ctx["seed"])


def cmd_ci(problem, args, ctx):
    model = problem.model
    fit = _fit(problem)
    target, label = _scalar_target(problem, args)
    delta = deviance_threshold(args.level, 1)
    estimate = target.value(fit.theta_hat)
    sides = ("lower", "upper")
    diag = {}
    if args.method == "optim":
        bounds = _map(ctx, lambda sd: profile_bound(model, target, fit, delta, sd), sides)
        for sd, b in zip(sides, bounds):
            diag[sd] = _bound_payload(b)
            if not b.converged:
                ctx["warnings"].append(f"{sd} bound did not meet the KKT tolerance")
        lo, hi = (b.value for b in bounds)
    elif args.method == "naive":
        res = _map(ctx, lambda sd: oracle.naive_bound_detail(model, fit, target, delta, sd), sides)
        for sd, r in zip(sides, res):
            diag[sd] = {"value": r.value, "theta": r.theta, "threshold_residual": r.residual,
                        "evaluations": r.evaluations, "unconverged_inner": r.unconverged,
                        "converged": r.converged}
            if not r.converged:
                ctx["warnings"].append(
                    f"naive {sd} bound unreliable: {r.unconverged} inner fits failed, "
                    f"threshold residual {r.residual:.3e}")
        lo, hi = (r.value for r in res)
    elif args.method == "bubble":
        res = _map(ctx, lambda sg: tracers.trace_bubble(model, target, fit, delta, sg,
                                                        delta1=args.delta1), (-1, 1))
        vals = []
        for sd, r in zip(sides, res):
            d = {"status": r.status, "steps": len(r.path.times) if r.path is not None else 0,
                 "level_consumption_error": r.level_consumption, "delta1": r.delta1}
            if r.bound is not None:
                d.update(_bound_payload(r.bound))
                vals.append(r.bound.value)
            else:
                vals.append(None)
                ctx["warnings"].append(f"bubble {sd} path stopped before the target level")
            diag[sd] = d
        lo, hi = vals
    elif args.method == "mcmc":
        tr = _mcmc_trace(problem, args, fit, ctx)
        lo, hi, nfeas = mcmc.mcmc_interval(tr, target.value, delta)
        diag = {"iterates": tr.size, "feasible": nfeas, "acceptance_rate": tr.acceptance_rate,
                "source": tr.source, "burn_in": tr.burn_in}
    else:
        raise SchemaError(f"unknown method {args.method!r}")
    wald = delta_interval(model, target, fit, args.level)
    payload = {"target": label, "method": args.method, "level": args.level, "delta": delta,
               "estimate": estimate, "lower": lo, "upper": hi, "wald": list(wald),
               "fit": _fit_payload(problem, fit), "bounds": diag}
    return payload, ("target", "lower", "upper"), [(label, lo, hi)]


def cmd_rlband(problem, args, ctx):
    model = problem.model
    fit = _fit(problem)
    periods = parse_periods(args.periods)
    s = np.log(periods)
    target = return_level_target(problem, args)
    delta = deviance_threshold(args.level, 1)
    sides = ("lower", "upper")
    if args.method == "ode":
        bands = _map(ctx, lambda sd: tracers.trace_band(model, target, fit, delta, sd, s), sides)
    elif args.method == "optim":
        bands = _map(ctx, lambda sd: tracers.trace_band_pointwise(model, target, fit, delta, sd, s),
                     sides)
    else:
        raise SchemaError(f"unknown band method {args.method!r}")
    est = np.array([target.value(fit.theta_hat, si) for si in s])
    out = {}
    for sd, b in zip(sides, bands):
        out[sd] = {"eta": b.eta, "theta": b.theta, "nu": b.nu,
                   "constraint_residual": b.constraint_residual, "status": b.status,
                   "halt_reason": b.halt_reason,
                   "steps": len(b.path.times) if b.path is not None else len(s)}
        if b.status != "ok":
            ctx["warnings"].append(f"{sd} band halted: {b.halt_reason}")
    for sd in sides:
        e = out[sd]["eta"]
        if np.any(np.diff(e[np.isfinite(e)]) < -1e-9 * (1 + np.abs(e[np.isfinite(e)][:-1]))):
            ctx["warnings"].append(f"{sd} band is not monotone in the return period")
    payload = {"method": args.method, "level": args.level, "delta": delta, "periods": periods,
               "log_periods": s, "estimate": est, "lower": out["lower"]["eta"],
               "upper": out["upper"]["eta"], "paths": out, "fit": _fit_payload(problem, fit)}
    rows = list(zip(periods, out["lower"]["eta"], out["upper"]["eta"]))
    return payload, ("period", "lower", "upper"), rows


def cmd_contour(problem, args, ctx):
    model = problem.model
    fit = _fit(problem)
    names = [n.strip() for n in args.pair.split(",")]
    if len(names) != 2:
        raise SchemaError("--pair takes two parameter names")
    if not np.array_equal(model.raw_transform, np.eye(model.p)):
        raise UnsupportedModelError("contours are computed for unstandardised models only; "
                                    "pass --no-standardize")
    idx = [_resolve_param(model, n)[0].index for n in names]
    res = tracers.trace_contour(model, fit, tuple(idx), args.level, n_points=args.points,
                                jobs=ctx["jobs"])
    ctx["warnings"].extend(res.warnings)
    payload = {"pair": names, "level": args.level, "delta": res.delta,
               "t": [p.t for p in res.points], "branch": [p.branch for p in res.points],
               "psi": res.psi, "theta": res.theta,
               "foc_residual": [p.foc_residual for p in res.points],
               "constraint_residual": [p.constraint_residual for p in res.points],
               "overlap_discrepancy": res.overlap_discrepancy, "merge_gap": res.merge_gap,
               "fit": _fit_payload(problem, fit)}
    rows = [(p.t, p.psi[0], p.psi[1]) for p in res.points]
    return payload, ("t", names[0], names[1]), rows


def cmd_bubble_path(problem, args, ctx):
    model = problem.model
    fit = _fit(problem)
    target, label = _scalar_target(problem, args)
    delta = deviance_threshold(args.level, 1)
    signs = {"upper": (1,), "lower": (-1,), "both": (-1, 1)}[args.side]
    res = _map(ctx, lambda sg: tracers.trace_bubble(model, target, fit, delta, sg,
                                                    delta1=args.delta1), signs)
    paths, rows = {}, []
    for sg, r in zip(signs, res):
        sd = "upper" if sg == 1 else "lower"
        if r.path is None:
            ctx["warnings"].append(f"{sd} bubble path could not start")
            paths[sd] = {"status": r.status}
            continue
        p = model.p
        eta = np.array([target.value(th[:p]) for th in r.path.states])
        paths[sd] = {"status": r.status, "delta": r.path.times, "eta": eta,
                     "theta": r.path.states[:, :p], "nu": r.path.states[:, p],
                     "bound": None if r.bound is None else _bound_payload(r.bound)}
        if r.status != "ok":
            ctx["warnings"].append(f"{sd} bubble path stopped before the target level")
        rows += [(sd, t, e, nu) for t, e, nu in zip(r.path.times, eta, r.path.states[:, p])]
    payload = {"target": label, "level": args.level, "delta": delta, "paths": paths,
               "fit": _fit_payload(problem, fit)}
    return payload, ("side", "delta", "eta", "nu"), rows


def cmd_mcmc_sample(problem, args, ctx):
    fit = _fit(problem)
    tr = mcmc.rw_metropolis(problem.model, fit.theta_hat, args.K, seed=ctx["seed"])
    if args.trace_out:
        mcmc.write_trace_csv(tr, args.trace_out)
    if not 0.15 <= tr.acceptance_rate <= 0.4:
        ctx["warnings"].append(f"acceptance rate {tr.acceptance_rate:.3f} outside [0.15, 0.4]")
    payload = {"iterates": tr.size, "burn_in": tr.burn_in, "acceptance_rate": tr.acceptance_rate,
               "loglik_max_trace": float(np.max(tr.logliks)), "best": tr.best,
               "trace_file": args.trace_out, "fit": _fit_payload(problem, fit)}
    header = tuple(f"theta_{j + 1}" for j in range(problem.model.p)) + ("loglik",)
    rows = [tuple(th) + (ll,) for th, ll in zip(tr.iterates, tr.logliks)]
    return payload, header, rows


COMMANDS = {"fit": cmd_fit, "ci": cmd_ci, "rlband": cmd_rlband, "contour": cmd_contour,
            "bubble-path": cmd_bubble_path, "mcmc-sample": cmd_mcmc_sample}


def _map(ctx, fn, items):
    items = list(items)
    if ctx["jobs"] > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=min(ctx["jobs"], len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# --------------------------------------------------------------------- arguments


def _default_seed():
    env = os.environ.get("PROLIK_SEED")
    return int(env) if env not in (None, "") else 0


class _Parser(argparse.ArgumentParser):
    # usage errors become exit code 1 with a JSON report, like any other error
    def error(self, message):
        raise SchemaError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--data", default=BUILTIN_VENICE,
                        help="CSV file with a header row (default: the shipped Venice data)")
    common.add_argument("--column", default="r1", help="response column")
    common.add_argument("--model", choices=("gev", "gev-reg", "linreg"), default="gev")
    common.add_argument("--loc", default="1", help='location formula, e.g. "1 + year"')
    common.add_argument("--scale", default="1", help="scale formula")
    common.add_argument("--shape", default="1", help="shape formula")
    common.add_argument("--scale-link", choices=("identity", "log"), default="log")
    common.add_argument("--x", default="1", help="linreg design formula")
    common.add_argument("--variance", type=float, default=None,
                        help="known linreg error variance (default: profiled)")
    common.add_argument("--time-unit", type=float, default=100.0,
                        help="covariates are divided by this before fitting (default 100)")
    common.add_argument("--no-standardize", action="store_true",
                        help="fit covariates as given instead of centred and scaled")
    common.add_argument("--level", type=float, default=0.95)
    common.add_argument("--seed", type=int, default=None, help="default: $PROLIK_SEED or 0")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = _Parser(prog="prolik", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prolik {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def target_args(p):
        p.add_argument("--param", default=None, help="parameter name, e.g. xi or mu_year")
        p.add_argument("--return-period", type=float, default=None)
        p.add_argument("--at", default=None, help="covariate values for return levels: col=v,...")
        p.add_argument("--delta1", type=float, default=None, help="bubble starting level")

    sub.add_parser("fit", parents=[common], help="maximum-likelihood fit")
    p = sub.add_parser("ci", parents=[common], help="profile-likelihood interval")
    target_args(p)
    p.add_argument("--method", choices=("optim", "naive", "bubble", "mcmc"), default="optim")
    p.add_argument("--K", type=int, default=10000, help="MCMC iterates kept")
    p.add_argument("--trace", default=None, help="iterate CSV from an external sampler")
    p.add_argument("--recompute-loglik", action="store_true")
    p = sub.add_parser("rlband", parents=[common], help="return-level confidence band")
    p.add_argument("--periods", default="2:1000:log")
    p.add_argument("--method", choices=("ode", "optim"), default="ode")
    p.add_argument("--at", default=None)
    p = sub.add_parser("contour", parents=[common], help="two-parameter profile contour")
    p.add_argument("--pair", default="sigma,xi")
    p.add_argument("--points", type=int, default=256)
    p = sub.add_parser("bubble-path", parents=[common], help="bound path as the level grows")
    target_args(p)
    p.add_argument("--side", choices=("lower", "upper", "both"), default="both")
    p = sub.add_parser("mcmc-sample", parents=[common], help="random-walk Metropolis iterates")
    p.add_argument("--K", type=int, default=10000)
    p.add_argument("--trace-out", default=None, help="write iterates as CSV")
    return parser


# -------------------------------------------------------------------- reporting


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _render(report, fmt, header, rows):
    if fmt == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        return buf.getvalue()
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def run(argv):
    """Execute a command line; returns ``(report dict, text, exit code, out path)``."""
    argv = list(argv)
    report = {"schema": SCHEMA, "tool": "prolik", "version": __version__,
              "command": ["prolik"] + argv}
    try:
        args = build_parser().parse_args(argv)
    except SchemaError as exc:
        report["error"] = {"code": exc.code, "message": str(exc)}
        return report, _render(report, "json", None, None), 1, None
    seed = args.seed if args.seed is not None else _default_seed()
    report["seed"] = seed
    ctx = {"seed": seed, "jobs": max(1, args.jobs), "warnings": []}
    header, rows = None, None
    try:
        if not 0 < args.level < 1:
            raise SchemaError("--level must lie in (0, 1)")
        if not args.time_unit > 0:
            raise SchemaError("--time-unit must be positive")
        problem = build_problem(args)
        report["dataset"] = {"name": problem.dataset.name, "rows": problem.dataset.n,
                             "dropped_rows": problem.dataset.dropped,
                             "provenance": problem.dataset.provenance}
        report["model"] = problem.spec
        payload, header, rows = COMMANDS[args.command](problem, args, ctx)
        report["result"] = payload
        code = 2 if ctx["warnings"] else 0
    except ProlikError as exc:
        report["error"] = {"code": exc.code, "message": str(exc)}
        code, rows = 1, None
    except (OSError, ValueError) as exc:
        report["error"] = {"code": "input", "message": str(exc)}
        code, rows = 1, None
    report["warnings"] = ctx["warnings"]
    return report, _render(report, args.format, header, rows), code, args.out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    report, text, code, out = run(argv)
    if code == 1:
        print(f"prolik: {report['error']['message']}", file=sys.stderr)
    for w in report.get("warnings", []):
        print(f"prolik: warning: {w}", file=sys.stderr)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
