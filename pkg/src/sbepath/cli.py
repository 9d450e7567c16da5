"""Command-line interface.

Every command writes its artifacts and a ``manifest.json`` into ``--out``.
The manifest echoes the resolved configuration, the tool version and the
SHA-256 of every input and output, and can be passed back through
``--config`` to reproduce a run.  Exit status: 0 on success, 2 on invalid
input, 1 when a computation fails.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ComputationError, SbeError, ValidationError

__all__ = ["main", "build_parser"]

_META = {"command", "config", "out", "threads", "handler"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one machine-parsable line instead of usage text
        raise ValidationError(message)


# ----------------------------------------------------------------------
# small helpers
# ----------------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump(obj) -> str:
    from .experiments import _jsonable

    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _exponent(text) -> float:
    return math.inf if str(text).lower() in ("inf", "infinity") else float(text)


def _resolve_seed(value):
    if value is not None:
        return int(value)
    env = os.environ.get("SBE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"SBE_SEED must be an integer, got {env!r}") from None
    return 0


def _read_measure_or_path(cfg):
    from .formats import read_measure_csv, read_path
    from .occupation import occupation

    if bool(cfg.get("path")) == bool(cfg.get("measure")):
        raise ValidationError("give exactly one of --path or --measure")
    if cfg.get("measure"):
        return read_measure_csv(cfg["measure"]), None
    path = read_path(cfg["path"])
    a, b = path.span
    s = a if cfg.get("s") is None else float(cfg["s"])
    t = b if cfg.get("t") is None else float(cfg["t"])
    return occupation(path, s, t), path


# ----------------------------------------------------------------------
# commands; each returns {relative file name: text or bytes}
# ----------------------------------------------------------------------


def _cmd_gen(cfg, threads):
    from .formats import write_path_binary, write_path_csv
    from .paths import (
        BrownianMotion, CustomCovariance, FractionalBrownian, GaussianSpec, euler_maruyama_1d, gen_gaussian,
    )

    kind = cfg["kind"]
    span = _floats(cfg["span"])
    if len(span) != 2:
        raise ValidationError("--span needs two numbers a,b")
    seed = cfg["seed"]
    if kind == "bm":
        path = gen_gaussian(GaussianSpec(BrownianMotion(), cfg["d"]), cfg["n"], span, seed)
    elif kind == "fbm":
        if cfg.get("H") is None:
            raise ValidationError("--H is required for fbm")
        path = gen_gaussian(GaussianSpec(FractionalBrownian(cfg["H"]), cfg["d"]), cfg["n"], span, seed)
    elif kind == "ou":
        cov = CustomCovariance(lambda s, t: np.exp(-np.abs(np.subtract(t, s))))
        path = gen_gaussian(GaussianSpec(cov, cfg["d"]), cfg["n"], span, seed)
    elif kind == "sde":
        drifts = {"zero": lambda t, x: 0.0, "sign": lambda t, x: np.clip(np.sign(x), -1, 1),
                  "linear": lambda t, x: -x}
        if cfg["drift"] not in drifts:
            raise ValidationError(f"--drift must be one of {sorted(drifts)}")
        sigma = cfg["sigma"]
        path = euler_maruyama_1d(drifts[cfg["drift"]], lambda t, x: sigma, cfg["x0"], cfg["n"], span, seed)
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    tmp = Path(cfg["_out"]) / ("path.bin" if cfg["format"] == "binary" else "path.csv")
    (write_path_binary if cfg["format"] == "binary" else write_path_csv)(path, tmp)
    return {tmp.name: None}


def _cmd_occ(cfg, threads):
    from .formats import write_measure_csv

    mu, _ = _read_measure_or_path(cfg)
    target = Path(cfg["_out"]) / "measure.csv"
    write_measure_csv(mu, target)
    return {target.name: None}


def _cmd_norm(cfg, threads):
    from dataclasses import replace

    from .experiments import path_scale_params
    from .norms import (
        BesovParams, SbeParams, besov_report, deposit_grid, p_variation_partition, resolve_sbe_grid,
        sbe_refinement, sbe_report, sbe_sensitivity,
    )
    from .measures import GridSpec

    kind = cfg["norm_kind_"]
    if kind == "pvar":
        from .formats import read_path

        if not cfg.get("path"):
            raise ValidationError("pvar needs --path")
        path = read_path(cfg["path"])
        res = p_variation_partition(path.values, cfg["var_p"])
        report = {"value": res.value, "params": {"p": cfg["var_p"]},
                  "partition": [float(path.times[i]) for i in res.partition]}
        return {"report.json": _dump(report)}
    mu, path = _read_measure_or_path(cfg)
    r_min = cfg.get("r_min")
    if r_min is None and path is not None:
        r_min = path_scale_params(path, cfg["alpha"]).r_min
    if kind == "sbe":
        params = SbeParams(alpha=cfg["alpha"], p=cfg["p"], q=cfg["q"], r_min=r_min,
                           points_per_octave=cfg["points_per_octave"], far_field=cfg["far_field"])
        if not params.far_field:
            # anchor the centre grid to the measure so that translates share it
            grid = resolve_sbe_grid(mu, params)
            lo, hi = mu.support_box()
            pad = float(grid.radii[-1])
            params = replace(params, r_max=grid.r_max, y_spacing=float(grid.y_spacing[0]),
                             y_bounds=(tuple(np.asarray(lo) - pad), tuple(np.asarray(hi) + pad)))
        rep = sbe_report(mu, params)
        report = {"value": rep.value, "params": params.to_dict(), "k": rep.k, "r_min": rep.r_min,
                  "r_max": rep.r_max, "far_field_share": rep.far_field_share,
                  "boundary_flags": rep.boundary_flags,
                  "r_min_sensitivity": sbe_sensitivity(mu, params),
                  "grid_refinement": sbe_refinement(mu, params)}
        return {"report.json": _dump(report)}
    # besov: deposit on a grid fine enough to resolve the inner radius
    spacing = cfg.get("spacing") or (r_min / 4 if r_min else mu.default_r_min() / 4)
    lo, hi = mu.support_box()
    params = BesovParams(alpha=cfg["alpha"], p=cfg["p"], q=cfg["q"])
    rows = []
    for level in range(3):
        h = spacing / 2 ** level
        grid = GridSpec.covering(lo, hi, h, pad=16 * spacing)
        rows.append({"spacing": h, "value": besov_report(deposit_grid(mu, grid), params).value})
    report = {"value": rows[0]["value"], "params": {**params.to_dict(), "spacing": spacing},
              "r_min_sensitivity": [], "grid_refinement": rows}
    return {"report.json": _dump(report)}


def _cmd_lnd(cfg, threads):
    from .lnd import GaussianIncrementModel, cnu_linearity, gaussian_increment_cbeta, lnd_min_ratio, lnd_param_region
    from .norms.regression import holder_exponent

    model_name, d = cfg["model"], cfg["d"]
    if model_name == "bm":
        model = GaussianIncrementModel.brownian(d)
    elif model_name == "fbm":
        if cfg.get("H") is None:
            raise ValidationError("--H is required for fbm")
        model = GaussianIncrementModel.fbm(cfg["H"], d)
    elif model_name == "ou":
        model = GaussianIncrementModel.ornstein_uhlenbeck(d)
    else:
        raise ValidationError(f"unknown model {model_name!r}")
    lnd = lnd_min_ratio(model, cfg["n"], cfg["trials"], seed=cfg["seed"])
    spans = [2.0 ** -j for j in range(2, 9)]
    sizes = [gaussian_increment_cbeta(model, 0.5, 0.5 + s, cfg["beta"]).value for s in spans]
    fit = holder_exponent(spans, sizes)
    cnu = cnu_linearity(model, cfg["beta"])
    region = lnd_param_region(model.hurst, d, cfg["alpha"], cfg["p"], cfg["q"])
    report = {"model": model.name, "d": d, "H": model.hurst,
              "c_n": lnd.to_dict(),
              "cbeta": {"beta": cfg["beta"], "slope": fit.slope, "expected": -model.hurst * (cfg["beta"] + d)},
              "c_nu": cnu.to_dict(), "region": region.to_dict()}
    return {"report.json": _dump(report)}


def _young_params(cfg, level):
    from .young import YoungParams

    return YoungParams(path_alpha=cfg["path_alpha"], path_p=cfg["path_p"], path_q=cfg["path_q"],
                       r1=cfg["r1"], r3=cfg["r3"], gamma=cfg["gamma"], level=level, tol=cfg["tol"],
                       max_iter=cfg["max_iter"])


def _cmd_young(cfg, threads):
    from .experiments import band_limited_drift
    from .formats import read_drift_binary, read_path, write_drift_binary, write_path_csv
    from .young import solve_ode

    out = Path(cfg["_out"])
    if cfg["young_action_"] == "drift":
        drift = band_limited_drift(cfg["d"], cfg["alpha2"], cfg["modes"], cfg["radius"], cfg["nodes"], cfg["seed"])
        write_drift_binary(drift, out / "drift.bin")
        return {"drift.bin": None}
    for key in ("drift", "path"):
        if not cfg.get(key):
            raise ValidationError(f"young solve needs --{key}")
    drift = read_drift_binary(cfg["drift"])
    path = read_path(cfg["path"])
    x0 = _floats(cfg["x0"]) if cfg.get("x0") else [0.0] * drift.dim
    res = solve_ode(drift, path, x0, _young_params(cfg, cfg["level"]))
    write_path_csv(res.solution, out / "solution.csv")
    return {"solution.csv": None, "report.json": _dump(res.report())}


_EXPERIMENT_KEYS = {
    "moment_scaling": {"kind": "bm", "H": 0.5, "d": 1, "alpha": 0.4, "spans": [2.0 ** -j for j in range(2, 8)],
                       "n_paths": 200, "n_steps": 2 ** 14, "bootstrap": 1000},
    "sde_occupation": {"drift": "sign", "sigma": 1.0, "alpha": 0.4, "spans": [2.0 ** -j for j in range(2, 8)],
                       "n_paths": 100, "n_steps": 2 ** 12, "bootstrap": 1000, "dilation": 2.0},
    "besov_sbe_family": {"alpha": 0.3, "p": 2.0, "q": 2.0, "n_steps": 2 ** 12},
    "shift_family": {"n_pairs": 10, "n_steps": 2 ** 12, "r": 2.0, "gamma": 1.0, "alpha": 0.2},
    "reparam": {"n_steps": 2 ** 12, "r": 2.0, "alpha": 0.4, "warp": 0.3},
    "dyadic_consistency": {"n_steps": 2 ** 12, "r": 2.0, "alpha": 0.4, "levels": 6, "epsilon": 0.5},
    "regularization": {"H": 0.3, "d": 1, "alpha2": 1.0, "roughness": 8, "n_grid": 2 ** 12,
                       "levels": [6, 7, 8, 9, 10], "zero_drift": False},
}


def _cmd_experiment(cfg, threads):
    from . import experiments as ex
    from .norms import BesovParams, SbeParams
    from .paths import BrownianMotion, FractionalBrownian, GaussianSpec, SampledPath, gen_gaussian

    name = cfg["name"]
    if name not in _EXPERIMENT_KEYS:
        raise ValidationError(f"unknown experiment {name!r}; choose from {sorted(_EXPERIMENT_KEYS)}")
    params = dict(_EXPERIMENT_KEYS[name])
    extra = cfg.get("params") or {}
    unknown = set(extra) - set(params)
    if unknown:
        raise ValidationError(f"unknown keys for experiment {name}: {sorted(unknown)}")
    params.update(extra)
    seed = cfg["seed"]
    tables = {}

    def bm_path(n_steps):
        return gen_gaussian(GaussianSpec(BrownianMotion()), int(n_steps) + 1, (0.0, 1.0), seed)

    if name == "moment_scaling":
        kind = BrownianMotion() if params["kind"] == "bm" else FractionalBrownian(params["H"])
        rep = ex.mc_moment_scaling(GaussianSpec(kind, params["d"]), params["alpha"], params["spans"],
                                   params["n_paths"], params["n_steps"], seed, bootstrap=params["bootstrap"],
                                   workers=threads)
        report = rep.to_dict()
        tables["moments.csv"] = _table(["span", "mean", "std_error"], zip(rep.spans, rep.means, rep.std_errors))
    elif name == "sde_occupation":
        drifts = {"zero": None, "sign": lambda t, x: np.clip(np.sign(x), -1, 1), "linear": lambda t, x: -x}
        if params["drift"] not in drifts:
            raise ValidationError(f"drift must be one of {sorted(drifts)}")
        report = ex.sde_occupation_experiment(drifts[params["drift"]], params["n_paths"], params["spans"],
                                              params["alpha"], seed, sigma=params["sigma"],
                                              n_steps=params["n_steps"], bootstrap=params["bootstrap"],
                                              dilation=params["dilation"], workers=threads)
        tables["moments.csv"] = _table(["span", "sde_mean", "baseline_mean"],
                                       zip(report["sde"]["spans"], report["sde"]["means"],
                                           report["baseline"]["means"]))
    elif name == "besov_sbe_family":
        report = ex.besov_sbe_family(params["alpha"], params["p"], params["q"], seed, params["n_steps"])
        tables["family.csv"] = _table(["member", "sbe", "besov", "ratio"],
                                      ((m["name"], m["sbe"], m["besov"], m["ratio"]) for m in report["members"]))
    elif name == "shift_family":
        report = ex.shift_family(bm_path(params["n_steps"]), params["n_pairs"], seed, r=params["r"],
                                 gamma=params["gamma"], besov=BesovParams(alpha=params["alpha"], p=2, q=2))
        tables["ratios.csv"] = _table(["pair", "bound_ratio"], enumerate(report["ratios"]))
    elif name == "reparam":
        path = bm_path(params["n_steps"])
        u = np.linspace(0.0, 1.0, path.n)
        w = params["warp"]
        phi = SampledPath(u, u + w * np.sin(np.pi * u) / np.pi)
        if not 0 <= w < 1:
            raise ValidationError("warp must lie in [0, 1) to keep the time change bi-Lipschitz")
        report = ex.reparam_experiment(path, phi, params["r"], ex.path_scale_params(path, params["alpha"]))
    elif name == "dyadic_consistency":
        report = ex.dyadic_consistency(bm_path(params["n_steps"]), params["r"], params["alpha"], params["levels"],
                                       params["epsilon"])
    else:
        report = ex.regularization_demo(params["H"], params["d"], params["alpha2"], params["roughness"],
                                        params["n_grid"], seed, levels=params["levels"],
                                        zero_drift=params["zero_drift"])
    report = {"experiment": name, "params": params, "seed": seed, "report": report}
    return {"report.json": _dump(report), **tables}


def _table(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format(v, ".17g") if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _cmd_selftest(cfg, threads):
    from .deltak import run_selftest

    rows = run_selftest(cfg["seed"])
    report = [{"check": name, "ok": ok, "detail": detail} for name, ok, detail in rows]
    if not all(ok for _, ok, _ in rows):
        bad = [name for name, ok, _ in rows if not ok]
        raise ComputationError(f"selftest failed: {', '.join(bad)}")
    return {"report.json": _dump(report)}


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--out", default="sbe_out", help="artifact directory (created if missing)")
    p.add_argument("--config", help="JSON file whose keys override the flags (a manifest also works)")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $SBE_SEED or 0)")
    # also accepted after the subcommand; SUPPRESS keeps a global value from being overwritten
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (default: all cores)")


def _add_norm_indices(p, alpha=0.4):
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--p", type=_exponent, default=2.0)
    p.add_argument("--q", type=_exponent, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbepath", description="Small-ball-estimate regularity of sampled paths.")
    parser.add_argument("--version", action="version", version=f"sbepath {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a sampled path")
    _add_common(p)
    p.add_argument("--kind", choices=["bm", "fbm", "ou", "sde"], default="bm")
    p.add_argument("--H", type=float, default=None, help="Hurst index for fbm")
    p.add_argument("--n", type=int, default=1025, help="number of samples")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--span", default="0,1")
    p.add_argument("--drift", default="zero", help="sde drift: zero, sign or linear")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--format", choices=["csv", "binary"], default="csv")
    p.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("occ", help="occupation measure of a path")
    _add_common(p)
    p.add_argument("--path", required=False)
    p.add_argument("--measure", default=None, help=argparse.SUPPRESS)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.set_defaults(handler=_cmd_occ)

    p = sub.add_parser("norm", help="SBE, Besov or p-variation norm")
    p.add_argument("norm_kind_", choices=["sbe", "besov", "pvar"], metavar="{sbe,besov,pvar}")
    _add_common(p)
    p.add_argument("--path")
    p.add_argument("--measure")
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    _add_norm_indices(p)
    p.add_argument("--r-min", dest="r_min", type=float, default=None)
    p.add_argument("--points-per-octave", type=int, default=8)
    p.add_argument("--far-field", action="store_true")
    p.add_argument("--spacing", type=float, default=None, help="Besov grid spacing")
    p.add_argument("--var-p", dest="var_p", type=float, default=2.0, help="variation exponent for pvar")
    p.set_defaults(handler=_cmd_norm)

    p = sub.add_parser("lnd", help="local non-determinism diagnostics")
    _add_common(p)
    p.add_argument("--model", choices=["bm", "fbm", "ou"], default="fbm")
    p.add_argument("--H", type=float, default=None)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--beta", type=float, default=0.5)
    _add_norm_indices(p, alpha=0.3)
    p.set_defaults(handler=_cmd_lnd)

    p = sub.add_parser("young", help="drift fields and ODE solutions")
    p.add_argument("young_action_", choices=["solve", "drift"], metavar="{solve,drift}")
    _add_common(p)
    p.add_argument("--drift")
    p.add_argument("--path")
    p.add_argument("--x0", default=None, help="comma-separated initial point")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=200)
    p.add_argument("--path-alpha", dest="path_alpha", type=float, default=0.4)
    p.add_argument("--path-p", dest="path_p", type=float, default=2.0)
    p.add_argument("--path-q", dest="path_q", type=float, default=1.5)
    p.add_argument("--r1", type=float, default=1.5)
    p.add_argument("--r3", type=float, default=1.5)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--d", type=int, default=1, help="drift dimension (young drift)")
    p.add_argument("--alpha2", type=float, default=1.0)
    p.add_argument("--modes", type=int, default=8)
    p.add_argument("--radius", type=float, default=6.0)
    p.add_argument("--nodes", type=int, default=1025)
    p.set_defaults(handler=_cmd_young)

    p = sub.add_parser("experiment", help="Monte Carlo and convergence studies")
    p.add_argument("name", choices=sorted(_EXPERIMENT_KEYS))
    _add_common(p)
    p.set_defaults(handler=_cmd_experiment, params=None)

    for name in ("selftest", "deltak"):
        p = sub.add_parser(name, help="run the dyadic-difference identity suite")
        _add_common(p)
        if name == "deltak":
            p.add_argument("--selftest", action="store_true", required=True)
        p.set_defaults(handler=_cmd_selftest)
    return parser


def _load_config(path, command: str, defaults: dict) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    if "tool" in data and "config" in data:  # a manifest from an earlier run
        if data.get("command") != command:
            raise ValidationError(f"manifest is for command {data.get('command')!r}, not {command!r}")
        data = data["config"]
    allowed = {k for k in defaults if k not in _META and not k.startswith("_")}
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return data


def _run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise ValidationError("missing subcommand; choose from gen, occ, norm, lnd, young, experiment, selftest")
    cfg = vars(args).copy()
    if args.config:
        cfg.update(_load_config(args.config, args.command, cfg))
    if args.command == "experiment" and cfg.get("params") is not None and not isinstance(cfg["params"], dict):
        raise ValidationError("experiment params must be a JSON object")
    cfg["seed"] = _resolve_seed(cfg.get("seed"))
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        raise ValidationError("--threads must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg["_out"] = str(out)
    inputs = {}
    keys = ("path", "measure", "drift") if args.command == "young" else ("path", "measure")
    for key in keys:
        val = cfg.get(key)
        if isinstance(val, str) and val:
            if not Path(val).is_file():
                raise ValidationError(f"input file not found: {val}")
            inputs[val] = _sha256(Path(val))
    produced = args.handler(cfg, threads)
    outputs = {}
    for name, content in produced.items():
        target = out / name
        if content is not None:
            if isinstance(content, bytes):
                target.write_bytes(content)
            else:
                target.write_text(content)
        outputs[name] = _sha256(target)
    resolved = {k: v for k, v in cfg.items() if k not in _META and not k.startswith("_")}
    manifest = {"tool": "sbepath", "version": __version__, "command": args.command, "config": resolved,
                "inputs": inputs, "outputs": outputs}
    (out / "manifest.json").write_text(_dump(manifest))
    return 0


def main(argv=None) -> int:
    try:
        return _run(sys.argv[1:] if argv is None else argv)
    except ValidationError as exc:
        print(f"sbepath: error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"sbepath: error: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return 2
    except (ComputationError, SbeError) as exc:
        print(f"sbepath: failed: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
