"""Command-line batch runner.

``activepenalty <experiment> [flags]`` runs one experiment and writes CSV
tables plus ``manifest.json`` into ``--out``. Parameters come from an
optional flat ``key = value`` file (``--config``) and are overridden by
flags. Unknown keys are rejected.

Exit status: 0 on success, 1 when ``--check`` finds a quantity outside its
expectation band, 2 for a bad configuration, 3 when a solver aborts.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .expectations import check as check_band
from .heat import SolverDiverged
from .results import ResultTable, atomic_write

EXPERIMENTS = ("heat1d", "heat2d", "ns-mms", "cylinder", "stability", "model1d")


class ConfigError(ValueError):
    pass


# ---- parameter schema -----------------------------------------------------------

def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _str_list(text):
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v for v in str(text).replace(" ", "").split(",") if v]


def _opt_float(text):
    if text is None or str(text).lower() in ("none", "auto", ""):
        return None
    return float(text)


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# name -> (parser, default); ``None`` defaults are filled per experiment
SCHEMA = {
    "heat1d": {
        "k": (int, 1), "nlist": (_int_list, [64, 128, 256, 512, 1024]), "T": (float, 1.0),
        "dt_factor": (float, 0.2), "eta_factor": (float, 5.0), "l": (float, 0.6),
        "one_sided": (_bool, None),
    },
    "heat2d": {
        "k": (int, 1), "n": (int, 256), "eta_list": (_float_list, [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]),
        "T": (float, 0.1), "l": (_opt_float, None), "accuracy": (int, 2),
        "one_sided": (_bool, None),
    },
    "ns-mms": {
        "nlist": (_int_list, [32, 64, 128]), "T": (float, 0.25), "mu": (float, 1.0),
        "dt_factor": (float, None), "eta_factor": (float, None), "l": (float, None),
    },
    "cylinder": {
        "re": (float, 40.0), "n": (int, None), "eta": (float, None), "l": (float, None),
        "t_end": (float, 5.0), "sample_dt": (float, 0.05), "filter_width": (int, 5),
        "snapshots": (_float_list, []), "k": (int, 1),
    },
    "stability": {
        "n": (_int_list, [512]), "eta": (_float_list, [1e-6]), "dt": (_opt_float, None),
        "dt_eta_factor": (_opt_float, None), "steps": (int, None), "n_vectors": (int, 5),
    },
    "model1d": {
        "variants": (_str_list, None), "eta_list": (_float_list, [1e-4, 1e-5, 1e-6, 1e-7]),
        "L": (float, 2.0), "resolution": (float, 0.1),
    },
}

# flag spellings that differ from the key
ALIASES = {"N": "n", "N_list": "nlist", "k_match": "k", "RE": "re", "T_final": "T", "T_end": "t_end"}


@dataclass
class RunConfig:
    experiment: str
    params: dict
    out: str = "out"
    seed: int = 0
    check: bool = False
    full: bool = False
    derived: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {"experiment": self.experiment, "out": self.out, "seed": self.seed,
                "check": self.check, "full": self.full, "params": self.params,
                "derived": self.derived}


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    if not os.path.exists(path):
        raise ConfigError(f"config file {path!r} does not exist")
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[ALIASES.get(key, key)] = val
    return out


def _validate(exp, p, full):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    k = p.get("k")
    if k is not None:
        need(0 <= k, "k must be >= 0")
        need(k <= 2, f"k = {k} rejected: k <= 2")
    for key in ("eta", "eta_list"):
        if key in p and p[key] is not None:
            vals = p[key] if isinstance(p[key], list) else [p[key]]
            need(all(v > 0 and math.isfinite(v) for v in vals), f"{key} must be positive")
    for key in ("T", "t_end", "dt_factor", "eta_factor", "mu", "sample_dt", "dt", "dt_eta_factor",
                "resolution"):
        if p.get(key) is not None:
            need(p[key] > 0, f"{key} must be positive")
    if p.get("l") is not None:
        need(p["l"] > 0, "l must be positive")
    for key in ("nlist", "n"):
        v = p.get(key)
        if v is None:
            continue
        vals = v if isinstance(v, list) else [v]
        need(len(vals) > 0, f"{key} must not be empty")
        need(all(x >= 8 and x % 2 == 0 for x in vals), f"{key}: grid sizes must be even and >= 8")
        if isinstance(v, list) and key == "nlist":
            need(vals == sorted(vals) and len(set(vals)) == len(vals), "nlist must be ascending")

    if exp == "heat1d":
        need(p["dt_factor"] <= 0.5, "dt_factor <= 0.5 (dt <= 0.5 h^2)")
        need(p["eta_factor"] >= 1.0 / 1.2, "eta_factor >= 1/1.2 (dt <= 1.2 eta)")
    if exp == "cylinder":
        need(p["re"] > 0, "re must be positive")
        need(p["k"] >= 1, "the velocity target needs k >= 1")
        need(p["filter_width"] >= 1, "filter_width must be >= 1")
    if exp == "stability":
        need(not (p["dt"] is not None and p["dt_eta_factor"] is not None),
             "give at most one of dt and dt_eta_factor")
        if p["steps"] is not None:
            need(p["steps"] >= 10 * max(p["n"]), "steps must be >= 10 N")
    if exp == "model1d":
        from .model1d import VARIANTS
        bad = [v for v in p["variants"] or [] if v not in VARIANTS]
        need(not bad, f"unknown variant(s) {bad}; choose from {sorted(VARIANTS)}")
        need(p["L"] >= 2.0, "L must be >= 2")
        need(p["resolution"] <= 0.1, "resolution (h / sqrt(eta)) <= 0.1")


def _fill_defaults(exp, p, full):
    from . import ns

    derived = {}
    if exp == "heat1d":
        if full and p["nlist"] == SCHEMA["heat1d"]["nlist"][1]:
            p["nlist"] = p["nlist"] + [2048, 4096]
        if p["one_sided"] is None:
            p["one_sided"] = p["k"] == 2
        hs = [2.0 * math.pi / n for n in p["nlist"]]
        derived["dt"] = [p["dt_factor"] * h * h for h in hs]
        derived["eta"] = [p["eta_factor"] * p["dt_factor"] * h * h for h in hs]
    elif exp == "heat2d":
        if full and p["n"] == 256:
            p["n"] = 512
        if p["one_sided"] is None:
            p["one_sided"] = p["k"] == 2
    elif exp == "ns-mms":
        if full:
            p["T"] = 1.0
        for key, val in (("dt_factor", ns.MMS_DT_FACTOR), ("eta_factor", ns.MMS_ETA_FACTOR),
                         ("l", ns.MMS_L)):
            if p[key] is None:
                p[key] = val
    elif exp == "cylinder":
        preset = ns.cylinder_preset(p["re"], full)
        for key in ("n", "eta", "l"):
            if p[key] is None:
                p[key] = preset[key]
    elif exp == "model1d":
        if p["variants"] is None:
            p["variants"] = ["matched-k0", "matched-k1", "matched-k2-minus",
                             "matched-k2-plus-exponential", "matched-k2-minus-exponential"]
    return derived


def parse_config(argv=None) -> RunConfig:
    """Parse flags (and an optional config file) into a validated :class:`RunConfig`."""
    parser = build_parser()
    ns_args = parser.parse_args(argv)
    exp = ns_args.experiment
    schema = SCHEMA[exp]
    raw = {}
    if ns_args.config:
        raw.update(read_config_file(ns_args.config))
    for key in ("set",):
        for item in getattr(ns_args, key) or []:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            a, b = item.split("=", 1)
            raw[ALIASES.get(a.strip(), a.strip())] = b.strip()
    for key in schema:
        val = getattr(ns_args, key, None)
        if val is not None:
            raw[key] = val
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for {exp}: {', '.join(unknown)}")
    params = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            try:
                params[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw[key]!r} ({exc})") from None
        else:
            params[key] = list(default) if isinstance(default, list) else default
    _validate(exp, params, ns_args.full)
    derived = _fill_defaults(exp, params, ns_args.full)
    _validate(exp, params, ns_args.full)
    return RunConfig(exp, params, ns_args.out, ns_args.seed, ns_args.check, ns_args.full, derived)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activepenalty", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"activepenalty {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for exp in EXPERIMENTS:
        sp = sub.add_parser(exp)
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--check", action="store_true", help="compare against expectation bands")
        sp.add_argument("--full", action="store_true", help="full-scale resolutions and run lengths")
        sp.add_argument("--config", help="flat key = value file; flags override it")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one key")
        spellings = {v: k for k, v in ALIASES.items()}
        for key in SCHEMA[exp]:
            flags = [f"--{key.replace('_', '-')}"]
            if key in spellings:
                flags.append(f"--{spellings[key].replace('_', '-')}")
            # values stay strings here; the schema converts them after merging
            sp.add_argument(*dict.fromkeys(flags), dest=key, default=None)
    return parser


# ---- experiment dispatch ----------------------------------------------------------

def _heat1d(cfg, checks):
    from .heat import run_heat1d_convergence

    p = cfg.params
    table = run_heat1d_convergence(p["k"], p["nlist"], p["T"], p["dt_factor"], p["eta_factor"],
                                   p["l"], extension={"one_sided": p["one_sided"]})
    order = float(table.rows[-1][3])
    checks.append((f"heat1d:k{p['k']}", order))
    return {"heat1d.csv": table}, {"fitted_order": order}


def _heat2d(cfg, checks):
    from .heat import run_heat2d_eta_sweep

    p = cfg.params
    table = run_heat2d_eta_sweep(p["k"], p["eta_list"], p["n"], p["T"], p["accuracy"], l=p["l"],
                                 extension={"one_sided": p["one_sided"]})
    slope = float(table.rows[-1][2])
    checks.append((f"heat2d:k{p['k']}", slope))
    return {"heat2d.csv": table}, {"eta_slope": slope}


def _ns_mms(cfg, checks):
    from .extension import ExtensionConfig
    from .ns import fitted_orders, run_ns_mms

    p = cfg.params
    table = run_ns_mms(p["nlist"], p["T"], p["mu"], p["dt_factor"], p["eta_factor"],
                       extension=ExtensionConfig(k=1, l=p["l"], G="auto"))
    orders = fitted_orders(table)
    for key in ("err_u_inf", "err_p_inf", "div_l2"):
        checks.append((f"ns-mms:{key}", orders[key]))
    return {"ns_mms.csv": table}, {"fitted_orders": orders}


def _cylinder(cfg, checks):
    from .grid import dump_field
    from .ns import drag_summary, run_cylinder

    p = cfg.params
    series, snaps = run_cylinder(p["re"], p["n"], p["eta"], p["l"], p["t_end"],
                                 sample_dT=p["sample_dt"], snapshots=p["snapshots"],
                                 filter_width=p["filter_width"], k=p["k"])
    os.makedirs(cfg.out, exist_ok=True)
    files = []
    for T, w in sorted(snaps.items()):
        name = f"vorticity_T{T:.2f}.dat"
        dump_field(os.path.join(cfg.out, name), w)
        files.append(name)
    summary = drag_summary(series)
    if math.isclose(p["re"], 40.0):
        checks.append(("cylinder:re40_final", summary["final_C_D"]))
    elif math.isclose(p["re"], 550.0):
        checks.append(("cylinder:re550_peak", summary["peak_T"]))
    summary["vorticity_files"] = files
    return {"forces.csv": series.table()}, summary


def _stability(cfg, checks):
    from .stability import boundedness_scan, rule_dt

    p = cfg.params
    if p["dt"] is not None:
        rule = p["dt"]
    elif p["dt_eta_factor"] is not None:
        fac = p["dt_eta_factor"]
        rule = lambda N, eta: fac * eta  # noqa: E731
    else:
        rule = rule_dt
    table = boundedness_scan(p["n"], p["eta"], rule, p["steps"], p["n_vectors"], cfg.seed)
    stable = [bool(r[4]) for r in table.rows]
    return {"stability.csv": table}, {"all_stable": all(stable)}


def _model1d(cfg, checks):
    from .model1d import model_convergence_sweep

    p = cfg.params
    tables, results = {}, {}
    for variant in p["variants"]:
        t = model_convergence_sweep(variant, p["eta_list"], L=p["L"], resolution=p["resolution"])
        slope = float(t.rows[0][2])
        results[variant] = {"slope": slope}
        key = f"model1d:{variant}"
        if variant.endswith("-exponential"):
            power = 1.0 if "plus" in variant else 1.5
            ratio = float(t.column("error")[0] / t.column("eta")[0] ** power)
            results[variant]["constant"] = ratio
            checks.append(("model1d:plus_constant" if "plus" in variant else
                           "model1d:minus_constant", ratio))
        else:
            checks.append((key, slope))
        tables[f"model1d_{variant}.csv"] = t
    return tables, results


DISPATCH = {"heat1d": _heat1d, "heat2d": _heat2d, "ns-mms": _ns_mms, "cylinder": _cylinder,
            "stability": _stability, "model1d": _model1d}


def run_experiment(cfg: RunConfig) -> int:
    np.random.seed(cfg.seed)
    os.makedirs(cfg.out, exist_ok=True)
    t0 = time.perf_counter()
    manifest = {"activepenalty_version": __version__, "config": cfg.echo(), "status": "ok"}
    checks = []
    status = 0
    try:
        tables, results = DISPATCH[cfg.experiment](cfg, checks)
    except SolverDiverged as exc:
        manifest.update(status="aborted", error=str(exc), failing_step=exc.step)
        tables, results = {}, {}
        status = 3
    wall = time.perf_counter() - t0
    manifest["wall_time_s"] = wall
    manifest["results"] = results
    manifest["outputs"] = sorted(tables)
    verdicts = []
    for key, value in checks:
        ok, msg = check_band(key, value)
        verdicts.append({"band": key, "value": value, "pass": ok, "message": msg})
    manifest["checks"] = verdicts
    if cfg.check and status == 0 and not all(v["pass"] for v in verdicts):
        status = 1
    manifest["exit_status"] = status
    for name, table in tables.items():
        table.provenance.update(config=cfg.echo())
        table.write_csv(os.path.join(cfg.out, name))
    atomic_write(os.path.join(cfg.out, "manifest.json"),
                 json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    for v in verdicts:
        print(v["message"])
    if status == 3:
        print(f"solver aborted: {manifest['error']}", file=sys.stderr)
    return status


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return str(obj)


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
