"""Command-line front end.

Every command reads an optional YAML config (``--config``), lets flags
override it, echoes the effective config into the output directory and
writes its verdicts as sorted-key JSON.  The exit code is 0 iff every
verdict passes.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile

import numpy as np
import yaml

from . import lab
from .bubbles import (BubbleParams, bubble_asymptotics, geometric_lambdas, lambda_max,
                      make_bubble, write_scan_csv, bubble_scan)
from .concentration import DEFAULT_C1, concentration_report
from .errors import LabError, ResolutionError, ThresholdError
from .functional import Problem, density, log_integral, mt_deficit, stabilizes, write_deficit_csv
from .greens import SingularSet
from .solver import (SolverConfig, local_masses, result_summary, rho_continuation, solve,
                     undo_change_of_variables)
from .surface import parse_surface_spec

COMMON = {"surface": None, "points": [], "alphas": [], "seed": None, "out": "out"}

COMMAND_DEFAULTS = {
    "bubble": {"alpha": 0.0, "lmin": 10.0, "lmax": None,
               "per_decade": 8, "center": [0.5, 0.5]},
    "mt": {"variant": "Closed", "coeffs": [1.0, 0.9], "alpha": 0.0,
           "weighted": False, "lmin": 10.0, "lmax": None, "per_decade": 8,
           "center": [0.5, 0.5]},
    "conc": {"density": "bubble", "lam": 30.0, "center": [0.5, 0.5],
             "C1": DEFAULT_C1, "tau": None, "rho": 6 * np.pi},
    "solve": {"rho": 2 * np.pi, "method": "Newton", "tol": 1e-8,
              "max_iter": 200, "bubble_center": None, "bubble_lambda": 2.0,
              "bubble_alpha": 0.0},
    "scan": {"rho_start": 2 * np.pi, "rho_stop": 4 * np.pi,
             "rho_num": 9, "method": "Newton", "tol": 1e-8, "max_iter": 60, "resume": False},
    "acceptance": {"criteria": list(range(1, 12)), "jobs": 1},
}


# -- io helpers --------------------------------------------------------------


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path, obj):
    _atomic_write(path, lab.dumps(obj))


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_csv_via(fn, path, rows):
    # the module writers take a path; route through a temp file for atomicity
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    os.close(fd)
    fn(tmp, rows)
    os.replace(tmp, path)


def _verdicts_file(out, verdicts, extra=None):
    rec = {"pass": all(v["pass"] for v in verdicts), "verdicts": verdicts}
    if extra:
        rec.update(extra)
    _write_json(os.path.join(out, "verdicts.json"), rec)
    return 0 if rec["pass"] else 1


def _v(name, value, target, tol, provenance, passed):
    return {"name": name, "value": value, "target": target, "tolerance": tol,
            "provenance": provenance, "pass": bool(passed)}


# -- config ------------------------------------------------------------------


def load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise SystemExit(f"config {path} must be a mapping")
    return data


def effective_config(command, args, parser=None):
    cfg = dict(COMMON)
    cfg.update(COMMAND_DEFAULTS[command])
    file_cfg = load_config(args.config)
    cfg.update(file_cfg)
    for key, val in vars(args).items():
        if key in ("config", "command", "func") or val is None:
            continue
        cfg[key] = val
    if command != "acceptance" and not cfg.get("surface"):
        msg = "a surface spec is required (--surface or the config key 'surface')"
        if parser is not None:
            parser.error(msg)
        raise SystemExit(msg)
    return cfg


def _echo(cfg):
    _atomic_write(os.path.join(cfg["out"], "config.yaml"),
                  yaml.safe_dump(lab._jsonable(cfg), sort_keys=True))


def _singular_set(s, cfg):
    pts, als = cfg.get("points") or [], cfg.get("alphas") or []
    if len(pts) != len(als):
        raise SystemExit("--point and --alpha-j must be given the same number of times")
    return SingularSet.from_chart(s, [tuple(p) for p in pts], als)


# -- commands ----------------------------------------------------------------


def cmd_bubble(cfg):
    s = parse_surface_spec(cfg["surface"])
    x = s.nearest_node(cfg["center"])
    top = lambda_max(s, x)
    lmax = top if cfg["lmax"] is None else float(cfg["lmax"])
    lams = geometric_lambdas(float(cfg["lmin"]), lmax, int(cfg["per_decade"]))
    ok = [lam for lam in lams if lam <= top]
    rejected = [{"lambda": float(lam), "reason": f"exceeds lambda_max = {top:.6g}"}
                for lam in lams if lam > top]
    P = Problem(s, _singular_set(s, cfg), 4 * np.pi)
    rows = bubble_scan(P, float(cfg["alpha"]), [x], ok)
    _write_csv_via(write_scan_csv, os.path.join(cfg["out"], "bubble_scan.csv"), rows)
    r = bubble_asymptotics(s, float(cfg["alpha"]), x, ok)
    verdicts = [
        _v("dirichlet_slope", r["dirichlet_slope"], r["dirichlet_target"], 0.05,
           "bubble asymptotics", r["dirichlet_rel_dev"] <= 0.05),
        _v("mean_slope", r["mean_slope"], r["mean_target"], 0.03, "bubble asymptotics",
           r["mean_rel_dev"] <= 0.03),
    ]
    summary = {"pass": all(v["pass"] for v in verdicts), "verdicts": verdicts,
               "rejected_lambdas": rejected, "lambda_max": top,
               "snap_offset": float(s.point_distances(np.asarray(cfg["center"], float) % 1.0,
                                                      s.nodes[x]))
               if s.kind == "torus" else None}
    _write_json(os.path.join(cfg["out"], "summary.json"), summary)
    return 0 if summary["pass"] else 1


def cmd_mt(cfg):
    s = parse_surface_spec(cfg["surface"])
    variant = cfg["variant"]
    a = float(cfg["alpha"])
    x = s.nearest_node(cfg["center"]) if s.kind != "disk" or a == 0 else 0
    top = lambda_max(s, x)
    lmax = top if cfg["lmax"] is None else min(float(cfg["lmax"]), top)
    lams = geometric_lambdas(float(cfg["lmin"]), lmax, int(cfg["per_decade"]))
    weight = None
    base = 1 / (4 * np.pi)
    if cfg["weighted"]:
        weight = s.distances_from(x) ** (2 * a)
        base = 1 / (4 * np.pi * (1 + a))
    lw = None
    if weight is not None:
        with np.errstate(divide="ignore"):
            lw = np.log(weight)
    rows, verdicts = [], []
    for factor in cfg["coeffs"]:
        coeff = float(factor) * base
        vals = []
        for lam in lams:
            u = make_bubble(s, BubbleParams(a, lam, x))
            if variant == "BoundaryZero":
                u = u - np.max(u[s.boundary])
                u[s.boundary] = 0.0
            dv = mt_deficit(s, u, variant, coeff, weight)
            vals.append(dv)
            rows.append({"family_id": f"coeff={factor}", "lambda": float(lam), "deficit": dv,
                         "dirichlet": s.dirichlet(u), "mean": s.mean(u),
                         "log_integral": log_integral(s, u, lw)})
        st = stabilizes(lams, vals, "max")
        expect_bounded = float(factor) >= 1.0
        verdicts.append(_v(f"bounded_above[coeff={factor}]", st["last_decade_change"], 0.0,
                           0.01 * st["total_range"], "sharp constant",
                           st["pass"] == expect_bounded))
    _write_csv_via(write_deficit_csv, os.path.join(cfg["out"], "deficit_scan.csv"), rows)
    return _verdicts_file(cfg["out"], verdicts, {"base_coefficient": base})


def _conc_density(s, cfg):
    kind = cfg["density"]
    if kind == "uniform":
        return np.ones(s.n_nodes)
    x = s.nearest_node(cfg["center"])
    if kind == "bubble":
        P = Problem(s, SingularSet.empty(), float(cfg["rho"]))
        return density(P, make_bubble(s, BubbleParams(0.0, float(cfg["lam"]), x)))
    if kind == "gaussian":
        return np.exp(-(s.distances_from(x) * float(cfg["lam"])) ** 2)
    raise SystemExit(f"unknown density {kind!r} (bubble, gaussian, uniform)")


def cmd_conc(cfg):
    s = parse_surface_spec(cfg["surface"])
    f = _conc_density(s, cfg)
    out = cfg["out"]
    try:
        rep = concentration_report(s, f, float(cfg["C1"]), cfg["tau"])
    except ThresholdError as exc:
        _write_json(os.path.join(out, "report.json"),
                    {"error": "ThresholdError", "message": str(exc), "max_T": exc.max_T})
        return _verdicts_file(out, [_v("S_nonempty", exc.max_T, cfg["tau"], 0.0,
                                       "threshold", False)])
    _write_json(os.path.join(out, "report.json"), rep.summary())
    for name, arr in (("sigma.csv", rep.sigma_of), ("T.csv", rep.T_of)):
        rows = [[i, repr(float(c[0])), repr(float(c[1])), repr(float(v))]
                for i, (c, v) in enumerate(zip(s.nodes, arr))]
        _atomic_write(os.path.join(out, name), _csv_text(["node", "c0", "c1", name[:-4]], rows))
    excess = float(np.max(rep.residual - rep.jump - 8 * np.finfo(float).eps))
    verdicts = [
        _v("sigma_identity", excess, 0.0, 0.0, "definition of sigma", excess <= 0.0),
        _v("step1_max_T", rep.max_T, 2 * rep.tau, 0.0, "covering bound",
           rep.max_T > 2 * rep.tau),
    ]
    return _verdicts_file(out, verdicts)


def _solver_cfg(cfg):
    return SolverConfig(cfg["method"], tol=float(cfg["tol"]), max_iter=int(cfg["max_iter"]))


def cmd_solve(cfg):
    s = parse_surface_spec(cfg["surface"])
    P = Problem(s, _singular_set(s, cfg), float(cfg["rho"]))
    u0 = None
    if cfg["bubble_center"] is not None:
        x = s.nearest_node(cfg["bubble_center"])
        u0 = make_bubble(s, BubbleParams(float(cfg["bubble_alpha"]), float(cfg["bubble_lambda"]),
                                         x))
    res = solve(P, _solver_cfg(cfg), u0)
    out = cfg["out"]
    rows = [[i, repr(float(c[0])), repr(float(c[1])), repr(float(v))]
            for i, (c, v) in enumerate(zip(s.nodes, res.u))]
    _atomic_write(os.path.join(out, "solution.csv"), _csv_text(["node", "c0", "c1", "u"], rows))
    summary = result_summary(res)
    verdicts = [_v("residual", res.residual, 0.0, float(cfg["tol"]), "solver tolerance",
                   res.converged)]
    if res.converged:
        chk = undo_change_of_variables(P, res.u)
        summary["normalization"] = chk["normalization"]
        summary["original_residual"] = chk["residual"]
        verdicts.append(_v("normalization", chk["normalization"], 1.0, 1e-8,
                           "undone change of variables",
                           abs(chk["normalization"] - 1.0) <= 1e-8))
    summary["local_masses"] = local_masses(P, res.u)
    _write_json(os.path.join(out, "summary.json"), summary)
    return _verdicts_file(out, verdicts)


def cmd_scan(cfg):
    s = parse_surface_spec(cfg["surface"])
    P = Problem(s, _singular_set(s, cfg), float(cfg["rho_start"]))
    rhos = np.linspace(float(cfg["rho_start"]), float(cfg["rho_stop"]), int(cfg["rho_num"]))
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    trace = os.path.join(out, "trace.jsonl")
    res = rho_continuation(P, rhos, _solver_cfg(cfg), trace_path=trace,
                           resume=bool(cfg["resume"]))
    recs = res["records"]
    conv = [r for r in recs if r["converged"]]
    quant = {"last_converged": conv[-1] if conv else None,
             "first_failure": next((r for r in recs if not r["converged"]), None),
             "note": "masses are measured on near-solutions along the continuation"}
    _write_json(os.path.join(out, "quantization.json"), quant)
    if res["u_last"] is not None:
        rows = [[i, repr(float(c[0])), repr(float(c[1])), repr(float(v))]
                for i, (c, v) in enumerate(zip(s.nodes, res["u_last"]))]
        _atomic_write(os.path.join(out, "solution.csv"), _csv_text(["node", "c0", "c1", "u"],
                                                                   rows))
    verdicts = [_v("all_converged", len(conv), len(rhos), 0, "continuation",
                   len(conv) == len(rhos))]
    return _verdicts_file(out, verdicts)


def cmd_acceptance(cfg):
    ids = [int(k) for k in cfg["criteria"]]
    base = [k for k in ids if k != 11]
    if 11 in ids and not base:
        base = list(range(1, 11))
    out = cfg["out"]
    lab_cfg = {k: v for k, v in cfg.items() if v is not None}
    first = lab.run_criteria(base, lab_cfg, cfg["jobs"])
    records = dict(first)
    if 11 in ids:
        second = lab.run_criteria(base, lab_cfg, cfg["jobs"])
        records[11] = lab.determinism(first, second)
    for k, rec in sorted(records.items()):
        _write_json(os.path.join(out, f"criterion_{k:02d}.json"), rec)
        print(f"criterion {k:2d} {'PASS' if rec['pass'] else 'FAIL'}  {rec['title']}")
    ok = all(r["pass"] for r in records.values())
    _write_json(os.path.join(out, "verdicts.json"),
                {"pass": ok, "criteria": {str(k): r["pass"] for k, r in sorted(records.items())}})
    return 0 if ok else 1


COMMANDS = {"bubble": cmd_bubble, "mt": cmd_mt, "conc": cmd_conc, "solve": cmd_solve,
            "scan": cmd_scan, "acceptance": cmd_acceptance}


# -- parser ------------------------------------------------------------------


def _pair(text):
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}")
    return [a, b]


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def build_parser():
    p = argparse.ArgumentParser(
        prog="liouville-lab",
        description="Numerical laboratory for the singular mean-field Liouville equation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, surface=True):
        sp.add_argument("--config", help="YAML file with option values (flags override it)")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("--seed", type=int, help="random seed recorded with the run")
        if surface:
            sp.add_argument("--surface", help="surface spec, e.g. torus:256, sphere:64x64:graded, "
                                              "disk:48x96:rmin=1e-8")
            sp.add_argument("--point", dest="points", action="append", type=_pair,
                            help="singular point in chart coordinates 'x,y' (repeatable)")
            sp.add_argument("--alpha-j", dest="alphas", action="append", type=float,
                            help="weight alpha_j of the matching --point (repeatable)")

    b = sub.add_parser("bubble", help="bubble energy scan and slope verdicts")
    common(b)
    b.add_argument("--alpha", type=float, help="bubble exponent alpha in [0, 2]")
    b.add_argument("--lmin", type=float, help="smallest lambda (default 10)")
    b.add_argument("--lmax", type=float, help="largest lambda (default: resolution limit)")
    b.add_argument("--per-decade", type=int, help="lambdas per decade (default 8)")
    b.add_argument("--center", type=_pair, help="bubble centre in chart coordinates")

    m = sub.add_parser("mt", help="Moser-Trudinger deficit scans")
    common(m)
    m.add_argument("--variant", choices=["Closed", "BoundaryFull", "BoundaryZero"],
                   help="deficit variant")
    m.add_argument("--coeffs", type=_floats,
                   help="comma-separated multiples of the sharp coefficient (default 1,0.9)")
    m.add_argument("--alpha", type=float, help="bubble exponent (and weight exponent)")
    m.add_argument("--weighted", action="store_true", default=None,
                   help="use the weight d(x, centre)^(2 alpha) and the constant 1/(4(1+alpha)pi)")
    m.add_argument("--lmin", type=float, help="smallest lambda")
    m.add_argument("--lmax", type=float, help="largest lambda (capped by the resolution)")
    m.add_argument("--per-decade", type=int, help="lambdas per decade")
    m.add_argument("--center", type=_pair, help="bubble centre in chart coordinates")

    c = sub.add_parser("conc", help="concentration radius, T, barycenter report")
    common(c)
    c.add_argument("--density", choices=["bubble", "gaussian", "uniform"], help="test density")
    c.add_argument("--lam", type=float, help="concentration of the test density")
    c.add_argument("--center", type=_pair, help="centre of the test density")
    c.add_argument("--C1", type=float, help="annulus ratio C1 > 2 (default 4)")
    c.add_argument("--tau", type=float, help="threshold (default from the covering number)")

    s = sub.add_parser("solve", help="solve the mean-field equation at one rho")
    common(s)
    s.add_argument("--rho", type=float, help="parameter rho > 0")
    s.add_argument("--method", choices=["Newton", "GradientFlow"], help="solver")
    s.add_argument("--tol", type=float, help="residual tolerance (default 1e-8)")
    s.add_argument("--max-iter", type=int, help="iteration cap")
    s.add_argument("--bubble-center", type=_pair, help="start from a bubble at this point")
    s.add_argument("--bubble-lambda", type=float, help="lambda of the starting bubble")
    s.add_argument("--bubble-alpha", type=float, help="alpha of the starting bubble")

    sc = sub.add_parser("scan", help="rho continuation with a JSON-lines trace")
    common(sc)
    sc.add_argument("--rho-start", type=float, help="first rho")
    sc.add_argument("--rho-stop", type=float, help="last rho")
    sc.add_argument("--rho-num", type=int, help="number of rho values")
    sc.add_argument("--method", choices=["Newton", "GradientFlow"], help="solver")
    sc.add_argument("--tol", type=float, help="residual tolerance")
    sc.add_argument("--max-iter", type=int, help="iteration cap per rho")
    sc.add_argument("--resume", action="store_true", default=None,
                    help="reuse records already in OUT/trace.jsonl")

    a = sub.add_parser("acceptance", help="run the acceptance criteria")
    common(a, surface=False)
    a.add_argument("--criteria", type=_ints, help="comma-separated criterion numbers 1-11")
    a.add_argument("--jobs", type=int,
                   help="parallel worker processes (capped by LIOUVILLE_LAB_THREADS)")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = effective_config(args.command, args, parser)
    if cfg.get("surface"):
        try:
            parse_surface_spec(cfg["surface"])
        except LabError as exc:
            parser.error(f"bad surface spec: {exc}")
    _echo(cfg)
    try:
        return COMMANDS[args.command](cfg)
    except ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return 2
    except LabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
