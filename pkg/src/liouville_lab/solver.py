"""Solvers for -Lap u = rho (h~ e^{2u} / int h~ e^{2u} - 1/|S|) on closed surfaces.

Two methods share one driver:

* ``GradientFlow`` -- preconditioned descent on I_rho, u <- u - t (c - 2 Lap)^{-1} r,
  with Armijo backtracking so that I_rho never increases;
* ``Newton`` -- Newton's method on the residual r = grad I_rho with the
  mean-zero gauge, damped by backtracking on |r|.

Iterates always satisfy int u = 0.  ``rho_continuation`` warm-starts
solves along a rho grid and records blow-up indicators.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .errors import ConfigurationError, NumericalBlowupError
from .functional import Problem, density, eval_I_rho, grad_I_rho, hessian_apply
from .greens import green_function

__all__ = [
    "SolverConfig",
    "SolveResult",
    "solve",
    "residual_norm",
    "undo_change_of_variables",
    "local_masses",
    "concentration_radius",
    "rho_continuation",
    "compactness_scan",
    "arclength_continuation",
    "resolved",
    "concentration_point",
    "quadratic_convergence",
    "read_trace",
]


@dataclass
class SolverConfig:
    method: str = "Newton"
    tol: float = 1e-8
    max_iter: int = 200
    flow_shift: float | None = None     # c in the flow preconditioner (default 4 rho / |S|)
    min_damping: float = 2.0 ** -12     # smallest accepted Newton step
    mean_gauge: bool = True
    max_u_cap: float | None = None      # stop (as concentration) once max u exceeds this

    def __post_init__(self):
        if self.method not in ("Newton", "GradientFlow"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")


@dataclass
class SolveResult:
    u: np.ndarray = field(repr=False)
    converged: bool
    status: str
    iterations: int
    residual: float
    I_rho: float
    residual_history: list = field(default_factory=list, repr=False)
    I_history: list = field(default_factory=list, repr=False)
    max_u_history: list = field(default_factory=list, repr=False)


def residual_norm(P: Problem, u) -> float:
    r = grad_I_rho(P, u)
    return math.sqrt(max(P.surface.integrate(r * r), 0.0))


def _gauge(s, u):
    return u - s.mean(u)


def _stiffness_solver(P, K, f):
    # (2K - 4 rho diag(m) + 4 rho m m^T) x = W b, bordered by the weights
    s = P.surface
    w = s.weights
    m = f * w
    n = s.n_nodes
    A = 2.0 * K - 4.0 * P.rho * sp.diags(m)
    lu = splu(sp.bmat([[A, w[:, None]], [w[None, :], None]], format="csc"))
    z = np.append(m, 0.0)
    q = lu.solve(z)
    denom = 1.0 + 4.0 * P.rho * np.dot(z, q)

    def run(b):
        y = lu.solve(np.append(w * b, 0.0))
        # Sherman-Morrison for the rank-one term 4 rho z z^T
        return (y - (4.0 * P.rho * np.dot(z, y) / denom) * q)[:n]

    return run


def _hessian_solver(P, u, f):
    """Return a solver b -> x for H(u) x = b on mean-zero fields.

    Sparse surfaces factor H directly.  On the torus H is spectral; GMRES
    is preconditioned with the factored five-point version of H.
    """
    s = P.surface
    if s.kind != "torus":
        return _stiffness_solver(P, s.graph_laplacian, f)
    n = s.n_nodes
    pre = _stiffness_solver(P, s.fd_stiffness, f)

    def apply(v):
        v = v - v.mean()
        out = hessian_apply(P, u, v, f)
        return out - out.mean()

    A = LinearOperator((n, n), matvec=apply, dtype=float)
    M = LinearOperator((n, n), matvec=pre, dtype=float)

    def run(b):
        b = b - b.mean()
        x, _ = gmres(A, b, M=M, rtol=1e-10, atol=0.0, restart=60, maxiter=10)
        return x - x.mean()

    return run


def _newton_direction(P, u, r, f):
    return _hessian_solver(P, u, f)(-r)


def _check_finite(u, where):
    if not np.all(np.isfinite(u)):
        raise NumericalBlowupError(f"non-finite iterate in {where}")


def solve(P: Problem, cfg: SolverConfig | None = None, u0=None) -> SolveResult:
    """Solve the mean-field equation starting from ``u0`` (default 0)."""
    cfg = cfg or SolverConfig()
    s = P.surface
    if not s.closed:
        raise ConfigurationError("solve needs a closed surface")
    u = np.zeros(s.n_nodes) if u0 is None else np.array(u0, dtype=float)
    _check_finite(u, "initial guess")
    if cfg.mean_gauge:
        u = _gauge(s, u)
    I = eval_I_rho(P, u)
    r = grad_I_rho(P, u)
    res = math.sqrt(max(s.integrate(r * r), 0.0))
    R, Ih, Mh = [res], [I], [float(u.max())]
    shift = cfg.flow_shift if cfg.flow_shift is not None else 4.0 * P.rho / s.total_area
    step = 1.0
    status = "converged" if res <= cfg.tol else "max_iter"
    it = 0
    while res > cfg.tol and it < cfg.max_iter:
        it += 1
        if cfg.method == "GradientFlow":
            d = -s.solve_shifted(shift, r)
            slope = s.integrate(r * d)
            noise = 1e-12 * max(1.0, abs(I))
            t = min(1.0, 2.0 * step)
            accepted = False
            while t >= 1e-12:
                trial = u + t * d
                if cfg.mean_gauge:
                    trial = _gauge(s, trial)
                It = eval_I_rho(P, trial)
                if It <= I + 1e-4 * t * slope:
                    accepted = True
                elif It <= I + noise:
                    # energy change below rounding: fall back on the residual
                    rt = grad_I_rho(P, trial)
                    accepted = s.integrate(rt * rt) < res * res
                if accepted:
                    break
                t *= 0.5
            if not accepted:
                status = "stalled"
                break
            step = t
            u, I = trial, It
            r = grad_I_rho(P, u)
            res = math.sqrt(max(s.integrate(r * r), 0.0))
        else:
            f = density(P, u)
            d = _newton_direction(P, u, r, f)
            _check_finite(d, "Newton direction")
            t = 1.0
            while True:
                trial = u + t * d
                if cfg.mean_gauge:
                    trial = _gauge(s, trial)
                rt = grad_I_rho(P, trial)
                rest = math.sqrt(max(s.integrate(rt * rt), 0.0))
                if np.isfinite(rest) and (rest < (1.0 - 1e-4 * t) * res or t <= cfg.min_damping):
                    break
                t *= 0.5
            if not np.isfinite(rest) or rest >= res:
                status = "stalled"
                break
            u, r, res = trial, rt, rest
            I = eval_I_rho(P, u)
        _check_finite(u, cfg.method)
        R.append(res)
        Ih.append(I)
        Mh.append(float(u.max()))
        if cfg.max_u_cap is not None and Mh[-1] > cfg.max_u_cap:
            status = "concentration"
            break
    if res <= cfg.tol:
        status = "converged"
    return SolveResult(u, status == "converged", status, it, res, I, R, Ih, Mh)


def quadratic_convergence(history, window: int = 3) -> bool:
    """Residual ratio test on the last ``window`` iterates.

    The observed order log(r_{k+1}/r_k) / log(r_k/r_{k-1}) must exceed 1.5
    at the end of a strictly decreasing tail.
    """
    h = [v for v in history if v > 0]
    if len(h) < window:
        return False
    tail = np.log(np.asarray(h[-window:]))
    steps = np.diff(tail)
    if not np.all(steps < 0):
        return False
    return bool(steps[-1] / steps[-2] > 1.5)


def undo_change_of_variables(P: Problem, v) -> dict:
    """Recover u = v - 2 pi sum alpha_j G_j - (1/2) log int h~ e^{2v} and check it.

    Returns the field, the normalization int h e^{2u} (should be 1) and the
    L2 residual of -Lap u - rho h e^{2u} + 2 pi sum alpha_j delta_j - c,
    with c = (2 pi sum alpha_j - rho)/|S| and he^{2u} set to 0 at the p_j.
    """
    s = P.surface
    from .functional import log_integral

    h = P.sing.background(s)
    u = np.array(v, dtype=float)
    deltas = np.zeros(s.n_nodes)
    for p, a in zip(P.sing.points, P.sing.alphas):
        u -= 2.0 * np.pi * a * green_function(s, p).values
        deltas[p] += 2.0 * np.pi * a / s.weights[p]
    u -= 0.5 * log_integral(s, v, P.log_h)
    he = h * np.exp(2.0 * u)
    he[list(P.sing.points)] = 0.0
    c = (2.0 * np.pi * sum(P.sing.alphas) - P.rho) / s.total_area
    res = -s.laplacian(u) - P.rho * he + deltas - c
    return {
        "u": u,
        "normalization": s.integrate(he),
        "residual": math.sqrt(max(s.integrate(res * res), 0.0)),
    }


# -- blow-up diagnostics ------------------------------------------------------


def concentration_radius(s, f, q, fraction: float = 0.5) -> float:
    """Radius of the smallest node ball around ``q`` holding ``fraction`` of f."""
    d = s.distances_from(q)
    order = np.argsort(d, kind="stable")
    cum = np.cumsum((f * s.weights)[order])
    k = int(np.searchsorted(cum, fraction * cum[-1]))
    return float(d[order[min(k, len(d) - 1)]])


def concentration_point(P: Problem, u, f=None):
    """(node, half-mass radius) for the tightest of argmax f and the singular points."""
    s = P.surface
    if f is None:
        f = density(P, u)
    cands = [int(np.argmax(f))] + list(P.sing.points)
    radii = [concentration_radius(s, f, c) for c in cands]
    k = int(np.argmin(radii))
    return cands[k], radii[k]


def local_masses(P: Problem, u, r=None) -> dict:
    """rho * int_{B_q(r)} f around the concentration point, the density maximum and each p_j.

    With ``r=None`` a shrinking radius is used: the square root of the
    radius holding half of the mass around the centre (capped at 1/4 of
    the surface diameter), so that r -> 0 while r / (bubble scale) -> oo.
    """
    s = P.surface
    f = density(P, u)
    c, _ = concentration_point(P, u, f)
    centers = [("concentration", c), ("max", int(np.argmax(f)))]
    centers += [(f"p{j}", int(p)) for j, p in enumerate(P.sing.points)]
    out = {}
    for name, q in centers:
        half = concentration_radius(s, f, q)
        rr = r
        if rr is None:
            rr = min(math.sqrt(half), 0.25 * s.diameter())
        inside = s.distances_from(q) <= rr
        out[name] = {"node": q, "radius": float(rr), "half_mass_radius": float(half),
                     "mass": float(P.rho * np.dot(s.weights[inside], f[inside]))}
    return out


# -- continuation -------------------------------------------------------------


def _record(P, res, r_local):
    return {
        "rho": float(P.rho),
        "converged": bool(res.converged),
        "status": res.status,
        "iterations": int(res.iterations),
        "residual": float(res.residual),
        "I_rho": float(res.I_rho),
        "max_u": float(np.max(res.u)),
        "local_masses": local_masses(P, res.u, r_local),
    }


def read_trace(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _append(path, rec):
    if path is None:
        return
    with open(path, "a") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def rho_continuation(P: Problem, rhos, cfg: SolverConfig | None = None, u0=None,
                     r_local=None, bisect: int = 4, stop_on_failure: bool = True,
                     trace_path=None, resume: bool = False, keep_fields: bool = False) -> dict:
    """Warm-started solves along a monotone rho grid.

    On the first failure the interval to the last converged rho is bisected
    ``bisect`` times.  Records are written (as JSON lines) in increasing
    order of the continuation direction.  With ``resume`` the records
    already in ``trace_path`` are reused and the last converged field is
    recomputed from its rho before continuing.
    """
    cfg = cfg or SolverConfig()
    rhos = [float(x) for x in rhos]
    if len(rhos) < 1:
        raise ConfigurationError("empty rho grid")
    diffs = np.diff(rhos)
    if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ConfigurationError("rho grid must be strictly monotone")
    sign = 1.0 if len(diffs) == 0 or diffs[0] > 0 else -1.0
    for rho in rhos:
        for a in P.sing.alphas:
            if abs(rho - 4 * np.pi * (1 + a)) < 1e-12:
                raise ConfigurationError("rho grid hits a threshold 4 pi (1 + alpha_j)")
    records = []
    u = None if u0 is None else np.array(u0, float)
    done = set()
    if resume and trace_path and os.path.exists(trace_path):
        records = read_trace(trace_path)
        done = {r["rho"] for r in records}
        conv = [r for r in records if r["converged"]]
        if conv:
            res = solve(P.with_rho(conv[-1]["rho"]), cfg, u)
            u = res.u
    elif trace_path:
        open(trace_path, "w").close()
    fields = {}
    last_ok = None
    if records:
        conv = [r["rho"] for r in records if r["converged"]]
        last_ok = conv[-1] if conv else None
        if any(not r["converged"] for r in records) and stop_on_failure:
            return {"records": records, "fields": fields, "u_last": u}
    for rho in rhos:
        if rho in done:
            continue
        Pr = P.with_rho(rho)
        res = solve(Pr, cfg, u)
        if res.converged:
            rec = _record(Pr, res, r_local)
            records.append(rec)
            _append(trace_path, rec)
            u, last_ok = res.u, rho
            if keep_fields:
                fields[rho] = res.u
            continue
        batch = [_record(Pr, res, r_local)]
        if last_ok is not None:
            lo, hi, ulo = last_ok, rho, u
            for _ in range(bisect):
                mid = 0.5 * (lo + hi)
                rm = solve(P.with_rho(mid), cfg, ulo)
                batch.append(_record(P.with_rho(mid), rm, r_local))
                if rm.converged:
                    lo, ulo = mid, rm.u
                    if keep_fields:
                        fields[mid] = rm.u
                else:
                    hi = mid
            u, last_ok = ulo, lo
        batch.sort(key=lambda rec: sign * rec["rho"])
        for rec in batch:
            records.append(rec)
            _append(trace_path, rec)
        if stop_on_failure:
            break
    return {"records": records, "fields": fields, "u_last": u}


def resolved(P: Problem, u, min_cells: float = 2.0) -> bool:
    """True while the half-mass radius at the concentration point spans min_cells cells."""
    c, r = concentration_point(P, u)
    return bool(r >= min_cells * P.surface.cell_size(c))


def arclength_continuation(P: Problem, u0, ds: float = 0.25, ds_max: float = 2.0,
                           max_steps: int = 200, direction=None, tol: float = 1e-8,
                           rho_bounds=(1e-6, np.inf), r_local=None, min_cells: float = 2.0,
                           trace_path=None) -> dict:
    """Pseudo-arclength continuation of the branch through (u0, P.rho).

    ``u0`` must solve the equation at ``P.rho``.  The predictor follows the
    tangent of the branch, the corrector is Newton on the system bordered
    by the arclength condition, so folds in rho are passed.  ``direction``
    orients the first tangent: "up"/"down" in rho, "concentrate" towards
    growing max u, or None (increasing rho).  The run stops when the density
    is no longer resolved (see ``resolved``), when rho leaves
    ``rho_bounds``, or when the step size collapses.  The record of the last resolved iterate is returned
    as ``last_resolved``.
    """
    s = P.surface
    u = _gauge(s, np.array(u0, float))
    rho = float(P.rho)
    if residual_norm(P, u) > 1e3 * tol:
        raise ConfigurationError("initial field is not a solution at P.rho")

    def ip(a, b):
        return s.integrate(a * b)

    def parts(Pr, v):
        f = density(Pr, v)
        F = grad_I_rho(Pr, v)
        Fr = -2.0 * (f - 1.0 / s.total_area)
        return f, F - s.mean(F), Fr - s.mean(Fr)

    def tangent(Pr, v, prev):
        f, _, Fr = parts(Pr, v)
        a = _hessian_solver(Pr, v, f)(-Fr)
        t_u, t_r = a, 1.0
        nrm = math.sqrt(ip(t_u, t_u) + t_r * t_r)
        t_u, t_r = t_u / nrm, t_r / nrm
        if prev is None:
            sign = 1.0
            if direction == "down":
                sign = -1.0
            elif direction == "concentrate":
                sign = 1.0 if t_u[int(np.argmax(v))] > 0 else -1.0
        else:
            sign = 1.0 if ip(t_u, prev[0]) + t_r * prev[1] >= 0 else -1.0
        return sign * t_u, sign * t_r

    records = []
    if trace_path:
        open(trace_path, "w").close()
    rec = _record(P, SolveResult(u, True, "converged", 0, residual_norm(P, u), eval_I_rho(P, u)),
                  r_local)
    rec["resolved"] = resolved(P, u, min_cells)
    records.append(rec)
    _append(trace_path, rec)
    last = rec
    tan = None
    status = "max_steps"
    for _ in range(max_steps):
        tan = tangent(P.with_rho(rho), u, tan)
        ok = False
        while ds >= 1e-6:
            v = u + ds * tan[0]
            rv = rho + ds * tan[1]
            for k in range(10):
                if not rv > 0:
                    break
                Pr = P.with_rho(rv)
                f, F, Fr = parts(Pr, v)
                res = math.sqrt(max(ip(F, F), 0.0))
                if res <= tol:
                    # a long corrector path means the step jumped to another branch
                    e = v - (u + ds * tan[0])
                    ok = math.sqrt(ip(e, e) + (rv - rho - ds * tan[1]) ** 2) <= 0.5 * ds
                    break
                if not np.isfinite(res):
                    break
                solve_h = _hessian_solver(Pr, v, f)
                x1 = solve_h(-F)
                x2 = solve_h(-Fr)
                N = ip(v - u, tan[0]) + (rv - rho) * tan[1] - ds
                drho = (-N - ip(tan[0], x1)) / (ip(tan[0], x2) + tan[1])
                v = _gauge(s, v + x1 + drho * x2)
                rv += drho
            if ok:
                break
            ds *= 0.5
        if not ok:
            status = "step_collapse"
            break
        P_new = P.with_rho(rv)
        if not (rho_bounds[0] < rv < rho_bounds[1]):
            status = "rho_bounds"
            break
        if not resolved(P_new, v, min_cells):
            status = "unresolved"
            rec = _record(P_new, SolveResult(v, True, "converged", k, res, eval_I_rho(P_new, v)),
                          r_local)
            rec["resolved"] = False
            records.append(rec)
            _append(trace_path, rec)
            break
        u, rho = v, rv
        rec = _record(P_new, SolveResult(v, True, "converged", k, res, eval_I_rho(P_new, v)),
                      r_local)
        rec["resolved"] = True
        records.append(rec)
        _append(trace_path, rec)
        last = rec
        if k <= 3:
            ds = min(ds * 1.5, ds_max)
    return {"records": records, "last_resolved": last, "status": status, "u_last": u,
            "rho_last": rho}


def compactness_scan(P: Problem, rhos, cfg: SolverConfig | None = None, u0=None,
                     bound: float | None = None) -> dict:
    """Sup norms and max |Lap u| of solutions across a rho window.

    The window must avoid the thresholds 4 pi (1 + alpha_j) and 4 pi N.
    PASS when every sample converges and the sup norms stay below ``bound``
    (default: 10 times the largest sup norm of the first sample, plus 1).
    """
    rhos = [float(x) for x in rhos]
    for rho in rhos:
        marks = [4 * np.pi * (1 + a) for a in P.sing.alphas] + [4 * np.pi, 8 * np.pi]
        if any(abs(rho - m) < 1e-9 for m in marks):
            raise ConfigurationError(f"rho = {rho} touches a threshold")
    if not rhos:
        return {"pass": True, "warning": "empty solution set", "samples": []}
    out = rho_continuation(P, rhos, cfg, u0, stop_on_failure=False, bisect=0, keep_fields=True)
    samples = []
    s = P.surface
    for rec in out["records"]:
        u = out["fields"].get(rec["rho"])
        if u is None:
            samples.append({"rho": rec["rho"], "converged": False})
            continue
        samples.append({"rho": rec["rho"], "converged": True, "sup": float(np.max(np.abs(u))),
                        "lap_sup": float(np.max(np.abs(s.laplacian(u))))})
    ok = [x for x in samples if x["converged"]]
    if bound is None and ok:
        bound = 10.0 * ok[0]["sup"] + 1.0
    passed = len(ok) == len(samples) and all(x["sup"] <= bound for x in ok)
    return {"pass": bool(passed), "bound": bound, "samples": samples}


def result_summary(res: SolveResult) -> dict:
    d = asdict(res)
    d.pop("u")
    return d
