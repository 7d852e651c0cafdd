"""Standard and singular bubbles and their asymptotic diagnostics.

    phi_{alpha,lam,x}(y) = log( lam^(1+alpha) / (1 + (lam d(x,y))^(2(1+alpha))) )

Every scan refuses concentration parameters whose core {lam d <= 1} holds
fewer than ``MIN_CORE_NODES`` nodes, so asymptotic slopes are only fitted
where the grid resolves the bubble.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ResolutionError
from .functional import Problem, eval_I_rho, log_integral
from .greens import SingularSet, log_tilde_h
from .surface import Surface

__all__ = [
    "BubbleParams",
    "make_bubble",
    "lambda_max",
    "check_resolution",
    "geometric_lambdas",
    "bubble_asymptotics",
    "singular_mass_lower_bound",
    "measure_concentration",
    "alpha_window",
    "energy_slope",
    "bubble_scan",
    "write_scan_csv",
]

MIN_CORE_NODES = 4


@dataclass(frozen=True)
class BubbleParams:
    alpha: float
    lam: float
    center: int

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 2.0:
            raise ConfigurationError(f"alpha must lie in [0, 2], got {self.alpha}")
        if not self.lam >= 1.0:
            raise ConfigurationError(f"lambda must be >= 1, got {self.lam}")


def _profile(d, alpha, lam):
    a1 = 1.0 + alpha
    with np.errstate(divide="ignore"):
        return a1 * np.log(lam) - np.logaddexp(0.0, 2.0 * a1 * np.log(lam * d))


def make_bubble(s: Surface, p: BubbleParams) -> np.ndarray:
    return _profile(s.distances_from(p.center), p.alpha, p.lam)


def lambda_max(s: Surface, center: int) -> float:
    """Largest lambda whose core {lam d <= 1} still holds MIN_CORE_NODES nodes."""
    d = np.partition(s.distances_from(center), MIN_CORE_NODES - 1)[MIN_CORE_NODES - 1]
    return float(1.0 / d)


def check_resolution(s: Surface, center: int, lam: float):
    d = s.distances_from(center)
    n_core = int(np.count_nonzero(lam * d <= 1.0))
    if n_core < MIN_CORE_NODES:
        raise ResolutionError(
            f"bubble core at lambda={lam:.4g} holds {n_core} < {MIN_CORE_NODES} nodes "
            f"(lambda_max = {lambda_max(s, center):.4g})")


def geometric_lambdas(lo: float, hi: float, per_decade: int = 8) -> np.ndarray:
    n = max(2, int(round(per_decade * np.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, n)


def energy_slope(alpha: float, rho: float, alpha_i: float = 0.0) -> float:
    """Predicted d I_rho / d log(lam) along phi_{alpha,lam,x} near a point of weight alpha_i."""
    a1 = 1.0 + alpha
    return 2.0 * (4 * np.pi * a1**2 - a1 * rho - rho * (alpha - alpha_i))


def alpha_window(rho: float, sing: SingularSet) -> tuple:
    """(alpha~, rho/4pi - 1) with alpha~ the largest alpha_i outside J_rho (0 if none)."""
    outside = [a for a in sing.alphas if not rho < 4 * np.pi * (1 + a)]
    return (max(outside, default=0.0), rho / (4 * np.pi) - 1.0)


def _fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def bubble_asymptotics(s: Surface, alpha: float, center: int, lambdas) -> dict:
    """Least-squares slopes of the Dirichlet energy and the mean against log lambda."""
    lambdas = np.asarray(lambdas, float)
    for lam in lambdas:
        check_resolution(s, center, lam)
    d = s.distances_from(center)
    D, M = [], []
    for lam in lambdas:
        phi = _profile(d, alpha, lam)
        D.append(s.dirichlet(phi))
        M.append(s.mean(phi))
    L = np.log(lambdas)
    sD, sM = _fit(L, np.array(D)), _fit(L, np.array(M))
    tD, tM = 8 * np.pi * (1 + alpha) ** 2, -(1 + alpha)
    return {
        "alpha": float(alpha),
        "lambdas": lambdas.tolist(),
        "dirichlet": D,
        "mean": M,
        "dirichlet_slope": sD,
        "dirichlet_target": tD,
        "dirichlet_rel_dev": abs(sD - tD) / abs(tD),
        "mean_slope": sM,
        "mean_target": tM,
        "mean_rel_dev": abs(sM - tM) / abs(tM),
        "lambda_max": lambda_max(s, center),
    }


def _default_delta(s):
    return 0.2 * {"torus": 0.5, "sphere": np.pi, "disk": 1.0}[s.kind]


def singular_mass_lower_bound(s: Surface, sing: SingularSet, alpha: float, center: int,
                              lambdas, index: int = 0, delta=None, log_h=None) -> dict:
    """Scaling of int h~ e^{2 phi} against lam^{2(alpha - alpha_i)}.

    Reports log-mass values, their slope against log lambda, the minimum of
    the ratio int / lam^{2(alpha - alpha_i)} and the mass split over the
    regions B1 = B_x(sqrt(delta) r0), B2 = B_x(r0/sqrt(delta)) minus B1 and
    B3 = B_x(delta) minus B2, with r0 = d(x, p_i).
    """
    lambdas = np.asarray(lambdas, float)
    for lam in lambdas:
        check_resolution(s, center, lam)
    if delta is None:
        delta = _default_delta(s)
    if log_h is None:
        log_h = log_tilde_h(s, sing)
    p, a_i = (sing.points[index], sing.alphas[index]) if len(sing) else (None, 0.0)
    d = s.distances_from(center)
    r0 = 0.0 if p is None else s.geodesic_distance(center, p)
    radii = (np.sqrt(delta) * r0, r0 / np.sqrt(delta), delta)
    region = np.digitize(d, radii, right=True)  # 0: B1, 1: B2, 2: B3, 3: outside
    logs, splits = [], []
    for lam in lambdas:
        phi = _profile(d, alpha, lam)
        with np.errstate(divide="ignore"):
            t = np.log(s.weights) + log_h + 2.0 * phi
        m = np.exp(t - t.max())
        total = m.sum()
        logs.append(float(t.max() + np.log(total)))
        splits.append([float(m[region == k].sum() / total) for k in range(4)])
    L = np.log(lambdas)
    logs = np.array(logs)
    expo = 2.0 * (alpha - a_i)
    ratio = logs - expo * L
    slope = _fit(L, logs) if len(L) > 1 else float("nan")
    return {
        "alpha": float(alpha),
        "alpha_i": float(a_i),
        "lambdas": lambdas.tolist(),
        "log_mass": logs.tolist(),
        "slope": slope,
        "target_slope": expo,
        "min_log_ratio": float(ratio.min()),
        "ratio_decay": float(ratio[0] - ratio[-1]),
        "regions": {"radii": [float(r) for r in radii], "fractions": splits},
        "center_distance": float(r0),
    }


def measure_concentration(s: Surface, sing: SingularSet, alpha: float, center: int, lambdas,
                          eps: float, log_h=None) -> dict:
    """Fraction of the mass of h~ e^{2 phi} outside B_x(eps) along a lambda scan."""
    lambdas = np.asarray(lambdas, float)
    for lam in lambdas:
        if lam > 1.0:
            check_resolution(s, center, lam)
    if log_h is None:
        log_h = log_tilde_h(s, sing)
    d = s.distances_from(center)
    outside = d > eps
    fr = []
    for lam in lambdas:
        with np.errstate(divide="ignore"):
            t = np.log(s.weights) + log_h + 2.0 * _profile(d, alpha, lam)
        m = np.exp(t - t.max())
        fr.append(float(m[outside].sum() / m.sum()))
    fr = np.array(fr)
    return {
        "lambdas": lambdas.tolist(),
        "outside_mass": fr.tolist(),
        "monotone": bool(np.all(np.diff(fr) <= 0.0)),
        "pass": bool(fr[-1] < 1e-2),
    }


def bubble_scan(P: Problem, alpha: float, centers, lambdas, eps: float = 0.1) -> list:
    """Rows (alpha, lambda, x_id, dirichlet, mean, log_mass, I_rho, outside_mass)."""
    s = P.surface
    rows = []
    for x in centers:
        d = s.distances_from(x)
        for lam in lambdas:
            check_resolution(s, x, lam)
            phi = _profile(d, alpha, lam)
            lm = log_integral(s, phi, P.log_h)
            with np.errstate(divide="ignore"):
                t = np.log(s.weights) + P.log_h + 2.0 * phi
            m = np.exp(t - lm)
            rows.append({
                "alpha": float(alpha), "lambda": float(lam), "x_id": int(x),
                "dirichlet": s.dirichlet(phi), "mean": s.mean(phi), "log_mass": lm,
                "I_rho": eval_I_rho(P, phi), "outside_mass": float(m[d > eps].sum()),
            })
    return rows


def write_scan_csv(path, rows):
    cols = ["alpha", "lambda", "x_id", "dirichlet", "mean", "log_mass", "I_rho", "outside_mass"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([r[c] if isinstance(r[c], int) else repr(float(r[c])) for c in cols])
