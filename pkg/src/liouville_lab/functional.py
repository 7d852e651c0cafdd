"""The functional I_rho, its L2 gradient and Hessian, and Moser-Trudinger deficits.

    I_rho(u) = int |grad u|^2 + 2 rho/|S| int u - rho log int h~ e^{2u}

All exponentials are evaluated after subtracting the maximum exponent, so
finite inputs never produce overflow.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, PreconditionError
from .greens import SingularSet, log_tilde_h
from .surface import Surface

__all__ = [
    "Problem",
    "log_integral",
    "eval_I_rho",
    "grad_I_rho",
    "hessian_apply",
    "density",
    "mt_deficit",
    "local_mt_deficit",
    "chen_li_condition",
    "troyanov_constant",
    "stabilizes",
    "improved_inequality_probe",
    "write_deficit_csv",
]

VARIANTS = ("Closed", "BoundaryFull", "BoundaryZero")


@dataclass
class Problem:
    """Surface, singular set and parameter rho, with h~ cached."""

    surface: Surface
    sing: SingularSet
    rho: float
    log_h: np.ndarray = field(default=None, repr=False)
    h_key: str = field(default="", repr=False)

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigurationError(f"rho must be positive, got {self.rho}")
        if self.log_h is None:
            self.log_h = log_tilde_h(self.surface, self.sing)
            self.h_key = self.sing.key()
        elif self.h_key != self.sing.key():
            raise ConfigurationError("cached h~ does not match the singular set")

    @property
    def tilde_h(self) -> np.ndarray:
        return np.exp(self.log_h)

    @property
    def J_rho(self) -> tuple:
        """Singular points p_i with rho < 4 pi (1 + alpha_i)."""
        return tuple(p for p, a in zip(self.sing.points, self.sing.alphas)
                     if self.rho < 4 * np.pi * (1 + a))

    def with_rho(self, rho: float) -> "Problem":
        return Problem(self.surface, self.sing, rho, self.log_h, self.h_key)


def _log_terms(s, log_weight, u):
    with np.errstate(divide="ignore"):
        return np.log(s.weights) + log_weight + 2.0 * np.asarray(u, float)


def log_integral(s: Surface, u, log_weight=None) -> float:
    """log int weight * e^{2u}, stabilized."""
    lw = 0.0 if log_weight is None else log_weight
    return float(logsumexp(_log_terms(s, lw, u)))


def density(P: Problem, u) -> np.ndarray:
    """f = h~ e^{2u} / int h~ e^{2u} (a probability density)."""
    t = _log_terms(P.surface, P.log_h, u)
    return np.exp(t - logsumexp(t)) / P.surface.weights


def eval_I_rho(P: Problem, u) -> float:
    s = P.surface
    u = np.asarray(u, float)
    return (s.dirichlet(u) + 2.0 * P.rho * s.mean(u)
            - P.rho * log_integral(s, u, P.log_h))


def grad_I_rho(P: Problem, u) -> np.ndarray:
    """L2 gradient -2 Lap u - 2 rho (f - 1/|S|); its integral against v is dI(u)[v]."""
    s = P.surface
    f = density(P, u)
    return -2.0 * s.laplacian(u) - 2.0 * P.rho * (f - 1.0 / s.total_area)


def hessian_apply(P: Problem, u, v, f=None) -> np.ndarray:
    """L2 Hessian of I_rho at ``u`` applied to ``v``."""
    s = P.surface
    if f is None:
        f = density(P, u)
    v = np.asarray(v, float)
    fv = f * v
    return -2.0 * s.laplacian(v) - 4.0 * P.rho * (fv - f * s.integrate(fv))


# -- Moser-Trudinger deficits ------------------------------------------------


def mt_deficit(s: Surface, u, variant: str = "Closed", coeff: float = 1 / (4 * np.pi),
               weight=None) -> float:
    """log int w e^{2u} - coeff * int |grad u|^2 - 2 mean(u).

    The mean term is dropped for ``BoundaryZero`` (u vanishing on the
    boundary).  ``weight`` is an optional nonnegative field w (default 1).
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}")
    if (variant == "Closed") != s.closed:
        raise ConfigurationError(f"variant {variant} does not apply to a {s.kind}")
    u = np.asarray(u, float)
    if variant == "BoundaryZero" and np.any(u[s.boundary] != 0.0):
        raise PreconditionError("BoundaryZero deficit needs u = 0 on the boundary")
    lw = None
    if weight is not None:
        with np.errstate(divide="ignore"):
            lw = np.log(np.asarray(weight, float))
    out = log_integral(s, u, lw) - coeff * s.dirichlet(u)
    if variant != "BoundaryZero":
        out -= 2.0 * s.mean(u)
    return float(out)


def local_mt_deficit(s: Surface, u, region, coeff: float = 1 / (4 * np.pi), weight=None) -> float:
    """log int_region w e^{2u} - coeff * int_S |grad u|^2 - 2 mean_S(u)."""
    mask = np.zeros(s.n_nodes, dtype=bool)
    mask[np.asarray(region)] = True
    lw = np.zeros(s.n_nodes) if weight is None else np.log(np.maximum(np.asarray(weight, float), 0.0))
    lw = np.where(mask, lw, -np.inf)
    return float(log_integral(s, u, lw) - coeff * s.dirichlet(u) - 2.0 * s.mean(u))


def chen_li_condition(s: Surface, tilde_h, u, omega1, omega2, gamma0: float) -> bool:
    """True iff each region carries at least gamma0 of the mass of h~ e^{2u}."""
    if not 0.0 < gamma0 < 0.5:
        raise ConfigurationError("gamma0 must lie in (0, 1/2)")
    o1 = np.unique(np.asarray(omega1, dtype=int))
    o2 = np.unique(np.asarray(omega2, dtype=int))
    if np.intersect1d(o1, o2).size:
        raise ConfigurationError("regions overlap")
    with np.errstate(divide="ignore"):
        t = _log_terms(s, np.log(np.asarray(tilde_h, float)), u)
    total = logsumexp(t)
    shares = [np.exp(logsumexp(t[o]) - total) for o in (o1, o2)]
    return bool(min(shares) >= gamma0)


def troyanov_constant(alphas) -> float:
    """Sharp constant of the weighted inequality when h~ ~ d^{2 alpha_i} near p_i."""
    m = min([1.0] + [1.0 + float(a) for a in alphas])
    return 1.0 / (4.0 * np.pi * m)


# -- boundedness probes ----------------------------------------------------


def stabilizes(lambdas, values, direction: str = "max", rel: float = 0.01,
               noise: float = 1e-9) -> dict:
    """Empirical boundedness test along a lambda scan.

    The running extremum (``max`` for "bounded above", ``min`` for
    "bounded below") must move by at most ``rel`` times the total range of
    the values over the last decade of lambda.  Variations below ``noise``
    (relative to the magnitude of the values) count as no variation.
    """
    lam = np.asarray(lambdas, float)
    v = np.asarray(values, float)
    if lam.size < 2 or np.any(np.diff(lam) <= 0):
        raise ConfigurationError("need an increasing lambda grid with at least two points")
    run = np.maximum.accumulate(v) if direction == "max" else np.minimum.accumulate(v)
    start = np.searchsorted(lam, lam[-1] / 10.0)
    if start >= lam.size - 1 or lam[-1] < 10 * lam[0]:
        start = 0
    change = abs(run[-1] - run[start])
    total = float(v.max() - v.min())
    floor = noise * max(1.0, float(np.max(np.abs(v))))
    passed = bool(change <= rel * total or total <= floor)
    return {"pass": passed, "last_decade_change": float(change), "total_range": total,
            "running_extreme": float(run[-1])}


def improved_inequality_probe(P: Problem, family, p_index: int = 0, constrain: bool = True,
                              C1: float = 4.0, tau=None) -> dict:
    """Bounded-below probe of I_rho on a family of fields.

    ``family`` yields ``(lam, u)`` pairs with increasing lam.  With
    ``constrain`` each member is kept only if its barycenter is the
    singular point ``P.sing.points[p_index]``; rejected members are counted.
    """
    from .concentration import barycenter

    p = P.sing.points[p_index] if P.sing.points else None
    lams, vals, skipped = [], [], 0
    for lam, u in family:
        if constrain:
            try:
                b = barycenter(P, u, C1=C1, tau=tau)
            except Exception:
                b = None
            if b != p:
                skipped += 1
                continue
        lams.append(float(lam))
        vals.append(eval_I_rho(P, u))
    if len(lams) < 2:
        return {"pass": False, "members": len(lams), "skipped": skipped,
                "reason": "too few admissible members"}
    rep = stabilizes(lams, vals, direction="min")
    rep.update({"members": len(lams), "skipped": skipped, "min_I": float(np.min(vals)),
                "lambdas": lams, "values": vals})
    return rep


def write_deficit_csv(path, rows):
    """rows: dicts with family_id, lambda, deficit, dirichlet, mean, log_integral."""
    cols = ["family_id", "lambda", "deficit", "dirichlet", "mean", "log_integral"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(r[k])) if isinstance(r[k], (float, np.floating)) else r[k])
                        for k in cols})
