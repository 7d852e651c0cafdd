"""Concentration radius, thresholded mass, barycenters and the retraction Psi.

Given a probability density f on a surface, sigma(x, f) balances the mass
of the ball B_x(sigma) against the mass outside B_x(C1 sigma), and
T(x, f) is the mass of that ball.  Nodes with T >= tau form S(f); the
positive part of T - tau weights an ambient average eta whose nearest
surface point is the barycenter beta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from ._kernels._orbit_data import break_table
from .errors import ConfigurationError, PreconditionError, ProjectionDomainError, ThresholdError
from .surface import Surface

__all__ = [
    "DEFAULT_C1",
    "ConcentrationReport",
    "normalize",
    "sigma",
    "T_mass",
    "covering_number",
    "default_tau",
    "concentration_report",
    "barycenter",
    "psi_projection",
    "dominant_ball",
    "dett_check",
]

DEFAULT_C1 = 4.0


@dataclass
class ConcentrationReport:
    C1: float
    tau: float
    sigma_of: np.ndarray = field(repr=False)
    T_of: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    jump: np.ndarray = field(repr=False)
    S_set: np.ndarray = field(repr=False)
    sigma_bar: float
    y_bar: int
    eta: np.ndarray
    beta: int | None
    degenerate: bool = False
    tau_source: str = "user"
    covering_k: int | None = None

    @property
    def max_T(self) -> float:
        return float(np.max(self.T_of))

    def summary(self) -> dict:
        return {
            "C1": self.C1,
            "tau": self.tau,
            "tau_source": self.tau_source,
            "covering_k": self.covering_k,
            "sigma_bar": self.sigma_bar,
            "y_bar": self.y_bar,
            "eta": [float(v) for v in self.eta],
            "beta": self.beta,
            "degenerate": self.degenerate,
            "max_T": self.max_T,
            "S_size": int(self.S_set.size),
            "max_identity_residual_over_jump": float(np.max(self.residual / self.jump)),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def normalize(s: Surface, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ConfigurationError("density must be finite and nonnegative")
    total = s.integrate(f)
    if not total > 0:
        raise ConfigurationError("density has zero mass")
    return f / total


def _single(s, f, x, C1):
    # same step-function search as the kernels, for one node
    d = s.distances_from(x)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    new = np.ones(len(ds), dtype=bool)
    new[1:] = np.diff(ds) > 1e-10 * np.maximum(ds[1:], 1e-300)
    starts = np.flatnonzero(new)
    ends = np.append(starts[1:], len(ds))
    cum = np.cumsum((f * s.weights)[order])[ends - 1]
    br = break_table(ds[starts], C1)
    total = cum[-1]
    F = cum[br.inner] + cum[br.outer] - total
    p = int(np.argmax(F >= 0.0))
    if p == 0:
        sig, f_prev, in_prev = 0.5 * br.breaks[1], -total, 0.0
    else:
        sig, f_prev, in_prev = 0.5 * (br.breaks[p - 1] + br.breaks[p]), F[p - 1], cum[br.inner[p - 1]]
    theta = -f_prev / (F[p] - f_prev)
    return float(sig), float(in_prev + theta * (cum[br.inner[p]] - in_prev))


def _check_C1(C1):
    if not C1 > 2:
        raise ConfigurationError(f"C1 must exceed 2, got {C1}")


def sigma(s: Surface, f, x: int, C1: float = DEFAULT_C1) -> float:
    """Concentration radius of the normalized density ``f`` at node ``x``."""
    _check_C1(C1)
    return _single(s, np.asarray(f, float), int(x), C1)[0]


def T_mass(s: Surface, f, x: int, C1: float = DEFAULT_C1) -> float:
    """Mass of f in the ball B_x(sigma(x, f))."""
    _check_C1(C1)
    return _single(s, np.asarray(f, float), int(x), C1)[1]


# -- covering number -----------------------------------------------------


def _greedy_cover(pts, radius):
    """Sequential greedy cover: scan points in order, open a ball at each uncovered one."""
    tree = cKDTree(pts)
    covered = np.zeros(len(pts), dtype=bool)
    count = 0
    for i in range(len(pts)):
        if covered[i]:
            continue
        count += 1
        covered[tree.query_ball_point(pts[i], radius)] = True
    return count


def covering_number(s: Surface, C1: float = DEFAULT_C1, sigmas=None, centers=None,
                    resolution: int = 16) -> int:
    """Empirical number of balls of radius sigma/4 needed to cover A_y(sigma, C1 sigma).

    The annulus is sampled on a tangent lattice of spacing
    sigma/(4 * resolution) and covered greedily, scanning points by
    increasing distance from y; the maximum over the sampled (y, sigma)
    pairs is returned.  Because the scan order is by radius, the cover for
    a smaller C1 is a prefix of the cover for a larger one, so the count is
    monotone in C1.  On flat surfaces the annulus is scale invariant and is
    sampled once in units of sigma (sigma must stay below the injectivity
    radius there).
    """
    _check_C1(C1)
    if s.kind in ("torus", "disk"):
        limit = 0.5 if s.kind == "torus" else 1.0
        for sg in sigmas or ():
            if C1 * sg >= limit:
                raise ConfigurationError(f"C1*sigma = {C1 * sg} exceeds the flat injectivity scale")
        pts, _ = _plane_lattice(1.0, C1, 1.0 / (4.0 * resolution))
        return _greedy_cover(pts, 0.25)
    if sigmas is None:
        sigmas = (0.05, 0.15)
    if centers is None:
        centers = (0, s.n_nodes // 2 + 1)
    best = 0
    for y in centers:
        for sg in sigmas:
            pts, _ = s.tangent_sample(int(y), sg, C1 * sg, sg / (4.0 * resolution))
            best = max(best, _greedy_cover(pts, 2.0 * np.sin(sg / 8.0)))
    return best


def _plane_lattice(r_in, r_out, spacing):
    from .surface import _plane_sample

    return _plane_sample(np.zeros(2), r_in, r_out, spacing)


def default_tau(s: Surface, C1: float = DEFAULT_C1):
    """tau = 1 / (2 (k + 2)) with k the measured covering number (cached per surface)."""
    cache = s.__dict__.setdefault("_tau_cache", {})
    if C1 not in cache:
        k = covering_number(s, C1)
        cache[C1] = (1.0 / (2.0 * (k + 2)), k)
    return cache[C1]


# -- report and barycenter -----------------------------------------------


def _fsum_rows(weights, pts):
    return np.array([math.fsum(weights * pts[:, j]) for j in range(pts.shape[1])])


def concentration_report(s: Surface, f, C1: float = DEFAULT_C1, tau=None) -> ConcentrationReport:
    """sigma and T at every node, S(f), sigma_bar, y_bar, eta and beta.

    Raises ThresholdError if no node reaches T >= tau.  When eta falls
    outside the tubular neighbourhood (perfectly symmetric densities on the
    sphere) the report is returned with ``degenerate=True`` and ``beta=None``.
    """
    _check_C1(C1)
    f = normalize(s, f)
    k = None
    source = "user"
    if tau is None:
        tau, k = default_tau(s, C1)
        source = "covering"
    sig, T, res, jump = _kernels.concentration_fields(s, f * s.weights, C1)
    S = np.flatnonzero(T >= tau)
    if S.size == 0:
        raise ThresholdError(f"S(f) is empty for tau={tau:.4g}", float(T.max()))
    y_bar = int(S[np.argmax(sig[S])])  # argmax returns the first (lowest) index on ties
    wt = s.weights * np.maximum(T - tau, 0.0)
    eta = _fsum_rows(wt, s.points) / math.fsum(wt)
    try:
        beta, degenerate = s.nearest_point_projection(eta), False
    except ProjectionDomainError:
        beta, degenerate = None, True
    return ConcentrationReport(C1, float(tau), sig, T, res, jump, S, float(sig[y_bar]), y_bar,
                               eta, beta, degenerate, source, k)


def barycenter(P, u, C1: float = DEFAULT_C1, tau=None) -> int:
    """beta(u) for the density h~ e^{2u} / int h~ e^{2u}."""
    from .functional import density

    rep = concentration_report(P.surface, density(P, u), C1, tau)
    if rep.beta is None:
        raise ProjectionDomainError("barycenter undefined: eta outside the tubular neighbourhood")
    return rep.beta


def psi_projection(P, u, theta=None, L: float = 0.0, C1: float = DEFAULT_C1, tau=None) -> dict:
    """Retraction of beta(u) onto Theta_rho = S minus the balls B_{p_i}(theta), p_i in J_rho.

    Only defined on the sublevel {I_rho <= -L}.  Returns a dict with the
    node ``psi``, ``beta`` and a flag ``ambiguous`` raised when beta sits
    exactly on a singular point (no geodesic direction is defined).
    """
    from .functional import eval_I_rho

    s = P.surface
    level = eval_I_rho(P, u)
    if level > -L:
        raise PreconditionError(f"I_rho(u) = {level:.6g} exceeds -L = {-L:.6g}")
    beta = barycenter(P, u, C1, tau)
    return retract(s, beta, P.J_rho, theta)


def retract(s: Surface, beta: int, points, theta=None) -> dict:
    """Move ``beta`` radially out of any ball B_p(theta), p in ``points``."""
    if theta is None:
        theta = 5.0 * s.cell_size(beta)
    for p in points:
        d = s.geodesic_distance(p, beta)
        if d >= theta:
            continue
        if d == 0.0:
            return {"psi": int(beta), "beta": int(beta), "ambiguous": True, "moved_from": int(p)}
        node = s.snap(s.geodesic_point(p, beta, theta))
        return {"psi": int(node), "beta": int(beta), "ambiguous": False, "moved_from": int(p)}
    return {"psi": int(beta), "beta": int(beta), "ambiguous": False, "moved_from": None}


def dominant_ball(P, u, r: float, eps: float):
    """A node whose r-ball carries more than 1 - eps of h~ e^{2u}, or None."""
    from .functional import density

    if not (r > 0 and eps > 0):
        raise ConfigurationError("r and eps must be positive")
    s = P.surface
    m = _kernels.ball_masses(s, density(P, u) * s.weights, r)
    best = int(np.argmax(m))
    return best if m[best] > 1.0 - eps else None


def dett_check(s: Surface, sig, pairs, C1: float = DEFAULT_C1, slack=None) -> dict:
    """Check d(x,y) <= C1 max(sigma) + min(sigma) + slack on node pairs."""
    pairs = np.asarray(pairs, dtype=int)
    if slack is None:
        slack = 2.0 * _grid_spacing(s)
    worst = -np.inf
    bad = 0
    for x, y in pairs:
        d = s.geodesic_distance(x, y)
        a, b = sig[x], sig[y]
        excess = d - (C1 * max(a, b) + min(a, b))
        worst = max(worst, excess)
        bad += excess > slack
    return {"pairs": int(len(pairs)), "violations": int(bad), "worst_excess": float(worst),
            "slack": float(slack)}


def _grid_spacing(s):
    if s.kind == "torus":
        return 1.0 / min(s.resolution)
    if s.kind == "sphere":
        return float(np.pi / s.resolution[0])
    return float(np.max(np.diff(np.concatenate([[0.0], s.radii]))))
