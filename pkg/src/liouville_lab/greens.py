"""Green's functions of -Lap with zero mean and the singular weight h~.

Every Green's function is stored split into the logarithmic kernel
``(1/2pi) log(1/d)`` and a smooth ``regular_part`` so that

    h~ = h * exp(-4 pi sum_j alpha_j G_j) = h * prod_j d_j^(2 alpha_j) exp(-4 pi alpha_j R_j)

can be evaluated without cancellation close to the singular points.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .surface import Surface

__all__ = [
    "SingularSet",
    "GreenFunction",
    "green_function",
    "green_residual",
    "tilde_h",
    "log_tilde_h",
    "export_csv",
]

LOG_COEFFICIENT = 1.0 / (2.0 * np.pi)


@dataclass(frozen=True)
class SingularSet:
    """Vortex points (node ids) with weights alpha_j in (0, 1] and background h > 0."""

    points: tuple
    alphas: tuple
    h: np.ndarray | None = None
    snap_offsets: tuple = ()

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        als = tuple(float(a) for a in self.alphas)
        if len(pts) != len(als):
            raise ConfigurationError("points and alphas must have the same length")
        if len(set(pts)) != len(pts):
            raise ConfigurationError("singular points must be distinct")
        for a in als:
            if not 0.0 < a <= 1.0:
                raise ConfigurationError(f"alpha must lie in (0, 1], got {a}")
        if self.h is not None:
            h = np.asarray(self.h, dtype=float)
            if not np.all(h > 0) or not np.all(np.isfinite(h)):
                raise ConfigurationError("background h must be finite and positive")
            object.__setattr__(self, "h", h)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "alphas", als)

    @classmethod
    def empty(cls, h=None):
        return cls((), (), h)

    @classmethod
    def from_chart(cls, surface: Surface, charts, alphas, h=None):
        """Snap chart coordinates to the nearest nodes; offsets are recorded."""
        nodes, offsets = [], []
        for c in charts:
            x = surface.nearest_node(c)
            nodes.append(x)
            offsets.append(float(_chart_offset(surface, c, x)))
        return cls(tuple(nodes), tuple(alphas), h, tuple(offsets))

    def __len__(self):
        return len(self.points)

    def background(self, surface: Surface) -> np.ndarray:
        return np.ones(surface.n_nodes) if self.h is None else self.h

    def key(self) -> str:
        """Stable hash used to check that a cached h~ matches this set."""
        m = hashlib.sha256()
        m.update(np.asarray(self.points, dtype=np.int64).tobytes())
        m.update(np.asarray(self.alphas, dtype=float).tobytes())
        if self.h is not None:
            m.update(self.h.tobytes())
        return m.hexdigest()

    def metadata(self) -> dict:
        return {
            "points": list(self.points),
            "alphas": list(self.alphas),
            "snap_offsets": list(self.snap_offsets),
            "h": "constant" if self.h is None else "field",
        }


def _chart_offset(surface, chart, x):
    if surface.kind == "torus":
        return surface.point_distances(np.asarray(chart, float) % 1.0, surface.nodes[x])
    if surface.kind == "sphere":
        th, ph = float(chart[0]), float(chart[1])
        p = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        return surface.point_distances(p, surface.points[x])
    return np.hypot(*(np.asarray(chart, float)[:2] - surface.nodes[x]))


@dataclass
class GreenFunction:
    """G_p = (1/2pi) log(1/d(., p)) + regular_part away from the pole."""

    pole: int
    values: np.ndarray
    regular_part: np.ndarray
    log_coefficient: float = LOG_COEFFICIENT
    meta: dict = field(default_factory=dict)


def _balanced_pole_value(s, p, values, flux):
    # value at the pole that makes the discrete flux out of its cell equal ``flux``
    row = s.graph_laplacian.getrow(p)
    nb = row.indices[row.indices != p]
    c = -row[0, nb].toarray().ravel()
    return (flux + np.dot(c, values[nb])) / c.sum()


def green_function(s: Surface, p: int) -> GreenFunction:
    """Green's function with pole at node ``p``.

    Torus: spectral solve of -Lap G = delta_p - 1 with zero mean.
    Sphere: closed form -(1/4pi) log(1 - cos d) + c, with c fixed by making
    the discrete integral vanish.  The value at the pole node itself is
    the one balancing the discrete flux out of its cell.
    Disk: Dirichlet Green's function of the unit disk.
    """
    p = int(p)
    if not 0 <= p < s.n_nodes:
        raise ConfigurationError(f"node {p} out of range")
    d = s.distances_from(p)
    off = d > 0
    if s.kind == "torus":
        delta = np.zeros(s.n_nodes)
        delta[p] = 1.0 / s.weights[p]
        G = s.inverse_laplacian(delta)
        R = np.empty_like(G)
        R[off] = G[off] + LOG_COEFFICIENT * np.log(d[off])
        nearest = d == d[off].min()
        R[p] = R[nearest].mean()
        return GreenFunction(p, G, R, meta={"method": "spectral"})
    if s.kind == "sphere":
        # 1 - cos d = 2 sin^2(d/2), evaluated stably
        kern = np.empty(s.n_nodes)
        kern[off] = -np.log(2.0 * np.sin(0.5 * d[off]) ** 2) / (4 * np.pi)
        kern[p] = _balanced_pole_value(s, p, kern, 1.0 - s.weights[p] / s.total_area)
        c = -s.integrate(kern) / s.total_area
        G = kern + c
        R = np.empty_like(G)
        half = 0.5 * d[off]
        R[off] = -np.log(2.0 * (np.sin(half) / d[off]) ** 2) / (4 * np.pi) + c
        R[p] = np.log(2.0) / (4 * np.pi) + c
        return GreenFunction(p, G, R, meta={"method": "closed-form", "constant": float(c)})
    if s.kind == "disk":
        if s.boundary[p]:
            raise ConfigurationError("pole on the disk boundary")
        z = s.nodes[:, 0] + 1j * s.nodes[:, 1]
        zp = z[p]
        R = LOG_COEFFICIENT * np.log(np.abs(1.0 - np.conj(zp) * z))
        G = np.empty(s.n_nodes)
        G[off] = -LOG_COEFFICIENT * np.log(d[off]) + R[off]
        G[p] = _balanced_pole_value(s, p, G, 1.0)
        return GreenFunction(p, G, R, meta={"method": "dirichlet-closed-form"})
    raise ConfigurationError(f"no Green's function for surface kind {s.kind!r}")


def green_residual(s: Surface, g: GreenFunction) -> float:
    """Relative H^-1 norm of -Lap_h G - (delta_h - 1/|S|) on a closed surface."""
    if not s.closed:
        raise ConfigurationError("residual check needs a closed surface")
    target = -np.full(s.n_nodes, 1.0 / s.total_area)
    target[g.pole] += 1.0 / s.weights[g.pole]
    r = -s.laplacian(g.values) - target
    return _dual_norm(s, r) / _dual_norm(s, target)


def _dual_norm(s, r):
    r = r - s.mean(r)
    if s.kind == "torus":
        z = s.inverse_laplacian(r)
    else:
        from scipy.sparse.linalg import spsolve
        import scipy.sparse as sp

        n = s.n_nodes
        # bordered system fixes the constant
        A = sp.bmat([[s.graph_laplacian, s.weights[:, None]], [s.weights[None, :], None]]).tocsc()
        z = spsolve(A, np.append(s.weights * r, 0.0))[:n]
    return float(np.sqrt(max(s.integrate(z * r), 0.0)))


def log_tilde_h(s: Surface, sing: SingularSet, greens=None) -> np.ndarray:
    """log h~, equal to -inf exactly at the singular points."""
    out = np.log(sing.background(s)).astype(float)
    for j, (p, a) in enumerate(zip(sing.points, sing.alphas)):
        g = greens[j] if greens is not None else green_function(s, p)
        d = s.distances_from(p)
        with np.errstate(divide="ignore"):
            out += 2.0 * a * np.log(d) - 4.0 * np.pi * a * g.regular_part
    for p in sing.points:
        out[p] = -np.inf
    return out


def tilde_h(s: Surface, sing: SingularSet) -> np.ndarray:
    """Weight h * exp(-4 pi sum alpha_j G_j), vanishing exactly at the p_j."""
    return np.exp(log_tilde_h(s, sing))


def export_csv(path, s: Surface, values, name="value"):
    """Write (node, chart coordinates, value) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "c0", "c1", name])
        for i, (c, v) in enumerate(zip(s.nodes, values)):
            w.writerow([i, repr(float(c[0])), repr(float(c[1])), repr(float(v))])
