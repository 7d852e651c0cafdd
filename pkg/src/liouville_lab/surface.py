"""Discrete compact surfaces: flat torus, round sphere and unit disk.

Every surface exposes the same small interface so that the rest of the
package never branches on the surface kind:

* ``weights`` -- per-node quadrature weights (cell areas),
* ``laplacian(u)`` / ``dirichlet(u)`` -- discrete Laplace-Beltrami operator
  and Dirichlet energy,
* ``distances_from(x)`` -- geodesic distances from a node to all nodes,
* ``embed`` / ``nearest_point_projection`` -- the ambient embedding used by
  the barycenter construction.

Fields are plain ``numpy`` arrays with one value per node.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, ProjectionDomainError

__all__ = [
    "Surface",
    "FlatTorus",
    "RoundSphere",
    "UnitDisk",
    "Orbit",
    "build_surface",
    "parse_surface_spec",
    "geodesic_distance",
    "integrate",
    "dirichlet",
    "ball_integral",
    "embed",
    "nearest_point_projection",
]

MIN_RESOLUTION = 16


@dataclass(frozen=True)
class Orbit:
    """Nodes related by a grid symmetry that preserves geodesic distances.

    ``members[k]`` is obtained from ``rep`` by shifting block coordinates by
    ``shifts[k] = (da, db)``; nodes outside the block (poles, disk centre)
    are fixed by every shift.
    """

    rep: int
    members: np.ndarray
    shifts: np.ndarray


class Surface:
    """Common machinery for the three discrete surfaces.

    Subclasses fill in ``nodes``, ``weights``, ``points`` (embedding) and
    implement the Laplacian.
    """

    kind: str
    closed: bool
    embedding_dim: int
    laplacian_scheme: str

    def __init__(self, resolution, nodes, weights, points, total_area):
        self.resolution = tuple(int(r) for r in resolution)
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.weights = np.ascontiguousarray(weights, dtype=float)
        self.points = np.ascontiguousarray(points, dtype=float)
        self.total_area = float(total_area)
        self.boundary = np.zeros(len(self.weights), dtype=bool)
        for arr in (self.nodes, self.weights, self.points):
            arr.setflags(write=False)

    # -- basic quantities -------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.weights)

    def __len__(self):
        return self.n_nodes

    def __repr__(self):
        return f"{type(self).__name__}(resolution={self.resolution}, n_nodes={self.n_nodes})"

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f))

    def mean(self, f) -> float:
        return self.integrate(f) / self.total_area

    def cell_size(self, x: int) -> float:
        """Distance from node ``x`` to its nearest other node."""
        d = self.distances_from(x)
        return float(np.min(d[d > 0]))

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "resolution": list(self.resolution),
            "n_nodes": self.n_nodes,
            "total_area": self.total_area,
            "laplacian_scheme": self.laplacian_scheme,
        }

    def to_json(self) -> str:
        return json.dumps(self.metadata(), sort_keys=True)

    # -- geometry ---------------------------------------------------------

    def distances_from(self, x: int) -> np.ndarray:
        raise NotImplementedError

    def geodesic_distance(self, x: int, y: int) -> float:
        return float(self.distances_from(x)[y])

    def point_distances(self, p, q) -> np.ndarray:
        """Geodesic distances between ambient points already on the surface."""
        raise NotImplementedError

    def embed(self, x) -> np.ndarray:
        return self.points[x].copy()

    def nearest_point_projection(self, p) -> int:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def nearest_node(self, chart) -> int:
        """Node closest to a point given in chart coordinates."""
        raise NotImplementedError

    def geodesic_point(self, x: int, y: int, t: float):
        """Point at distance ``t`` from ``x`` on the geodesic towards ``y``.

        Chart coordinates on the torus, ambient coordinates otherwise; the
        result can be passed to ``snap``.
        """
        raise NotImplementedError

    def snap(self, q) -> int:
        """Node nearest to a point returned by ``geodesic_point``/``tangent_sample``."""
        raise NotImplementedError

    def tangent_sample(self, y: int, r_in: float, r_out: float, spacing: float):
        """Points of the annulus A_y(r_in, r_out) sampled on a tangent lattice.

        Returns ambient coordinates (ordered by distance from ``y``) together
        with their distances to ``y``.
        """
        raise NotImplementedError

    # -- symmetry orbits (used by the concentration kernels) --------------

    def orbits(self) -> list[Orbit]:
        raise NotImplementedError

    def block(self) -> tuple[int, int, int]:
        """(offset, n_a, n_b) of the rectangular node block shifted by orbits."""
        raise NotImplementedError

    def orbit_of(self, x: int) -> tuple[Orbit, int]:
        for orb in self.orbits():
            hit = np.nonzero(orb.members == x)[0]
            if hit.size:
                return orb, int(hit[0])
        raise ConfigurationError(f"node {x} not found in any orbit")

    # -- differential operators -------------------------------------------

    def laplacian(self, u) -> np.ndarray:
        raise NotImplementedError

    def dirichlet(self, u) -> float:
        raise NotImplementedError

    def solve_shifted(self, shift: float, rhs) -> np.ndarray:
        """Solve ``(shift - 2 Lap) v = rhs`` (preconditioner for the solvers)."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# flat torus
# ---------------------------------------------------------------------------


class FlatTorus(Surface):
    """Unit square [0,1)^2 with periodic identifications and spectral Laplacian."""

    kind = "torus"
    closed = True
    embedding_dim = 4
    laplacian_scheme = "fourier-spectral"

    def __init__(self, nx: int, ny: int):
        self.nx, self.ny = nx, ny
        i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        x = (i / nx).ravel()
        y = (j / ny).ravel()
        nodes = np.column_stack([x, y])
        weights = np.full(nx * ny, 1.0 / (nx * ny))
        points = np.column_stack(
            [np.cos(2 * np.pi * x), np.sin(2 * np.pi * x),
             np.cos(2 * np.pi * y), np.sin(2 * np.pi * y)]
        ) / (2 * np.pi)
        super().__init__((nx, ny), nodes, weights, points, 1.0)
        kx = np.fft.fftfreq(nx, d=1.0 / nx)
        ky = np.fft.fftfreq(ny, d=1.0 / ny)
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        self.multiplier = (2 * np.pi) ** 2 * (KX**2 + KY**2)

    def _grid(self, u):
        return np.asarray(u, dtype=float).reshape(self.nx, self.ny)

    def laplacian(self, u):
        uh = np.fft.fft2(self._grid(u))
        return np.real(np.fft.ifft2(-self.multiplier * uh)).ravel()

    def dirichlet(self, u):
        uh = np.fft.fft2(self._grid(u)) / (self.nx * self.ny)
        return float(np.sum(self.multiplier * (uh.real**2 + uh.imag**2)))

    def solve_shifted(self, shift, rhs):
        rh = np.fft.fft2(self._grid(rhs))
        denom = shift + 2.0 * self.multiplier
        if shift == 0.0:
            denom = denom.copy()
            denom[0, 0] = np.inf
        return np.real(np.fft.ifft2(rh / denom)).ravel()

    def inverse_laplacian(self, rhs):
        """Mean-zero solution of ``-Lap v = rhs - mean(rhs)``."""
        rh = np.fft.fft2(self._grid(rhs))
        denom = self.multiplier.copy()
        denom[0, 0] = np.inf
        return np.real(np.fft.ifft2(rh / denom)).ravel()

    @property
    def fd_stiffness(self):
        """Sparse stiffness matrix K of the periodic five-point Laplacian (-Lap u ~ K u / w)."""
        if getattr(self, "_fd_stiffness", None) is None:
            def ring(n):
                e = np.ones(n)
                return sp.diags([2 * e, -e[:-1], -e[:-1], [-1.0], [-1.0]],
                                [0, 1, -1, n - 1, -(n - 1)], shape=(n, n))

            N = self.nx * self.ny
            K = (self.nx**2 * sp.kron(ring(self.nx), sp.identity(self.ny))
                 + self.ny**2 * sp.kron(sp.identity(self.nx), ring(self.ny))) / N
            self._fd_stiffness = K.tocsc()
        return self._fd_stiffness

    def _offsets(self, x):
        dx = self.nodes[:, 0] - self.nodes[x, 0]
        dy = self.nodes[:, 1] - self.nodes[x, 1]
        dx -= np.round(dx)
        dy -= np.round(dy)
        return dx, dy

    def distances_from(self, x):
        i0, j0 = divmod(int(x), self.ny)
        di = np.abs(np.arange(self.nx) - i0)
        dj = np.abs(np.arange(self.ny) - j0)
        di = np.minimum(di, self.nx - di) / self.nx
        dj = np.minimum(dj, self.ny - dj) / self.ny
        return np.sqrt(di[:, None] ** 2 + dj[None, :] ** 2).ravel()

    def point_distances(self, p, q):
        d = np.asarray(p, float)[..., :2] - np.asarray(q, float)[..., :2]
        d -= np.round(d)
        return np.hypot(d[..., 0], d[..., 1])

    def diameter(self):
        return 0.5 * math.hypot(1.0, 1.0)

    def nearest_node(self, chart):
        x, y = (float(c) % 1.0 for c in chart)
        i = int(round(x * self.nx)) % self.nx
        j = int(round(y * self.ny)) % self.ny
        return i * self.ny + j

    def nearest_point_projection(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (4,):
            raise ProjectionDomainError("torus projection expects a point in R^4")
        if np.hypot(p[0], p[1]) < 1e-12 or np.hypot(p[2], p[3]) < 1e-12:
            raise ProjectionDomainError("point on the axis of a Clifford factor")
        d2 = np.sum((self.points - p) ** 2, axis=1)
        return int(np.argmin(d2))

    def geodesic_point(self, x, y, t):
        dx, dy = self._offsets(x)
        v = np.array([dx[y], dy[y]])
        nv = np.hypot(*v)
        q = (self.nodes[x] + t * v / nv) % 1.0
        return q

    def snap(self, q):
        return self.nearest_node(q)

    def tangent_sample(self, y, r_in, r_out, spacing):
        pts, R = _plane_sample(self.nodes[y], r_in, r_out, spacing)
        return pts % 1.0, R

    def orbits(self):
        if not hasattr(self, "_orbits"):
            members = np.arange(self.n_nodes)
            shifts = np.column_stack(np.divmod(members, self.ny))
            self._orbits = [Orbit(0, members, shifts)]
        return self._orbits

    def block(self):
        return 0, self.nx, self.ny


# ---------------------------------------------------------------------------
# round sphere
# ---------------------------------------------------------------------------


def _sphere_rings(n_theta: int, grading):
    """Ring colatitudes, measured from the *nearer* pole, and hemisphere sign.

    Angles near the south pole are stored as distance to the south pole so
    that strongly graded meshes keep full relative precision there.
    """
    delta = np.pi / n_theta
    if grading is None:
        theta = np.arange(1, n_theta) * delta
        north = theta <= np.pi / 2 + 1e-15
        angle = np.where(north, theta, np.pi - theta)
        return angle, np.where(north, 1, -1)
    theta_min, ratio = grading
    if not (0 < theta_min < delta and ratio > 1):
        raise ConfigurationError("grading needs 0 < theta_min < pi/n_theta and ratio > 1")
    switch = delta / (ratio - 1.0)
    k = int(np.ceil(np.log(switch / theta_min) / np.log(ratio)))
    geo = theta_min * ratio ** np.arange(k + 1)
    geo = geo[geo < switch]
    start = geo[-1]
    m = max(int(round((np.pi - 2 * start) / delta)), 2)
    mid = np.linspace(start, np.pi - start, m + 1)[1:-1]
    north = np.concatenate([geo, mid[mid <= np.pi / 2]])
    south = np.concatenate([geo, (np.pi - mid[mid > np.pi / 2])[::-1]])[::-1]
    angle = np.concatenate([north, south])
    sign = np.concatenate([np.ones(len(north), int), -np.ones(len(south), int)])
    return angle, sign


class RoundSphere(Surface):
    """Unit sphere on a latitude-longitude grid with explicit pole nodes.

    Optional geometric grading of the latitudes towards both poles
    (``grading=(theta_min, ratio)``) resolves bubbles centred at a pole over
    many decades of the concentration parameter.

    The Laplacian is a finite-volume scheme written in the conformal
    coordinates (psi, phi), psi = log tan(theta/2), in which the Dirichlet
    energy is the flat one; ring-to-ring conductances are therefore exact
    for axially symmetric harmonic functions.
    """

    kind = "sphere"
    closed = True
    embedding_dim = 3
    laplacian_scheme = "finite-volume-conformal-latlong"

    def __init__(self, n_theta: int, n_phi: int, grading=None):
        self.n_phi = n_phi
        self.grading = None if grading is None else (float(grading[0]), float(grading[1]))
        angle, sign = _sphere_rings(n_theta, self.grading)
        self.ring_angle, self.ring_sign = angle, sign
        self.n_rings = nr = len(angle)
        tan_half = np.tan(angle / 2)
        psi = sign * np.log(tan_half)
        self.psi = psi
        phi = np.arange(n_phi) * 2 * np.pi / n_phi
        dphi = 2 * np.pi / n_phi

        # psi of cell boundaries: caps at half the first/last ring angle
        bnd = np.empty(nr + 1)
        bnd[1:-1] = 0.5 * (psi[:-1] + psi[1:])
        bnd[0] = np.log(np.tan(angle[0] / 4))
        bnd[-1] = -np.log(np.tan(angle[-1] / 4))
        band = 2 * np.pi * np.sinh(bnd[1:] - bnd[:-1]) / (np.cosh(bnd[:-1]) * np.cosh(bnd[1:]))
        cap_n = 4 * np.pi * np.sin(angle[0] / 4) ** 2
        cap_s = 4 * np.pi * np.sin(angle[-1] / 4) ** 2

        n = nr * n_phi + 2
        weights = np.empty(n)
        weights[0] = cap_n
        weights[1:-1] = np.repeat(band / n_phi, n_phi)
        weights[-1] = cap_s

        sa, ca = np.sin(angle), np.cos(angle)
        points = np.empty((n, 3))
        points[0] = (0.0, 0.0, 1.0)
        points[-1] = (0.0, 0.0, -1.0)
        points[1:-1, 0] = np.outer(sa, np.cos(phi)).ravel()
        points[1:-1, 1] = np.outer(sa, np.sin(phi)).ravel()
        points[1:-1, 2] = np.repeat(sign * ca, n_phi)
        # exact zeros keep the ring-by-ring symmetry bitwise
        points[1:-1, 0][np.abs(points[1:-1, 0]) < 1e-300] = 0.0

        theta = np.where(sign > 0, angle, np.pi - angle)
        nodes = np.empty((n, 2))
        nodes[0] = (0.0, 0.0)
        nodes[-1] = (np.pi, 0.0)
        nodes[1:-1, 0] = np.repeat(theta, n_phi)
        nodes[1:-1, 1] = np.tile(phi, nr)
        super().__init__((n_theta, n_phi), nodes, weights, points, 4 * np.pi)
        if self.grading is not None:
            self.laplacian_scheme = "finite-volume-conformal-latlong-graded"

        # conductances
        rows, cols, vals = [], [], []

        def idx(r, j):
            return 1 + r * n_phi + (j % n_phi)

        jj = np.arange(n_phi)
        c_rr = dphi / np.diff(psi)
        for r in range(nr - 1):
            rows.append(idx(r, jj)); cols.append(idx(r + 1, jj)); vals.append(np.full(n_phi, c_rr[r]))
        c_ll = (bnd[1:] - bnd[:-1]) / dphi
        for r in range(nr):
            rows.append(idx(r, jj)); cols.append(idx(r, jj + 1)); vals.append(np.full(n_phi, c_ll[r]))
        c_pn = np.sin(angle[0] / 2) * dphi / angle[0]
        c_ps = np.sin(angle[-1] / 2) * dphi / angle[-1]
        rows.append(np.zeros(n_phi, int)); cols.append(idx(0, jj)); vals.append(np.full(n_phi, c_pn))
        rows.append(np.full(n_phi, n - 1)); cols.append(idx(nr - 1, jj)); vals.append(np.full(n_phi, c_ps))
        self._edges = (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
        self._finish_stiffness()

    def _finish_stiffness(self):
        a, b, c = self._edges
        n = self.n_nodes
        C = sp.coo_matrix((c, (a, b)), shape=(n, n))
        C = (C + C.T).tocsr()
        self.graph_laplacian = (sp.diags(np.asarray(C.sum(axis=1)).ravel()) - C).tocsr()
        self._lu_cache = {}

    def laplacian(self, u):
        return -(self.graph_laplacian @ np.asarray(u, float)) / self.weights

    def dirichlet(self, u):
        a, b, c = self._edges
        u = np.asarray(u, float)
        return float(np.dot(c, (u[a] - u[b]) ** 2))

    def solve_shifted(self, shift, rhs):
        from scipy.sparse.linalg import splu

        key = float(shift)
        if key not in self._lu_cache:
            A = sp.diags(shift * self.weights) + 2.0 * self.graph_laplacian
            self._lu_cache[key] = splu(A.tocsc())
        return self._lu_cache[key].solve(self.weights * np.asarray(rhs, float))

    def distances_from(self, x):
        return self.point_distances(self.points[x], self.points)

    def point_distances(self, p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        cr = np.cross(p, q)
        return np.arctan2(np.sqrt(np.sum(cr * cr, axis=-1)), np.sum(p * q, axis=-1))

    def diameter(self):
        return np.pi

    def nearest_node(self, chart):
        th, ph = float(chart[0]), float(chart[1])
        p = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        return int(np.argmin(self.point_distances(p, self.points)))

    def nearest_point_projection(self, p):
        p = np.asarray(p, dtype=float)
        r = np.linalg.norm(p)
        if not 0.5 < r < 1.5:
            raise ProjectionDomainError(f"|p| = {r:.3g} outside the tubular neighbourhood (0.5, 1.5)")
        d2 = np.sum((self.points - p) ** 2, axis=1)
        return int(np.argmin(d2))

    def geodesic_point(self, x, y, t):
        a, b = self.points[x], self.points[y]
        w = b - np.dot(a, b) * a
        w /= np.linalg.norm(w)
        return np.cos(t) * a + np.sin(t) * w

    def snap(self, q):
        return int(np.argmin(self.point_distances(np.asarray(q, float), self.points)))

    def tangent_sample(self, y, r_in, r_out, spacing):
        m = int(np.ceil(r_out / spacing))
        g = np.arange(-m, m + 1) * spacing
        X, Y = np.meshgrid(g, g, indexing="ij")
        R = np.hypot(X, Y).ravel()
        keep = (R > r_in) & (R < r_out)
        Xk, Yk, Rk = X.ravel()[keep], Y.ravel()[keep], R[keep]
        order = np.lexsort((np.arctan2(Yk, Xk), Rk))
        Xk, Yk, Rk = Xk[order], Yk[order], Rk[order]
        a = self.points[y]
        e1 = np.cross(a, [0.0, 0.0, 1.0] if abs(a[2]) < 0.9 else [1.0, 0.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(a, e1)
        dirs = (np.outer(Xk, e1) + np.outer(Yk, e2)) / Rk[:, None]
        pts = np.cos(Rk)[:, None] * a + np.sin(Rk)[:, None] * dirs
        return pts, Rk

    def orbits(self):
        if not hasattr(self, "_orbits"):
            n_phi = self.n_phi
            orbs = [Orbit(0, np.array([0]), np.zeros((1, 2), int))]
            jj = np.arange(n_phi)
            for r in range(self.n_rings):
                members = 1 + r * n_phi + jj
                orbs.append(Orbit(int(members[0]), members, np.column_stack([np.zeros(n_phi, int), jj])))
            orbs.append(Orbit(self.n_nodes - 1, np.array([self.n_nodes - 1]), np.zeros((1, 2), int)))
            self._orbits = orbs
        return self._orbits

    def block(self):
        return 1, self.n_rings, self.n_phi

    @property
    def north_pole(self) -> int:
        return 0

    @property
    def south_pole(self) -> int:
        return self.n_nodes - 1


# ---------------------------------------------------------------------------
# unit disk
# ---------------------------------------------------------------------------


class UnitDisk(Surface):
    """Unit disk on a polar grid (centre node plus rings), boundary ring flagged.

    Rings are geometrically clustered towards the origin when ``r_min`` is
    given (default), uniform otherwise.  The stiffness matrix carries natural
    boundary conditions; Dirichlet data are imposed by the caller through
    ``boundary``.
    """

    kind = "disk"
    closed = False
    embedding_dim = 3
    laplacian_scheme = "finite-volume-conformal-polar"

    def __init__(self, n_r: int, n_ang: int, r_min: float | None = 1e-3):
        self.n_r, self.n_ang = n_r, n_ang
        if r_min is None or r_min >= 1.0 / n_r:
            radii = np.arange(1, n_r + 1) / n_r
            self.r_min = None
        else:
            radii = r_min * (1.0 / r_min) ** (np.arange(n_r) / (n_r - 1))
            radii[-1] = 1.0
            self.r_min = float(r_min)
        self.radii = radii
        dang = 2 * np.pi / n_ang
        ang = np.arange(n_ang) * dang
        log_r = np.log(radii)
        bnd = np.empty(n_r + 1)
        bnd[0] = radii[0] / 2
        bnd[1:-1] = np.sqrt(radii[:-1] * radii[1:])
        bnd[-1] = 1.0
        n = 1 + n_r * n_ang
        weights = np.empty(n)
        weights[0] = np.pi * bnd[0] ** 2
        weights[1:] = np.repeat(0.5 * dang * (bnd[1:] ** 2 - bnd[:-1] ** 2), n_ang)
        x = np.concatenate([[0.0], np.outer(radii, np.cos(ang)).ravel()])
        y = np.concatenate([[0.0], np.outer(radii, np.sin(ang)).ravel()])
        nodes = np.column_stack([x, y])
        points = np.column_stack([x, y, np.zeros(n)])
        super().__init__((n_r, n_ang), nodes, weights, points, np.pi)
        self.boundary = np.zeros(n, dtype=bool)
        self.boundary[1 + (n_r - 1) * n_ang:] = True
        if self.r_min is None:
            self.laplacian_scheme = "finite-volume-polar-uniform"

        def idx(r, j):
            return 1 + r * n_ang + (j % n_ang)

        jj = np.arange(n_ang)
        rows, cols, vals = [], [], []
        c_rr = dang / np.diff(log_r)
        for r in range(n_r - 1):
            rows.append(idx(r, jj)); cols.append(idx(r + 1, jj)); vals.append(np.full(n_ang, c_rr[r]))
        log_b = np.log(bnd)
        c_ll = (log_b[1:] - log_b[:-1]) / dang
        for r in range(n_r):
            rows.append(idx(r, jj)); cols.append(idx(r, jj + 1)); vals.append(np.full(n_ang, c_ll[r]))
        rows.append(np.zeros(n_ang, int)); cols.append(idx(0, jj))
        vals.append(np.full(n_ang, bnd[0] * dang / radii[0]))
        self._edges = (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
        RoundSphere._finish_stiffness(self)

    laplacian = RoundSphere.laplacian
    dirichlet = RoundSphere.dirichlet
    solve_shifted = RoundSphere.solve_shifted

    def distances_from(self, x):
        d = self.nodes - self.nodes[x]
        return np.hypot(d[:, 0], d[:, 1])

    def point_distances(self, p, q):
        d = np.asarray(p, float)[..., :2] - np.asarray(q, float)[..., :2]
        return np.hypot(d[..., 0], d[..., 1])

    def diameter(self):
        return 2.0

    def nearest_node(self, chart):
        p = np.array([float(chart[0]), float(chart[1])])
        return int(np.argmin(np.sum((self.nodes - p) ** 2, axis=1)))

    def nearest_point_projection(self, p):
        p = np.asarray(p, dtype=float)
        if abs(p[2]) >= 0.5:
            raise ProjectionDomainError("point too far from the disk plane")
        q = p[:2].copy()
        r = np.hypot(*q)
        if r > 1.0:
            q /= r
        return int(np.argmin(np.sum((self.nodes - q) ** 2, axis=1)))

    def geodesic_point(self, x, y, t):
        v = self.nodes[y] - self.nodes[x]
        q = self.nodes[x] + t * v / np.hypot(*v)
        return np.array([q[0], q[1], 0.0])

    def snap(self, q):
        return self.nearest_node(np.asarray(q, float)[:2])

    def tangent_sample(self, y, r_in, r_out, spacing):
        pts, R = _plane_sample(self.nodes[y], r_in, r_out, spacing)
        inside = np.hypot(pts[:, 0], pts[:, 1]) <= 1.0
        return pts[inside], R[inside]

    def orbits(self):
        if not hasattr(self, "_orbits"):
            n_ang = self.n_ang
            orbs = [Orbit(0, np.array([0]), np.zeros((1, 2), int))]
            jj = np.arange(n_ang)
            for r in range(self.n_r):
                members = 1 + r * n_ang + jj
                orbs.append(Orbit(int(members[0]), members, np.column_stack([np.zeros(n_ang, int), jj])))
            self._orbits = orbs
        return self._orbits

    def block(self):
        return 1, self.n_r, self.n_ang

    @property
    def center(self) -> int:
        return 0


def _plane_sample(origin, r_in, r_out, spacing):
    m = int(np.ceil(r_out / spacing))
    g = np.arange(-m, m + 1) * spacing
    X, Y = np.meshgrid(g, g, indexing="ij")
    R = np.hypot(X, Y).ravel()
    keep = (R > r_in) & (R < r_out)
    Xk, Yk, Rk = X.ravel()[keep], Y.ravel()[keep], R[keep]
    order = np.lexsort((np.arctan2(Yk, Xk), Rk))
    pts = np.column_stack([Xk[order], Yk[order]]) + np.asarray(origin)[:2]
    return pts, Rk[order]


# ---------------------------------------------------------------------------
# construction and functional interface
# ---------------------------------------------------------------------------


def build_surface(kind: str, resolution, **options) -> Surface:
    """Build a discrete surface.

    Parameters
    ----------
    kind : {"torus", "sphere", "disk"}
    resolution : int or (int, int)
        torus: (nx, ny); sphere: (n_theta, n_phi) latitude intervals and
        longitudes; disk: (n_r, n_angle).  A single int ``n`` means
        (n, n) for the torus and sphere and (n, 2n) for the disk.
    options :
        sphere: ``grading=(theta_min, ratio)``; disk: ``r_min``.
    """
    kind = str(kind).lower()
    aliases = {"flattorus": "torus", "roundsphere": "sphere", "unitdisk": "disk"}
    kind = aliases.get(kind, kind)
    if isinstance(resolution, (int, np.integer)):
        resolution = (int(resolution), 2 * int(resolution)) if kind == "disk" else (int(resolution),) * 2
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != 2 or min(resolution) < MIN_RESOLUTION:
        raise ConfigurationError(f"resolution must be two integers >= {MIN_RESOLUTION}, got {resolution}")
    if kind == "torus":
        if options:
            raise ConfigurationError(f"unexpected torus options {sorted(options)}")
        return FlatTorus(*resolution)
    if kind == "sphere":
        return RoundSphere(*resolution, grading=options.get("grading"))
    if kind == "disk":
        return UnitDisk(*resolution, r_min=options.get("r_min", 1e-3))
    raise ConfigurationError(f"unsupported surface kind {kind!r}")


def parse_surface_spec(spec: str) -> Surface:
    """Parse ``kind:res[:option...]``, e.g. ``torus:256``, ``sphere:64x32:graded``.

    Options: ``graded`` or ``graded=theta_min,ratio`` (sphere),
    ``rmin=value`` or ``uniform`` (disk).
    """
    parts = spec.split(":")
    if len(parts) < 2 or not parts[1]:
        raise ConfigurationError(f"surface spec {spec!r} must look like kind:resolution")
    kind = parts[0]
    res = tuple(int(v) for v in parts[1].lower().split("x"))
    res = res[0] if len(res) == 1 else res
    opts = {}
    for opt in parts[2:]:
        if opt == "graded":
            opts["grading"] = (1e-32, 1.25)
        elif opt.startswith("graded="):
            a, b = opt.split("=", 1)[1].split(",")
            opts["grading"] = (float(a), float(b))
        elif opt.startswith("rmin="):
            opts["r_min"] = float(opt.split("=", 1)[1])
        elif opt == "uniform":
            opts["r_min"] = None
        else:
            raise ConfigurationError(f"unknown surface option {opt!r}")
    return build_surface(kind, res, **opts)


def geodesic_distance(s: Surface, x: int, y: int) -> float:
    return s.geodesic_distance(x, y)


def integrate(s: Surface, f) -> float:
    return s.integrate(f)


def dirichlet(s: Surface, u) -> float:
    return s.dirichlet(u)


def ball_integral(s: Surface, f, center: int, r: float) -> float:
    """Integral of ``f`` over the closed geodesic ball of radius ``r`` (node-centre inclusion)."""
    if r < 0:
        raise ConfigurationError("ball radius must be nonnegative")
    inside = s.distances_from(center) <= r
    return float(np.dot(s.weights[inside], np.asarray(f, float)[inside]))


def embed(s: Surface, x) -> np.ndarray:
    return s.embed(x)


def nearest_point_projection(s: Surface, p) -> int:
    return s.nearest_point_projection(p)
