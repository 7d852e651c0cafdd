"""Hot loops of the concentration machinery.

The compiled extension is used when it was built; otherwise (or when the
environment variable ``LIOUVILLE_LAB_PURE_PYTHON`` is set to a non-empty
value other than ``0``) the vectorized numpy fallback is selected.
"""

import os

import numpy as np

from ._orbit_data import break_table, shell_table
from . import _shells_py

BACKEND = "python"
_impl = _shells_py
if os.environ.get("LIOUVILLE_LAB_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _shells as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _shells_py

__all__ = ["BACKEND", "shell_tables", "concentration_fields", "ball_masses", "use_backend"]


def use_backend(name: str):
    """Switch implementation at runtime ("cython" or "python"); returns the previous name."""
    global _impl, BACKEND
    prev = BACKEND
    if name == "python":
        _impl, BACKEND = _shells_py, "python"
    elif name == "cython":
        from . import _shells
        _impl, BACKEND = _shells, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def shell_tables(surface):
    cache = surface.__dict__.setdefault("_shell_cache", {})
    if "tables" not in cache:
        cache["tables"] = [shell_table(surface, orb) for orb in surface.orbits()]
    return cache["tables"]


def _break_tables(surface, C1):
    cache = surface.__dict__.setdefault("_shell_cache", {})
    key = ("breaks", float(C1))
    if key not in cache:
        cache[key] = [break_table(t.radii, C1) for t in shell_tables(surface)]
    return cache[key]


def concentration_fields(surface, mass, C1, nodes=None):
    """Concentration radius and ball mass T at every node.

    ``mass`` holds node masses (density times quadrature weight).  The
    balance F(s) = M(s) + M(C1 s) - 1 between the mass M(s) of the closed
    ball of radius s and the mass outside the ball of radius C1 s is a step
    function; it changes sign at a breakpoint b_p where F jumps by ``jump``
    (the mass of the shells crossed).  sigma is the midpoint of the last
    interval with F < 0 (of [0, b_1] when F(0) >= 0) and T is the inner mass
    at the fraction of the jump where inner and outer mass balance, so that
    T = 1/2 for a single-cell delta, T ~ 0 far from concentrated mass and
    T <= 1/2 always.

    Returns ``(sigma, T, residual, jump)``; ``residual`` is |inner - outer|
    with node-inclusion balls at sigma, bounded by ``jump``.  ``nodes`` restricts the work to
    the orbits containing those nodes (other entries are NaN).
    """
    mass = np.ascontiguousarray(mass, dtype=float)
    n = surface.n_nodes
    out = [np.full(n, np.nan) for _ in range(4)]
    offset, n_a, n_b = surface.block()
    want = None if nodes is None else set(int(x) for x in np.atleast_1d(nodes))
    for tab, br in zip(shell_tables(surface), _break_tables(surface, C1)):
        if want is not None and not want.intersection(tab.members.tolist()):
            continue
        m = len(tab.members)
        buf = [np.empty(m) for _ in range(4)]
        _impl.concentration_orbit(mass, tab.fixed, tab.coord_a, tab.coord_b, offset, n_a, n_b,
                                  tab.shift_a, tab.shift_b, tab.shell_end, br.breaks,
                                  br.inner, br.outer, *buf)
        for o, b in zip(out, buf):
            o[tab.members] = b
    return tuple(out)


def ball_masses(surface, mass, r):
    """Mass of the closed geodesic ball of radius ``r`` around every node."""
    mass = np.ascontiguousarray(mass, dtype=float)
    out = np.empty(surface.n_nodes)
    offset, n_a, n_b = surface.block()
    for tab in shell_tables(surface):
        g = np.searchsorted(tab.radii, r * (1 + 1e-10), side="right")
        stop = int(tab.shell_end[g - 1]) if g > 0 else 0
        buf = np.empty(len(tab.members))
        _impl.ball_mass_orbit(mass, tab.fixed, tab.coord_a, tab.coord_b, offset, n_a, n_b,
                              tab.shift_a, tab.shift_b, stop, buf)
        out[tab.members] = buf
    return out
