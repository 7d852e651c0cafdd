"""Distance-shell tables shared by the compiled and pure-Python kernels.

For each symmetry orbit of a surface the nodes are sorted once by distance
from the orbit representative.  Equal distances form a shell; the step
function ``r -> mass of the closed ball of radius r`` only changes at shell
radii, so the concentration radius only needs to be searched over the
merged list of shell radii ``D_g`` and ``D_g / C1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TIE_RTOL = 1e-10


@dataclass
class ShellTable:
    members: np.ndarray      # node ids of the orbit
    shift_a: np.ndarray      # per-member block shift
    shift_b: np.ndarray
    fixed: np.ndarray        # per sorted position: node id if outside the block, else -1
    coord_a: np.ndarray      # per sorted position: block coordinates
    coord_b: np.ndarray
    shell_end: np.ndarray    # exclusive end position of every shell
    radii: np.ndarray        # shell radii D_g


@dataclass
class BreakTable:
    breaks: np.ndarray       # merged, strictly increasing breakpoints
    inner: np.ndarray        # last shell with D_g <= b
    outer: np.ndarray        # last shell with D_g <= C1 b


def shell_table(surface, orbit) -> ShellTable:
    d = surface.distances_from(orbit.rep)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    new = np.ones(len(ds), dtype=bool)
    new[1:] = np.diff(ds) > TIE_RTOL * np.maximum(ds[1:], 1e-300)
    starts = np.flatnonzero(new)
    shell_end = np.append(starts[1:], len(ds)).astype(np.int64)
    offset, n_a, n_b = surface.block()
    rel = order - offset
    in_block = (rel >= 0) & (rel < n_a * n_b)
    fixed = np.where(in_block, -1, order).astype(np.int64)
    ra, rb = np.divmod(np.where(in_block, rel, 0), n_b)
    return ShellTable(
        members=np.asarray(orbit.members, dtype=np.int64),
        shift_a=np.asarray(orbit.shifts[:, 0], dtype=np.int64),
        shift_b=np.asarray(orbit.shifts[:, 1], dtype=np.int64),
        fixed=fixed,
        coord_a=ra.astype(np.int64),
        coord_b=rb.astype(np.int64),
        shell_end=shell_end,
        radii=ds[starts].copy(),
    )


def break_table(radii: np.ndarray, C1: float) -> BreakTable:
    """Merge ``radii`` and ``radii / C1`` into one increasing breakpoint list."""
    vals = np.concatenate([radii, radii / C1])
    kind = np.concatenate([np.zeros(len(radii), int), np.ones(len(radii), int)])
    shell = np.concatenate([np.arange(len(radii)), np.arange(len(radii))])
    order = np.lexsort((kind, vals))
    breaks, inner, outer = [], [], []
    cur_in = cur_out = -1
    for k in order:
        v = vals[k]
        if kind[k] == 0:
            cur_in = shell[k]
        else:
            cur_out = shell[k]
        if breaks and v - breaks[-1] <= TIE_RTOL * max(v, 1e-300):
            inner[-1], outer[-1] = cur_in, cur_out
        else:
            breaks.append(v)
            inner.append(cur_in)
            outer.append(cur_out)
    return BreakTable(np.array(breaks), np.array(inner, np.int64), np.array(outer, np.int64))
