"""Vectorized numpy versions of the per-orbit loops (fallback and reference)."""

import numpy as np

CHUNK_ELEMENTS = 1 << 22


def _nodes(fixed, ca, cb, offset, n_a, n_b, da, db):
    idx = offset + ((ca[None, :] + da[:, None]) % n_a) * n_b + (cb[None, :] + db[:, None]) % n_b
    return np.where(fixed[None, :] >= 0, fixed[None, :], idx)


def _chunks(n_members, width):
    step = max(1, CHUNK_ELEMENTS // max(width, 1))
    for start in range(0, n_members, step):
        yield slice(start, min(start + step, n_members))


def concentration_orbit(mass, fixed, ca, cb, offset, n_a, n_b, shift_a, shift_b,
                        shell_end, breaks, inner, outer, sigma, T, resid, jump):
    mass = np.asarray(mass)
    for sl in _chunks(len(shift_a), len(fixed)):
        nodes = _nodes(fixed, ca, cb, offset, n_a, n_b, shift_a[sl], shift_b[sl])
        cum = np.cumsum(mass[nodes], axis=1)[:, shell_end - 1]
        total = cum[:, -1:]
        F = cum[:, inner] + cum[:, outer] - total
        p = np.argmax(F >= 0.0, axis=1)
        rows = np.arange(len(p))
        q = np.maximum(p - 1, 0)
        first = p == 0
        a_in = cum[rows, inner[q]]
        a_out = total[:, 0] - cum[rows, outer[q]]
        f_cur = F[rows, p]
        f_prev = np.where(first, -total[:, 0], F[rows, q])
        in_prev = np.where(first, 0.0, a_in)
        sigma[sl] = np.where(first, 0.5 * breaks[1], 0.5 * (breaks[q] + breaks[p]))
        jump[sl] = f_cur - f_prev
        theta = -f_prev / (f_cur - f_prev)
        T[sl] = in_prev + theta * (cum[rows, inner[p]] - in_prev)
        resid[sl] = np.abs(a_in - a_out)


def ball_mass_orbit(mass, fixed, ca, cb, offset, n_a, n_b, shift_a, shift_b, stop, out):
    mass = np.asarray(mass)
    if stop == 0:
        out[:] = 0.0
        return
    for sl in _chunks(len(shift_a), stop):
        nodes = _nodes(fixed[:stop], ca[:stop], cb[:stop], offset, n_a, n_b, shift_a[sl], shift_b[sl])
        out[sl] = np.cumsum(mass[nodes], axis=1)[:, -1]
