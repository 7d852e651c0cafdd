# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-orbit loops for the concentration radius and ball masses."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _node(Py_ssize_t k, const long long[:] fixed, const long long[:] ca,
                             const long long[:] cb, long long da, long long db,
                             long long offset, long long n_a, long long n_b) nogil:
    if fixed[k] >= 0:
        return fixed[k]
    return offset + ((ca[k] + da) % n_a) * n_b + (cb[k] + db) % n_b


cdef void _shell_masses(const double[:] mass, const long long[:] fixed, const long long[:] ca,
                        const long long[:] cb, long long da, long long db, long long offset,
                        long long n_a, long long n_b, const long long[:] shell_end,
                        double[:] out) nogil:
    cdef Py_ssize_t g, k = 0
    cdef double acc = 0.0
    for g in range(shell_end.shape[0]):
        while k < shell_end[g]:
            acc += mass[_node(k, fixed, ca, cb, da, db, offset, n_a, n_b)]
            k += 1
        out[g] = acc


def concentration_orbit(const double[:] mass, const long long[:] fixed, const long long[:] ca,
                        const long long[:] cb, long long offset, long long n_a, long long n_b,
                        const long long[:] shift_a, const long long[:] shift_b,
                        const long long[:] shell_end, const double[:] breaks,
                        const long long[:] inner, const long long[:] outer,
                        double[:] sigma, double[:] T, double[:] resid, double[:] jump):
    cdef Py_ssize_t n_sh = shell_end.shape[0], n_br = breaks.shape[0]
    cdef double[:] cum = np.empty(n_sh)
    cdef Py_ssize_t m, p
    cdef double total, f_prev, f_cur, a_in, a_out, in_prev, theta
    with nogil:
        for m in range(shift_a.shape[0]):
            _shell_masses(mass, fixed, ca, cb, shift_a[m], shift_b[m], offset, n_a, n_b,
                          shell_end, cum)
            total = cum[n_sh - 1]
            f_prev = -total
            in_prev = 0.0
            p = 0
            while p < n_br:
                f_cur = cum[inner[p]] + cum[outer[p]] - total
                if f_cur >= 0.0:
                    break
                f_prev = f_cur
                in_prev = cum[inner[p]]
                p += 1
            if p == 0:
                sigma[m] = 0.5 * breaks[1]
                a_in = cum[inner[0]]
                a_out = total - cum[outer[0]]
            else:
                sigma[m] = 0.5 * (breaks[p - 1] + breaks[p])
                a_in = cum[inner[p - 1]]
                a_out = total - cum[outer[p - 1]]
            jump[m] = f_cur - f_prev
            theta = -f_prev / (f_cur - f_prev)
            T[m] = in_prev + theta * (cum[inner[p]] - in_prev)
            resid[m] = a_in - a_out if a_in >= a_out else a_out - a_in


def ball_mass_orbit(const double[:] mass, const long long[:] fixed, const long long[:] ca,
                    const long long[:] cb, long long offset, long long n_a, long long n_b,
                    const long long[:] shift_a, const long long[:] shift_b,
                    long long stop, double[:] out):
    """Mass of the first ``stop`` sorted nodes around every orbit member."""
    cdef Py_ssize_t m, k
    cdef double acc
    with nogil:
        for m in range(shift_a.shape[0]):
            acc = 0.0
            for k in range(stop):
                acc += mass[_node(k, fixed, ca, cb, shift_a[m], shift_b[m], offset, n_a, n_b)]
            out[m] = acc
