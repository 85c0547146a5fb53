"""Numba kernels for the split-step propagator.

Everything here is deliberately serial and allocation free in the hot
loops so repeated runs are bit-for-bit reproducible on any machine.
The tridiagonal systems have constant coefficients along each sweep
direction, so the forward-elimination factors are precomputed once per
step (z) or once per propagator (R) and shared by every line.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def phase_multiply(psi, phase):
    """In-place elementwise product psi *= phase."""
    n_R, n_z = psi.shape
    for j in range(n_R):
        for i in range(n_z):
            psi[j, i] *= phase[j, i]


@njit(cache=True)
def thomas_factors(d, u, l, cp, denom):
    """Forward-elimination factors for a constant-coefficient tridiagonal.

    Matrix rows are (l, d, u).  Fills cp (modified upper diagonal) and
    denom (reciprocal pivots) so a solve is one forward and one backward
    pass with no divisions.
    """
    n = cp.size
    denom[0] = 1.0 / d
    cp[0] = u * denom[0]
    for i in range(1, n):
        denom[i] = 1.0 / (d - l * cp[i - 1])
        cp[i] = u * denom[i]


@njit(cache=True, fastmath=True)
def z_sweep(psi, dm, um, lm, lp, cp, denom):
    """Crank-Nicolson half step along z for every R line, in place.

    Solves (l_p, d_p, u_p) x = (lm, dm, um) psi per row, where cp/denom
    came from thomas_factors(d_p, u_p, l_p).  Points outside the grid
    are treated as zero (hard-wall boundaries).
    """
    n_R, n_z = psi.shape
    g = np.empty(n_z, np.complex128)
    for j in range(n_R):
        row = psi[j]
        prev = row[0]
        g[0] = (dm * prev + um * row[1]) * denom[0]
        for i in range(1, n_z - 1):
            cur = row[i]
            rhs = dm * cur + um * row[i + 1] + lm * prev
            g[i] = (rhs - lp * g[i - 1]) * denom[i]
            prev = cur
        rhs = dm * row[n_z - 1] + lm * prev
        x = (rhs - lp * g[n_z - 2]) * denom[n_z - 1]
        row[n_z - 1] = x
        for i in range(n_z - 2, -1, -1):
            x = g[i] - cp[i] * x
            row[i] = x


@njit(cache=True, fastmath=True)
def r_sweep(psi, dm, om, op, cp, denom):
    """Crank-Nicolson half step along R for every z column, in place.

    The R operator is symmetric (off-diagonals equal), columns are
    processed in cache-friendly blocks of contiguous z indices.
    """
    n_R, n_z = psi.shape
    B = 64
    prev = np.empty(B, np.complex128)
    cur = np.empty(B, np.complex128)
    for i0 in range(0, n_z, B):
        b = min(B, n_z - i0)
        d0 = denom[0]
        for k in range(b):
            prev[k] = psi[0, i0 + k]
            psi[0, i0 + k] = (dm * prev[k] + om * psi[1, i0 + k]) * d0
        for j in range(1, n_R - 1):
            dj = denom[j]
            for k in range(b):
                cur[k] = psi[j, i0 + k]
                rhs = dm * cur[k] + om * (prev[k] + psi[j + 1, i0 + k])
                psi[j, i0 + k] = (rhs - op * psi[j - 1, i0 + k]) * dj
                prev[k] = cur[k]
        dn = denom[n_R - 1]
        for k in range(b):
            rhs = dm * psi[n_R - 1, i0 + k] + om * prev[k]
            psi[n_R - 1, i0 + k] = (rhs - op * psi[n_R - 2, i0 + k]) * dn
        for j in range(n_R - 2, -1, -1):
            cj = cp[j]
            for k in range(b):
                psi[j, i0 + k] -= cj * psi[j + 1, i0 + k]


@njit(cache=True, fastmath=True)
def absorb(psi, mask_left, mask_right, i_right):
    """Damp the outer z strips in place; return removed |psi|^2 (no cell factor).

    mask_left applies to columns [0, len), mask_right to columns
    [i_right, i_right + len).
    """
    n_R = psi.shape[0]
    n_l = mask_left.size
    n_r = mask_right.size
    acc = 0.0
    for j in range(n_R):
        for i in range(n_l):
            c = psi[j, i]
            m = mask_left[i]
            acc += (c.real * c.real + c.imag * c.imag) * (1.0 - m * m)
            psi[j, i] = c * m
        for i in range(n_r):
            c = psi[j, i_right + i]
            m = mask_right[i]
            acc += (c.real * c.real + c.imag * c.imag) * (1.0 - m * m)
            psi[j, i_right + i] = c * m
    return acc
