"""Compiled Numerov recurrences.

``q`` holds k^2(r) = (E - V(r)) / (hbar^2/2mu) on a uniform grid of spacing
``h``.  The recurrence is carried in summed form: with w = (1 + h^2 q/12) u
and the first difference d = w[i+1] - w[i], one step is
``d += -h^2 q[i] u[i]``, ``w[i+1] = w[i] + d``.  This keeps roundoff from
growing like 1/h^2 on fine grids.  Both sweeps rescale the partial solution
whenever it exceeds ``_BIG`` so deep energies and long grids cannot overflow.
"""

import numpy as np
from numba import njit

_BIG = 1e150


@njit(cache=True)
def outward(q, h, i0, iend, u):
    """Fill u[i0..iend] from u[i0] = 0; returns the number of sign changes."""
    h2 = h * h
    u[:i0 + 1] = 0.0
    u[i0 + 1] = 1e-30
    w = u[i0 + 1] * (1.0 + h2 * q[i0 + 1] / 12.0)
    d = w  # w[i0] = 0
    nodes = 0
    for i in range(i0 + 1, iend):
        d -= h2 * q[i] * u[i]
        w += d
        u[i + 1] = w / (1.0 + h2 * q[i + 1] / 12.0)
        if u[i] * u[i + 1] < 0.0:
            nodes += 1
        if abs(u[i + 1]) > _BIG:
            for j in range(i0, i + 2):
                u[j] /= _BIG
            w /= _BIG
            d /= _BIG
    return nodes


@njit(cache=True)
def inward(q, h, istart, kappa, u):
    """Fill u[istart..N] from the decaying tail exp(-kappa r) at the outer edge."""
    h2 = h * h
    last = q.shape[0] - 1
    u[last] = 1.0
    u[last - 1] = np.exp(kappa * h)
    w_next = u[last] * (1.0 + h2 * q[last] / 12.0)
    w = u[last - 1] * (1.0 + h2 * q[last - 1] / 12.0)
    d = w - w_next
    for i in range(last - 1, istart, -1):
        d -= h2 * q[i] * u[i]
        w += d
        u[i - 1] = w / (1.0 + h2 * q[i - 1] / 12.0)
        if abs(u[i - 1]) > _BIG:
            for j in range(i - 1, last + 1):
                u[j] /= _BIG
            w /= _BIG
            d /= _BIG


@njit(cache=True)
def resume(q, h, i, iend, u):
    """Continue an outward sweep from given u[i], u[i+1] up to u[iend]."""
    h2 = h * h
    w_prev = u[i] * (1.0 + h2 * q[i] / 12.0)
    w = u[i + 1] * (1.0 + h2 * q[i + 1] / 12.0)
    d = w - w_prev
    for k in range(i + 1, iend):
        d -= h2 * q[k] * u[k]
        w += d
        u[k + 1] = w / (1.0 + h2 * q[k + 1] / 12.0)
        if abs(u[k + 1]) > _BIG:
            for j in range(k + 2):
                u[j] /= _BIG
            w /= _BIG
            d /= _BIG
