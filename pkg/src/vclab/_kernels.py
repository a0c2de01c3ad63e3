"""Compiled N-body sums for the regularized particle method.

Every target is reduced sequentially over its sources in a fixed order, so
results do not depend on the number of worker threads.
"""

import os

import numba
import numpy as np
from numba import njit, prange

INV_TWO_PI = 1.0 / (2.0 * np.pi)
MULTIPOLE_ORDER = 14
# a source blob is treated as a cluster when |target - center| >= radius / THETA
THETA = 0.25


def set_threads(n=None):
    """Cap worker threads at ``n`` or at $VCLAB_THREADS; returns the count in use."""
    if n is None:
        n = os.environ.get("VCLAB_THREADS")
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if n in (None, "") else max(1, min(int(n), limit))
    numba.set_num_threads(n)
    return n


@njit(cache=True, fastmath=True, inline="always")
def _sum_smooth(xi, yi, sx, sy, w, a, e, delta2):
    # delta2 > 0: no singular terms, branch-free so the loop vectorizes
    su = 0.0
    sv = 0.0
    for j in range(a, e):
        dx = xi - sx[j]
        dy = yi - sy[j]
        r = w[j] / (dx * dx + dy * dy + delta2)
        su -= dy * r
        sv += dx * r
    return su, sv


@njit(cache=True, inline="always")
def _sum_singular(xi, yi, sx, sy, w, a, e):
    su = 0.0
    sv = 0.0
    for j in range(a, e):
        dx = xi - sx[j]
        dy = yi - sy[j]
        r2 = dx * dx + dy * dy
        if r2 > 0.0:
            r = w[j] / r2
            su -= dy * r
            sv += dx * r
    return su, sv


@njit(parallel=True, cache=True, fastmath=True)
def direct_velocity(tx, ty, sx, sy, w, delta2):
    m = tx.size
    u = np.empty(m)
    v = np.empty(m)
    for i in prange(m):
        if delta2 > 0.0:
            su, sv = _sum_smooth(tx[i], ty[i], sx, sy, w, 0, sx.size, delta2)
        else:
            su, sv = _sum_singular(tx[i], ty[i], sx, sy, w, 0, sx.size)
        u[i] = su * INV_TWO_PI
        v[i] = sv * INV_TWO_PI
    return u, v


@njit(cache=True)
def cluster_moments(sx, sy, w, offsets, order):
    """Centers of vorticity, radii and multipole coefficients sum w (z - c)^k per cluster."""
    nb = offsets.size - 1
    cx = np.empty(nb)
    cy = np.empty(nb)
    rad = np.empty(nb)
    coef = np.zeros((nb, order + 1), dtype=np.complex128)
    for b in range(nb):
        a, e = offsets[b], offsets[b + 1]
        tw = 0.0
        mx = 0.0
        my = 0.0
        for j in range(a, e):
            tw += w[j]
            mx += w[j] * sx[j]
            my += w[j] * sy[j]
        cx[b] = mx / tw
        cy[b] = my / tw
        r = 0.0
        for j in range(a, e):
            dz = complex(sx[j] - cx[b], sy[j] - cy[b])
            d = abs(dz)
            if d > r:
                r = d
            p = complex(w[j], 0.0)
            for k in range(order + 1):
                coef[b, k] += p
                p *= dz
        rad[b] = r
    return cx, cy, rad, coef


@njit(parallel=True, cache=True, fastmath=True)
def clustered_velocity(tx, ty, sx, sy, w, offsets, delta2, order, theta):
    """Direct sums for nearby clusters, truncated multipoles for well-separated ones."""
    cx, cy, rad, coef = cluster_moments(sx, sy, w, offsets, order)
    nb = offsets.size - 1
    m = tx.size
    u = np.empty(m)
    v = np.empty(m)
    for i in prange(m):
        xi = tx[i]
        yi = ty[i]
        su = 0.0
        sv = 0.0
        for b in range(nb):
            dx = xi - cx[b]
            dy = yi - cy[b]
            d2 = dx * dx + dy * dy
            if rad[b] * rad[b] <= theta * theta * d2:
                s = 1.0 / complex(dx, dy)
                acc = coef[b, order]
                for k in range(order - 1, -1, -1):
                    acc = coef[b, k] + s * acc
                acc *= s
                # u - i v = acc / (i); accumulate 2 pi times the velocity
                su += acc.imag
                sv += acc.real
                if delta2 > 0.0:
                    # monopole estimate of K_delta - K
                    g = coef[b, 0].real * delta2 / (d2 * (d2 + delta2))
                    su += dy * g
                    sv -= dx * g
            elif delta2 > 0.0:
                du, dv = _sum_smooth(xi, yi, sx, sy, w, offsets[b], offsets[b + 1], delta2)
                su += du
                sv += dv
            else:
                du, dv = _sum_singular(xi, yi, sx, sy, w, offsets[b], offsets[b + 1])
                su += du
                sv += dv
        u[i] = su * INV_TWO_PI
        v[i] = sv * INV_TWO_PI
    return u, v
