"""Compiled Gauss-Seidel sweep kernels for the obstacle solvers.

Each kernel visits nodes in a fixed deterministic order (checkerboard for
the 1-D reference sweep, row-major for the rest), so repeated runs are
bit-identical.  They return (sweeps_used, last_change); sweeps_used is -1
when the sweep budget ran out before the stop tolerance was met.
"""

from __future__ import annotations

import math

import numba as nb


@nb.njit(cache=True)
def gs_obstacle_1d(w, v, half_kh2, stop_tol, max_sweeps):
    """Averaged update min(v, midpoint - tan(a)h^2/2) until sup-change < tol.

    Interior nodes are visited odd indices first, then even (checkerboard
    order): each color pass reads only the other color, which removes the
    store-to-load dependency of a lexicographic sweep without changing the
    nodewise update or the fixed point.
    """
    n = w.shape[0]
    delta = 0.0
    for sweep in range(max_sweeps):
        delta = 0.0
        for start in range(1, 3):
            for i in range(start, n - 1, 2):
                z = 0.5 * (w[i - 1] + w[i + 1]) - half_kh2
                if v[i] < z:
                    z = v[i]
                ch = abs(z - w[i])
                if ch > delta:
                    delta = ch
                w[i] = z
        if delta < stop_tol:
            return sweep + 1, delta
    return -1, delta


@nb.njit(cache=True, inline="always")
def _mean_for_angle(tan_a, branch, d):
    # Solve arctan(m + d) + arctan(m - d) = a for the eigenvalue mean m,
    # d >= 0 the fixed eigenvalue half-spread.  branch: 0 for a < pi/2,
    # 1 for a == pi/2, 2 for a > pi/2.
    if branch == 1:
        return math.sqrt(1.0 + d * d)
    y = tan_a * tan_a * (1.0 + d * d)
    root = math.sqrt(1.0 + y)
    if branch == 0:
        # Rationalized quadratic root, stable as tan_a -> 0+.
        return tan_a * (1.0 + d * d) / (1.0 + root)
    return (1.0 + root) / (-tan_a)


@nb.njit(cache=True)
def gs_envelope_2d(w, v, tan_a, branch, h2, stop_tol, max_sweeps):
    """Clip each interior node to the largest value keeping the discrete
    Hessian's angle sum at the phase, then to the obstacle."""
    nx, ny = w.shape
    delta = 0.0
    for sweep in range(max_sweeps):
        delta = 0.0
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                sx = w[i - 1, j] + w[i + 1, j]
                sy = w[i, j - 1] + w[i, j + 1]
                uxy = (
                    w[i + 1, j + 1] + w[i - 1, j - 1] - w[i + 1, j - 1] - w[i - 1, j + 1]
                ) / (4.0 * h2)
                half_diff = 0.5 * (sx - sy) / h2
                d = math.sqrt(half_diff * half_diff + uxy * uxy)
                m = _mean_for_angle(tan_a, branch, d)
                z = 0.25 * (sx + sy - 2.0 * h2 * m)
                if v[i, j] < z:
                    z = v[i, j]
                ch = abs(z - w[i, j])
                if ch > delta:
                    delta = ch
                w[i, j] = z
        if delta < stop_tol:
            return sweep + 1, delta
    return -1, delta


@nb.njit(cache=True, inline="always")
def _mean_by_newton(a_target, d, m0):
    # Safeguarded Newton on g(m) = arctan(m+d) + arctan(m-d) - a_target,
    # warm-started at m0.  g is strictly increasing with range (-pi, pi).
    lo = -1.0e8
    hi = 1.0e8
    m = m0
    if m <= lo or m >= hi:
        m = 0.0
    for _ in range(80):
        g = math.atan(m + d) + math.atan(m - d) - a_target
        if abs(g) < 1e-15:
            return m
        if g > 0.0:
            hi = m
        else:
            lo = m
        p = m + d
        q = m - d
        gp = 1.0 / (1.0 + p * p) + 1.0 / (1.0 + q * q)
        step = g / gp
        mn = m - step
        if mn <= lo or mn >= hi:
            mn = 0.5 * (lo + hi)
        if abs(mn - m) < 1e-14 * (1.0 + abs(m)):
            return mn
        m = mn
    return m


@nb.njit(cache=True)
def gs_oracle_2d(w, v, a_target, h2, stop_tol, max_sweeps, omega):
    """Reference sweep: same clipping fixed point, scalar solve by Newton.

    The averaged update moves each node a fraction omega of the way to its
    nodewise solution before clipping at the obstacle (projected
    over-relaxation); omega = 1 recovers the plain sweep and any omega in
    (0, 2) leaves the fixed point unchanged.
    """
    nx, ny = w.shape
    delta = 0.0
    for sweep in range(max_sweeps):
        delta = 0.0
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                sx = w[i - 1, j] + w[i + 1, j]
                sy = w[i, j - 1] + w[i, j + 1]
                uxy = (
                    w[i + 1, j + 1] + w[i - 1, j - 1] - w[i + 1, j - 1] - w[i - 1, j + 1]
                ) / (4.0 * h2)
                half_diff = 0.5 * (sx - sy) / h2
                d = math.sqrt(half_diff * half_diff + uxy * uxy)
                m0 = 0.5 * (sx + sy - 4.0 * w[i, j]) / h2
                m = _mean_by_newton(a_target, d, m0)
                z = w[i, j] + omega * (0.25 * (sx + sy - 2.0 * h2 * m) - w[i, j])
                if v[i, j] < z:
                    z = v[i, j]
                ch = abs(z - w[i, j])
                if ch > delta:
                    delta = ch
                w[i, j] = z
        if delta < stop_tol:
            return sweep + 1, delta
    return -1, delta
