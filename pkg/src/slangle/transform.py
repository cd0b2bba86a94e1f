"""Partial Legendre transforms in the time variable on sampled families.

For a family f(t, x) sampled on a time grid, the forward transform is

    f*(tau, x) = min_t [f(t, x) - tau * t]

and the inverse is

    g*(t, x) = max_tau [g(tau, x) + tau * t].

Both are computed per space point either naively (the reference) or through
the convex/concave hull of the sampled graph, which gives the same values in
O(K + |tau|) per point.  Composing the two recovers the convex minorant in t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

HULL = "hull"
NAIVE = "naive"


@dataclass(frozen=True)
class SampledFamily:
    """Values of a family over a strictly increasing primal grid.

    values has shape (len(grid),) + space_shape; axis 0 is the primal
    (time or slope) variable.
    """

    grid: np.ndarray
    values: np.ndarray

    def __init__(self, grid, values) -> None:
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        if g.ndim != 1 or g.size < 1:
            raise DomainError("primal grid must be 1-D and nonempty")
        if not np.all(np.diff(g) > 0):
            raise DomainError("primal grid must be strictly increasing")
        if v.ndim < 1 or v.shape[0] != g.size:
            raise DomainError(
                f"values shape {v.shape} does not match grid of length {g.size}"
            )
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
            raise DomainError("grid and values must be finite")
        g = g.copy()
        v = v.copy()
        g.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def space_shape(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    def flat_values(self) -> np.ndarray:
        """View with space axes flattened to one column axis."""
        return self.values.reshape(self.values.shape[0], -1)


def _lower_hull(t: np.ndarray, f: np.ndarray) -> list[int]:
    # Monotone chain over points already sorted by t.
    idx: list[int] = []
    for k in range(t.size):
        while len(idx) >= 2:
            i, j = idx[-2], idx[-1]
            # Keep j only if it lies strictly below the chord i -> k.
            if (f[j] - f[i]) * (t[k] - t[i]) <= (f[k] - f[i]) * (t[j] - t[i]):
                break
            idx.pop()
        idx.append(k)
    return idx


def _conjugate_column(t: np.ndarray, f: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # min_t [f(t) - tau*t] for ascending tau via the lower hull of (t, f).
    hull = _lower_hull(t, f)
    th = t[hull]
    fh = f[hull]
    out = np.empty(tau.size)
    j = 0
    last = len(hull) - 1
    for i, s in enumerate(tau):
        while j < last and (fh[j + 1] - fh[j]) < s * (th[j + 1] - th[j]):
            j += 1
        out[i] = fh[j] - s * th[j]
    return out


def partial_legendre(
    f: SampledFamily, tau_grid, method: str = HULL
) -> SampledFamily:
    """Forward transform min_t [f - tau*t] onto the given slope grid."""
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 1 or not np.all(np.diff(tau) > 0):
        raise DomainError("tau grid must be 1-D, nonempty, strictly increasing")
    cols = f.flat_values()
    if method == NAIVE:
        out = np.empty((tau.size, cols.shape[1]))
        for i, s in enumerate(tau):
            out[i] = np.min(cols - s * f.grid[:, None], axis=0)
    elif method == HULL:
        out = np.empty((tau.size, cols.shape[1]))
        for col in range(cols.shape[1]):
            out[:, col] = _conjugate_column(f.grid, cols[:, col], tau)
    else:
        raise DomainError(f"unknown method {method!r}")
    return SampledFamily(tau, out.reshape((tau.size,) + f.space_shape))


def _upper_hull(tau: np.ndarray, g: np.ndarray) -> list[int]:
    idx: list[int] = []
    for k in range(tau.size):
        while len(idx) >= 2:
            i, j = idx[-2], idx[-1]
            if (g[j] - g[i]) * (tau[k] - tau[i]) >= (g[k] - g[i]) * (tau[j] - tau[i]):
                break
            idx.pop()
        idx.append(k)
    return idx


def _inverse_column(tau: np.ndarray, g: np.ndarray, t: np.ndarray) -> np.ndarray:
    # max_tau [g(tau) + tau*t] for ascending t via the upper hull of (tau, g).
    hull = _upper_hull(tau, g)
    th = tau[hull]
    gh = g[hull]
    out = np.empty(t.size)
    j = 0
    last = len(hull) - 1
    for i, tt in enumerate(t):
        while j < last and (gh[j + 1] - gh[j]) > -tt * (th[j + 1] - th[j]):
            j += 1
        out[i] = gh[j] + tt * th[j]
    return out


def inverse_partial_legendre(
    g: SampledFamily, t_grid, method: str = HULL
) -> SampledFamily:
    """Inverse transform max_tau [g + tau*t] onto the given time grid."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or not np.all(np.diff(t) > 0):
        raise DomainError("t grid must be 1-D, nonempty, strictly increasing")
    cols = g.flat_values()
    if method == NAIVE:
        out = np.empty((t.size, cols.shape[1]))
        for i, tt in enumerate(t):
            out[i] = np.max(cols + tt * g.grid[:, None], axis=0)
    elif method == HULL:
        out = np.empty((t.size, cols.shape[1]))
        for col in range(cols.shape[1]):
            out[:, col] = _inverse_column(g.grid, cols[:, col], t)
    else:
        raise DomainError(f"unknown method {method!r}")
    return SampledFamily(t, out.reshape((t.size,) + g.space_shape))


def slope_range(f: SampledFamily) -> tuple[float, float]:
    """Padded range of one-sided difference quotients across the family.

    The interval is widened by 5% of its width, with a small absolute floor
    so that constant-slope data still yields a nonempty interval.
    """
    if f.grid.size == 1:
        lo = hi = 0.0
    else:
        dt = np.diff(f.grid)
        quot = np.diff(f.flat_values(), axis=0) / dt[:, None]
        lo = float(np.min(quot))
        hi = float(np.max(quot))
    pad = max(0.05 * (hi - lo), 1e-9 * (1.0 + max(abs(lo), abs(hi))))
    return lo - pad, hi + pad
