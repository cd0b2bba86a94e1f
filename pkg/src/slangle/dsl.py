"""Degenerate space-time Dirichlet solves on the unit time interval.

Boundary data consists of two caps (values at t = 0 and t = 1 over the
closure of the space domain) and a lateral family g_y(r) over r in [0, 1]
for boundary points y.  For a phase c in [n*pi/2, (n+1)*pi/2) the solution
is assembled from sliced obstacle problems at phase a = c - pi/2:

    u(t, x) = max_tau [ h_tau(x) + tau * t ],
    h_tau   = envelope( min(capBottom, capTop - tau) ; min_r [g(r, .) - r*tau] ).

The slope grid for tau either is supplied or covers the data's difference
quotients.  Verifiers check the reduced space membership of inf_t u, the
convexity of t-slices, and the space-time angle residual.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .angles import SymMatrix, lifted_angle, spacetime_lifted_angle
from .errors import ConvergenceError, DomainError
from .solvers import (
    EnvelopeProblem,
    SpaceGrid,
    _hessian_fields,
    _ring_mask,
    discrete_hessian_angle,
    envelope,
)
from .transform import SampledFamily, inverse_partial_legendre, slope_range

# Data consistency at the corners of the cylinder.
CORNER_TOL = 1e-9

# Slack allowed when checking that the caps obey the reduced constraint.
CAP_MEMBERSHIP_TOL = 1e-8

DEFAULT_NTAU = 401


def _ring_coords(grid: SpaceGrid) -> np.ndarray:
    """Boundary node coordinates, row-major order, shape (k, ndim)."""
    if grid.ndim == 1:
        lo, hi = grid.bounds[0]
        return np.array([[lo], [hi]])
    xs, ys = grid.axis(0), grid.axis(1)
    mask = _ring_mask(grid.shape)
    xi, yi = np.nonzero(mask)
    return np.column_stack([xs[xi], ys[yi]])


def _ring_values(grid_values: np.ndarray) -> np.ndarray:
    if grid_values.ndim == 1:
        return grid_values[[0, -1]]
    return grid_values[_ring_mask(grid_values.shape)]


@dataclass(frozen=True)
class BoundaryData:
    """Caps, lateral family, and phase for the space-time problem.

    lateral has shape (len(r_samples), k) where k is the number of boundary
    nodes of the cap grid in row-major order (two endpoints in 1-D).
    """

    cap_bottom: SpaceGrid
    cap_top: SpaceGrid
    r_samples: np.ndarray
    lateral: np.ndarray
    phase: float

    def __init__(
        self,
        cap_bottom: SpaceGrid,
        cap_top: SpaceGrid,
        r_samples,
        lateral,
        phase: float,
        cap_check: str = "error",
    ) -> None:
        if not isinstance(cap_bottom, SpaceGrid) or not isinstance(cap_top, SpaceGrid):
            raise DomainError("caps must be SpaceGrid instances")
        if cap_bottom.bounds != cap_top.bounds or cap_bottom.shape != cap_top.shape:
            raise DomainError("caps must share bounds and shape")
        n = cap_bottom.ndim
        c = float(phase)
        lo, hi = n * math.pi / 2, (n + 1) * math.pi / 2
        if not (lo <= c < hi):
            raise DomainError(f"phase {c} outside [{lo:.6f}, {hi:.6f}) for n={n}")
        r = np.asarray(r_samples, dtype=float)
        if r.ndim != 1 or r.size < 2 or not np.all(np.diff(r) > 0):
            raise DomainError("r samples must be 1-D strictly increasing")
        if abs(r[0]) > 1e-12 or abs(r[-1] - 1.0) > 1e-12:
            raise DomainError("r samples must start at 0 and end at 1")
        lat = np.asarray(lateral, dtype=float)
        n_ring = _ring_values(cap_bottom.values).size
        if lat.shape != (r.size, n_ring):
            raise DomainError(
                f"lateral shape {lat.shape} must be ({r.size}, {n_ring})"
            )
        if not np.all(np.isfinite(lat)):
            raise DomainError("lateral values must be finite")
        scale = 1.0 + max(
            float(np.max(np.abs(cap_bottom.values))),
            float(np.max(np.abs(cap_top.values))),
        )
        if np.max(np.abs(lat[0] - _ring_values(cap_bottom.values))) > CORNER_TOL * scale:
            raise DomainError("lateral at r=0 does not match the bottom cap")
        if np.max(np.abs(lat[-1] - _ring_values(cap_top.values))) > CORNER_TOL * scale:
            raise DomainError("lateral at r=1 does not match the top cap")
        _check_cap_membership(cap_bottom, c, cap_check, "bottom cap")
        _check_cap_membership(cap_top, c, cap_check, "top cap")
        r = r.copy()
        lat = lat.copy()
        r.flags.writeable = False
        lat.flags.writeable = False
        object.__setattr__(self, "cap_bottom", cap_bottom)
        object.__setattr__(self, "cap_top", cap_top)
        object.__setattr__(self, "r_samples", r)
        object.__setattr__(self, "lateral", lat)
        object.__setattr__(self, "phase", c)

    @property
    def space_dim(self) -> int:
        return self.cap_bottom.ndim

    @classmethod
    def from_callables(
        cls,
        bounds,
        shape,
        cap_bottom_fn,
        cap_top_fn,
        lateral_fn,
        phase: float,
        n_r: int = 101,
        cap_check: str = "error",
    ) -> "BoundaryData":
        """Sample caps and the lateral family from callables.

        cap functions take space coordinates; lateral_fn takes (r, *coords).
        """
        template = SpaceGrid(bounds, np.zeros(shape))
        if template.ndim == 1:
            xs = template.axis(0)
            bottom = template.with_values([cap_bottom_fn(x) for x in xs])
            top = template.with_values([cap_top_fn(x) for x in xs])
        else:
            xs = template.axis(0)[:, None]
            ys = template.axis(1)[None, :]
            bottom = template.with_values(
                np.broadcast_to(cap_bottom_fn(xs, ys), shape)
            )
            top = template.with_values(np.broadcast_to(cap_top_fn(xs, ys), shape))
        rs = np.linspace(0.0, 1.0, n_r)
        ring = _ring_coords(template)
        lat = np.array(
            [[lateral_fn(r, *coords) for coords in ring] for r in rs], dtype=float
        )
        return cls(bottom, top, rs, lat, phase, cap_check=cap_check)


def _check_cap_membership(cap: SpaceGrid, c: float, mode: str, label: str) -> None:
    if mode == "skip":
        return
    if mode not in ("error", "warn"):
        raise DomainError(f"cap_check must be 'error', 'warn', or 'skip', got {mode!r}")
    angles = discrete_hessian_angle(cap)
    worst = float(np.min(angles)) - (c - math.pi / 2)
    if worst < -CAP_MEMBERSHIP_TOL:
        msg = (
            f"{label} leaves the reduced constraint set: worst discrete angle "
            f"margin {worst:.3e}"
        )
        if mode == "error":
            raise DomainError(msg)
        warnings.warn(msg, stacklevel=3)


def obstacle_for_tau(data: BoundaryData, tau: float) -> EnvelopeProblem:
    """Sliced obstacle problem at slope tau, phase a = c - pi/2."""
    tau = float(tau)
    v = np.minimum(data.cap_bottom.values, data.cap_top.values - tau)
    f_ring = np.min(data.lateral - data.r_samples[:, None] * tau, axis=0)
    if data.space_dim == 1:
        trace = f_ring
    else:
        trace = np.zeros(data.cap_bottom.shape)
        trace[_ring_mask(trace.shape)] = f_ring
    return EnvelopeProblem(
        data.cap_bottom.with_values(v), trace, data.phase - math.pi / 2
    )


def _auto_tau_grid(data: BoundaryData, ntau: int) -> np.ndarray:
    caps = SampledFamily(
        [0.0, 1.0],
        np.stack([data.cap_bottom.values, data.cap_top.values]),
    )
    lat = SampledFamily(data.r_samples, data.lateral)
    lo_c, hi_c = slope_range(caps)
    lo_l, hi_l = slope_range(lat)
    return np.linspace(min(lo_c, lo_l), max(hi_c, hi_l), ntau)


@dataclass(frozen=True)
class VerifierReport:
    """Outcome of one diagnostic check."""

    name: str
    passed: bool
    worst_margin: float
    node_count: int
    fraction_ok: float
    tolerance: float
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {
            "pass": bool(self.passed),
            "worstMargin": float(self.worst_margin),
            "nodeCount": int(self.node_count),
            "fractionOk": float(self.fraction_ok),
            "tolerance": float(self.tolerance),
        }
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class DSLSolution:
    """Solution samples u(t, x) plus the slope grid and diagnostics."""

    family: SampledFamily
    space_bounds: tuple
    tau_grid: np.ndarray
    diagnostics: dict

    @property
    def t_grid(self) -> np.ndarray:
        return self.family.grid


def solve_dsl(
    data: BoundaryData,
    nt: int = 101,
    tau_grid=None,
    ntau: int = DEFAULT_NTAU,
    threads: int = 1,
    run_checks: bool = True,
    envelope_kwargs: dict | None = None,
) -> DSLSolution:
    """Assemble the space-time solution from sliced envelopes.

    The returned family is sampled on a uniform t grid over [0, 1].  With
    run_checks the three verifiers and a boundary-match report are attached.
    """
    if nt < 3:
        raise DomainError("need at least 3 time samples")
    if tau_grid is None:
        if ntau < 2:
            raise DomainError("need at least 2 slope samples")
        tau = _auto_tau_grid(data, ntau)
    else:
        tau = np.asarray(tau_grid, dtype=float)
        if tau.ndim != 1 or tau.size < 2 or not np.all(np.diff(tau) > 0):
            raise DomainError("tau grid must be 1-D strictly increasing")
    kwargs = envelope_kwargs or {}

    def slice_for(j: int) -> np.ndarray:
        try:
            return envelope(obstacle_for_tau(data, tau[j]), **kwargs).values
        except ConvergenceError as exc:
            raise ConvergenceError(f"slice tau={tau[j]:.6g}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            slices = list(pool.map(slice_for, range(tau.size)))
    else:
        slices = [slice_for(j) for j in range(tau.size)]
    sliced = SampledFamily(tau, np.stack(slices))
    t_grid = np.linspace(0.0, 1.0, nt)
    family = inverse_partial_legendre(sliced, t_grid)
    bounds = data.cap_bottom.bounds
    diagnostics: dict = {}
    if run_checks:
        diagnostics["min_principle"] = verify_min_principle(
            family, bounds, data.phase
        )
        diagnostics["time_convexity"] = verify_time_convexity(family)
        diagnostics["angle_residual"] = verify_angle_residual(
            family, bounds, data.phase
        )
        diagnostics["boundary_match"] = _boundary_match_report(family, data, tau)
    return DSLSolution(family, bounds, tau, diagnostics)


def _boundary_match_report(
    family: SampledFamily, data: BoundaryData, tau: np.ndarray
) -> VerifierReport:
    u = family.values
    err_bottom = float(np.max(np.abs(u[0] - data.cap_bottom.values)))
    err_top = float(np.max(np.abs(u[-1] - data.cap_top.values)))
    ring_cols = u.reshape(u.shape[0], -1)[
        :, np.flatnonzero(_flat_ring(u.shape[1:]))
    ]
    err_lat = 0.0
    for col, gcol in zip(ring_cols.T, data.lateral.T):
        vals = np.interp(data.r_samples, family.grid, col)
        err_lat = max(err_lat, float(np.max(np.abs(vals - gcol))))
    worst = max(err_bottom, err_top, err_lat)
    h = data.cap_bottom.h
    tol = 5.0 * (h + (tau[-1] - tau[0]) / tau.size)
    return VerifierReport(
        name="boundary_match",
        passed=worst <= tol,
        worst_margin=worst,
        node_count=int(ring_cols.shape[1] + 2 * data.cap_bottom.values.size),
        fraction_ok=1.0,
        tolerance=tol,
        extra={
            "capBottomError": err_bottom,
            "capTopError": err_top,
            "lateralError": err_lat,
        },
    )


def _flat_ring(space_shape: tuple[int, ...]) -> np.ndarray:
    if len(space_shape) == 1:
        mask = np.zeros(space_shape, dtype=bool)
        mask[0] = mask[-1] = True
        return mask.ravel()
    return _ring_mask(space_shape).ravel()


def _stable_mask_1d(fields: list[np.ndarray], threshold: float) -> np.ndarray:
    # Node is stable when every listed second-difference field jumps less
    # than the threshold between it and each interior neighbor.
    m = fields[0].size
    stable = np.ones(m, dtype=bool)
    for f in fields:
        jump = np.abs(np.diff(f))
        bad = jump >= threshold
        stable[1:] &= ~bad
        stable[:-1] &= ~bad
    return stable


def _stable_mask_2d(fields: list[np.ndarray], threshold: float) -> np.ndarray:
    stable = np.ones_like(fields[0], dtype=bool)
    for f in fields:
        jx = np.abs(np.diff(f, axis=0)) >= threshold
        stable[1:, :] &= ~jx
        stable[:-1, :] &= ~jx
        jy = np.abs(np.diff(f, axis=1)) >= threshold
        stable[:, 1:] &= ~jy
        stable[:, :-1] &= ~jy
    return stable


def verify_min_principle(
    family: SampledFamily,
    space_bounds,
    phase: float,
    tol: float = 1e-6,
    required_fraction: float = 0.99,
    stability_factor: float = 10.0,
) -> VerifierReport:
    """Check inf_t u against the reduced constraint at phase c - pi/2.

    Evaluates the discrete Hessian angle of v = min_t u at interior space
    nodes whose second differences are stable under the neighbor-jump proxy,
    and reports the worst margin angle - (c - pi/2).
    """
    v = family.values.min(axis=0)
    grid = SpaceGrid(space_bounds, v)
    target = float(phase) - math.pi / 2
    angles = discrete_hessian_angle(grid)
    h = grid.h
    threshold = stability_factor * h
    if grid.ndim == 1:
        d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
        stable = _stable_mask_1d([d2], threshold)
    else:
        hs = grid.square_spacing()
        uxx, uyy, uxy = _hessian_fields(v, hs)
        stable = _stable_mask_2d([uxx, uyy, uxy], threshold)
    margins = angles[stable] - target
    count = int(margins.size)
    if count == 0:
        return VerifierReport(
            "min_principle", True, math.inf, 0, 1.0, tol, {"stableFraction": 0.0}
        )
    ok = float(np.mean(margins >= -tol))
    return VerifierReport(
        name="min_principle",
        passed=ok >= required_fraction,
        worst_margin=float(np.min(margins)),
        node_count=count,
        fraction_ok=ok,
        tolerance=tol,
        extra={"stableFraction": float(np.mean(stable))},
    )


def verify_time_convexity(family: SampledFamily, rel_tol: float = 1e-8) -> VerifierReport:
    """Convexity of t-slices: undivided second differences in t must not dip
    below -rel_tol * (1 + sup|u|)."""
    t = family.grid
    if t.size < 3:
        raise DomainError("need at least 3 time samples")
    dt = np.diff(t)
    if np.max(dt) - np.min(dt) > 1e-9 * np.max(dt):
        raise DomainError("time grid must be uniform for the convexity check")
    u = family.flat_values()
    d2 = u[2:] - 2 * u[1:-1] + u[:-2]
    scale = 1.0 + float(np.max(np.abs(u)))
    worst = float(np.min(d2))
    tol = rel_tol * scale
    return VerifierReport(
        name="time_convexity",
        passed=worst >= -tol,
        worst_margin=worst,
        node_count=int(d2.size),
        fraction_ok=float(np.mean(d2 >= -tol)),
        tolerance=tol,
    )


def _spacetime_angle_fields_1d(att, atx, axx, locus_tol: float = 1e-9):
    # Vectorized 2x2 space-time angle matching spacetime_lifted_angle.
    norm = np.sqrt(att * att + 2 * atx * atx + axx * axx)
    scale = locus_tol * (1.0 + norm)
    on_locus = (np.abs(att) <= scale) & (np.abs(atx) <= scale)
    base = np.arctan(axx)
    denom = 1.0 + axx * axx
    quad_re = atx * atx / denom
    quad_im = -atx * atx * axx / denom
    arg = np.arctan2(att + quad_im, quad_re)
    arg = np.clip(arg, -math.pi / 2, math.pi / 2)
    return np.where(on_locus, base + math.pi / 2, base + arg)


def verify_angle_residual(
    family: SampledFamily,
    space_bounds,
    phase: float,
    tol: float = 1e-3,
    required_fraction: float = 0.95,
    stability_factor: float = 10.0,
    fddot_factor: float = 10.0,
) -> VerifierReport:
    """Space-time angle residual |angle - c| at stable interior nodes.

    Also reports, at space nodes with an interior time minimizer and
    t-curvature above fddot_factor * h, the gap between the reduced-Hessian
    angle at the minimizer and (space-time angle - pi/2).
    """
    c = float(phase)
    t = family.grid
    dt = float(t[1] - t[0])
    if np.max(np.diff(t)) - np.min(np.diff(t)) > 1e-9 * dt:
        raise DomainError("time grid must be uniform for the residual check")
    grid = SpaceGrid(space_bounds, family.values[0])
    h = grid.h
    u = family.values
    if grid.ndim != 1:
        return _angle_residual_nd(family, grid, c, tol, required_fraction,
                                  stability_factor, fddot_factor)
    hx = grid.spacings()[0]
    core = u[1:-1, 1:-1]
    att = (u[2:, 1:-1] - 2 * core + u[:-2, 1:-1]) / (dt * dt)
    axx = (u[1:-1, 2:] - 2 * core + u[1:-1, :-2]) / (hx * hx)
    atx = (u[2:, 2:] + u[:-2, :-2] - u[2:, :-2] - u[:-2, 2:]) / (4 * dt * hx)
    angles = _spacetime_angle_fields_1d(att, atx, axx)
    threshold = stability_factor * h
    stable = _stable_mask_2d([att, axx, atx], threshold)
    residuals = np.abs(angles[stable] - c)
    count = int(residuals.size)
    if count == 0:
        ok, worst = 1.0, 0.0
    else:
        ok = float(np.mean(residuals <= tol))
        worst = float(np.max(residuals))
    extra = _reduction_gap_1d(u, att, atx, axx, angles, dt, hx, fddot_factor * h)
    extra["stableFraction"] = float(np.mean(stable)) if stable.size else 0.0
    return VerifierReport(
        name="angle_residual",
        passed=ok >= required_fraction,
        worst_margin=worst,
        node_count=count,
        fraction_ok=ok,
        tolerance=tol,
        extra=extra,
    )


def _reduction_gap_1d(u, att, atx, axx, angles, dt, hx, fddot_min) -> dict:
    # Corollary check: at interior time minimizers with enough t-curvature,
    # arctan of the reduced Hessian should equal the space-time angle - pi/2.
    nt, nx = u.shape
    worst = 0.0
    count = 0
    for i in range(1, nx - 1):
        k = int(np.argmin(u[:, i]))
        if k == 0 or k == nt - 1:
            continue
        fdd = att[k - 1, i - 1]
        if fdd <= fddot_min:
            continue
        reduced = axx[k - 1, i - 1] - atx[k - 1, i - 1] ** 2 / fdd
        gap = abs(math.atan(reduced) - (angles[k - 1, i - 1] - math.pi / 2))
        worst = max(worst, gap)
        count += 1
    return {"reductionGap": worst, "reductionNodes": count}


def _angle_residual_nd(
    family, grid, c, tol, required_fraction, stability_factor, fddot_factor
) -> VerifierReport:
    # 2-D space: assemble 3x3 space-time Hessians nodewise.
    u = family.values
    t = family.grid
    dt = float(t[1] - t[0])
    hs = grid.square_spacing()
    nt, nx, ny = u.shape
    residuals = []
    fields = {}
    core = u[1:-1, 1:-1, 1:-1]
    att = (u[2:, 1:-1, 1:-1] - 2 * core + u[:-2, 1:-1, 1:-1]) / (dt * dt)
    axx = (u[1:-1, 2:, 1:-1] - 2 * core + u[1:-1, :-2, 1:-1]) / (hs * hs)
    ayy = (u[1:-1, 1:-1, 2:] - 2 * core + u[1:-1, 1:-1, :-2]) / (hs * hs)
    atx = (
        u[2:, 2:, 1:-1] + u[:-2, :-2, 1:-1] - u[2:, :-2, 1:-1] - u[:-2, 2:, 1:-1]
    ) / (4 * dt * hs)
    aty = (
        u[2:, 1:-1, 2:] + u[:-2, 1:-1, :-2] - u[2:, 1:-1, :-2] - u[:-2, 1:-1, 2:]
    ) / (4 * dt * hs)
    axy = (
        u[1:-1, 2:, 2:] + u[1:-1, :-2, :-2] - u[1:-1, 2:, :-2] - u[1:-1, :-2, 2:]
    ) / (4 * hs * hs)
    fields = [att, axx, ayy, atx, aty, axy]
    threshold = stability_factor * grid.h
    stable = np.ones_like(att, dtype=bool)
    for f in fields:
        for axis in (0, 1, 2):
            j = np.abs(np.diff(f, axis=axis)) >= threshold
            sl_lo = [slice(None)] * 3
            sl_hi = [slice(None)] * 3
            sl_lo[axis] = slice(1, None)
            sl_hi[axis] = slice(None, -1)
            stable[tuple(sl_lo)] &= ~j
            stable[tuple(sl_hi)] &= ~j
    idx = np.argwhere(stable)
    for k, i, j in idx:
        m = np.array(
            [
                [att[k, i, j], atx[k, i, j], aty[k, i, j]],
                [atx[k, i, j], axx[k, i, j], axy[k, i, j]],
                [aty[k, i, j], axy[k, i, j], ayy[k, i, j]],
            ]
        )
        residuals.append(abs(spacetime_lifted_angle(SymMatrix(m)).angle - c))
    residuals = np.array(residuals)
    count = int(residuals.size)
    ok = float(np.mean(residuals <= tol)) if count else 1.0
    worst = float(np.max(residuals)) if count else 0.0
    return VerifierReport(
        name="angle_residual",
        passed=ok >= required_fraction,
        worst_margin=worst,
        node_count=count,
        fraction_ok=ok,
        tolerance=tol,
        extra={"stableFraction": float(np.mean(stable)) if stable.size else 0.0},
    )


def _golden_min(fun, lo: float, hi: float, tol: float = 1e-12) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def hessian_of_inf(
    f,
    x,
    t_interval: tuple[float, float] = (0.0, 1.0),
    rel_step: float = 1e-5,
    space_bounds=None,
) -> SymMatrix:
    """Spatial Hessian of g(x) = inf_t f(t, x) at an interior minimizer.

    For callables f(t, *coords): the minimizer is located by golden section
    to 1e-12 and the identity

        Hess g = Hess_x f - (grad_tx f)^T (grad_tx f) / f_tt

    is evaluated with central differences at relative step rel_step.  For a
    SampledFamily (with space_bounds), x is the space node index and all
    differences are taken about the discrete time minimizer, whose local
    parabolic model supplies the curvature.
    """
    if isinstance(f, SampledFamily):
        return _hessian_of_inf_grid(f, x, space_bounds)
    lo, hi = float(t_interval[0]), float(t_interval[1])
    if not lo < hi:
        raise DomainError("empty time interval")
    coords = np.atleast_1d(np.asarray(x, dtype=float))
    n = coords.size

    def at(t: float, xv: np.ndarray) -> float:
        return float(f(t, *xv))

    tstar = _golden_min(lambda t: at(t, coords), lo, hi)
    span = hi - lo
    if tstar - lo < 1e-6 * span or hi - tstar < 1e-6 * span:
        raise DomainError("time minimizer lies on the interval endpoint")
    ht = rel_step * (1.0 + abs(tstar))
    fdd = (at(tstar + ht, coords) - 2 * at(tstar, coords) + at(tstar - ht, coords)) / (
        ht * ht
    )
    if fdd <= 0:
        raise DomainError("nonpositive t-curvature at the minimizer")
    hx = rel_step * (1.0 + np.abs(coords))
    grad_tx = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = hx[i]
        grad_tx[i] = (
            at(tstar + ht, coords + e)
            - at(tstar + ht, coords - e)
            - at(tstar - ht, coords + e)
            + at(tstar - ht, coords - e)
        ) / (4 * ht * hx[i])
    hess_x = np.empty((n, n))
    f0 = at(tstar, coords)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = hx[i]
        hess_x[i, i] = (at(tstar, coords + ei) - 2 * f0 + at(tstar, coords - ei)) / (
            hx[i] * hx[i]
        )
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = hx[j]
            hess_x[i, j] = hess_x[j, i] = (
                at(tstar, coords + ei + ej)
                + at(tstar, coords - ei - ej)
                - at(tstar, coords + ei - ej)
                - at(tstar, coords - ei + ej)
            ) / (4 * hx[i] * hx[j])
    return SymMatrix(hess_x - np.outer(grad_tx, grad_tx) / fdd)


def _hessian_of_inf_grid(f: SampledFamily, x, space_bounds) -> SymMatrix:
    if space_bounds is None:
        raise DomainError("grid form needs space_bounds")
    grid = SpaceGrid(space_bounds, f.values[0])
    u = f.values
    t = f.grid
    dt = float(t[1] - t[0])
    if grid.ndim == 1:
        i = int(x)
        if not (1 <= i <= u.shape[1] - 2):
            raise DomainError("space node must be interior")
        col = u[:, i]
        k = int(np.argmin(col))
        if k == 0 or k == u.shape[0] - 1:
            raise DomainError("time minimizer lies on the grid endpoint")
        d2 = col[k + 1] - 2 * col[k] + col[k - 1]
        if d2 <= 0:
            raise DomainError("nonpositive t-curvature at the minimizer")
        fdd = d2 / (dt * dt)
        hx = grid.spacings()[0]
        ftx = (
            u[k + 1, i + 1] + u[k - 1, i - 1] - u[k + 1, i - 1] - u[k - 1, i + 1]
        ) / (4 * dt * hx)
        fxx = (u[k, i + 1] - 2 * u[k, i] + u[k, i - 1]) / (hx * hx)
        return SymMatrix([[fxx - ftx * ftx / fdd]])
    i, j = int(x[0]), int(x[1])
    nt, nx, ny = u.shape
    if not (1 <= i <= nx - 2 and 1 <= j <= ny - 2):
        raise DomainError("space node must be interior")
    col = u[:, i, j]
    k = int(np.argmin(col))
    if k == 0 or k == nt - 1:
        raise DomainError("time minimizer lies on the grid endpoint")
    d2 = col[k + 1] - 2 * col[k] + col[k - 1]
    if d2 <= 0:
        raise DomainError("nonpositive t-curvature at the minimizer")
    fdd = d2 / (dt * dt)
    hs = grid.square_spacing()
    ftx = (
        u[k + 1, i + 1, j] + u[k - 1, i - 1, j] - u[k + 1, i - 1, j] - u[k - 1, i + 1, j]
    ) / (4 * dt * hs)
    fty = (
        u[k + 1, i, j + 1] + u[k - 1, i, j - 1] - u[k + 1, i, j - 1] - u[k - 1, i, j + 1]
    ) / (4 * dt * hs)
    fxx = (u[k, i + 1, j] - 2 * u[k, i, j] + u[k, i - 1, j]) / (hs * hs)
    fyy = (u[k, i, j + 1] - 2 * u[k, i, j] + u[k, i, j - 1]) / (hs * hs)
    fxy = (
        u[k, i + 1, j + 1] + u[k, i - 1, j - 1] - u[k, i + 1, j - 1] - u[k, i - 1, j + 1]
    ) / (4 * hs * hs)
    hess = np.array([[fxx, fxy], [fxy, fyy]])
    grad = np.array([ftx, fty])
    return SymMatrix(hess - np.outer(grad, grad) / fdd)


def write_solution_csv(solution: DSLSolution, path) -> None:
    """Write rows t,x[,y],u in lexicographic (t, x[, y]) order."""
    fam = solution.family
    grid = SpaceGrid(solution.space_bounds, fam.values[0])
    with open(path, "w", encoding="utf-8") as fh:
        if grid.ndim == 1:
            fh.write("t,x,u\n")
            xs = grid.axis(0)
            for k, t in enumerate(fam.grid):
                for i, xv in enumerate(xs):
                    fh.write(f"{t:.17g},{xv:.17g},{fam.values[k, i]:.17g}\n")
        else:
            fh.write("t,x,y,u\n")
            xs, ys = grid.axis(0), grid.axis(1)
            for k, t in enumerate(fam.grid):
                for i, xv in enumerate(xs):
                    for j, yv in enumerate(ys):
                        fh.write(
                            f"{t:.17g},{xv:.17g},{yv:.17g},"
                            f"{fam.values[k, i, j]:.17g}\n"
                        )


def read_solution_csv(path) -> tuple[SampledFamily, tuple]:
    """Read a t,x[,y],u CSV back into a family plus space bounds."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header == ["t", "x", "u"]:
        data = np.array([[float(a) for a in r] for r in rows])
        ts = np.unique(data[:, 0])
        xs = np.unique(data[:, 1])
        if ts.size * xs.size != data.shape[0]:
            raise DomainError("CSV rows do not form a complete grid")
        vals = data[:, 2].reshape(ts.size, xs.size)
        return SampledFamily(ts, vals), ((xs[0], xs[-1]),)
    if header == ["t", "x", "y", "u"]:
        data = np.array([[float(a) for a in r] for r in rows])
        ts = np.unique(data[:, 0])
        xs = np.unique(data[:, 1])
        ys = np.unique(data[:, 2])
        if ts.size * xs.size * ys.size != data.shape[0]:
            raise DomainError("CSV rows do not form a complete grid")
        vals = data[:, 3].reshape(ts.size, xs.size, ys.size)
        return SampledFamily(ts, vals), ((xs[0], xs[-1]), (ys[0], ys[-1]))
    raise DomainError(f"unrecognized CSV header {header}")
