"""Obstacle envelopes and Dirichlet solves for angle-sum constraints.

The envelope P(v; f) is the largest function whose discrete Hessian angle
sum stays at or above a phase a, dominated by the obstacle v on the domain
and by the trace f on the boundary.  In one space dimension the constraint
is a curvature bound u'' >= tan(a), so P is a shifted convex hull and is
computed directly.  In two dimensions P is the fixed point of a clipping
sweep.  The Dirichlet solver drops the obstacle: in 1-D it is a closed
form, in 2-D a damped Newton iteration on the discrete angle residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import ConvergenceError, DomainError

# Stop tolerance for fixed-point sweeps (sup-norm of one sweep's change).
SWEEP_STOP_TOL = 1e-12

# Sweep budgets; the 1-D reference sweep is cheap and may need many passes.
MAX_SWEEPS_2D = 100_000
MAX_SWEEPS_1D = 2_000_000

# Spacing mismatch beyond this relative tolerance is rejected in 2-D.
SPACING_RTOL = 1e-12


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform grid samples over a closed interval or rectangle.

    bounds is ((x0, x1),) or ((x0, x1), (y0, y1)); values has one axis per
    bound, in the same order, boundary nodes included.
    """

    bounds: tuple
    values: np.ndarray

    def __init__(self, bounds, values) -> None:
        try:
            bnds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"bad bounds {bounds!r}: {exc}") from exc
        if len(bnds) not in (1, 2):
            raise DomainError("only 1-D and 2-D grids are supported")
        for lo, hi in bnds:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise DomainError(f"bad axis bounds ({lo}, {hi})")
        vals = np.asarray(values, dtype=float)
        if vals.ndim != len(bnds):
            raise DomainError(
                f"values with {vals.ndim} axes do not match {len(bnds)} bounds"
            )
        if any(s < 2 for s in vals.shape):
            raise DomainError("each axis needs at least 2 samples")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "bounds", bnds)
        object.__setattr__(self, "values", vals)

    @property
    def ndim(self) -> int:
        return len(self.bounds)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axis(self, k: int) -> np.ndarray:
        lo, hi = self.bounds[k]
        return np.linspace(lo, hi, self.shape[k])

    def spacings(self) -> tuple[float, ...]:
        return tuple(
            (hi - lo) / (n - 1) for (lo, hi), n in zip(self.bounds, self.shape)
        )

    @property
    def h(self) -> float:
        return max(self.spacings())

    def with_values(self, values) -> "SpaceGrid":
        return SpaceGrid(self.bounds, values)

    def square_spacing(self) -> float:
        """Common spacing; rejects 2-D grids with mismatched axis spacing."""
        hs = self.spacings()
        if len(hs) == 2 and abs(hs[0] - hs[1]) > SPACING_RTOL * max(hs):
            raise DomainError(
                f"axis spacings {hs[0]} and {hs[1]} must match for 2-D stencils"
            )
        return hs[0]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if self.ndim == 1:
                fh.write("x,value\n")
                for x, v in zip(self.axis(0), self.values):
                    fh.write(f"{x:.17g},{v:.17g}\n")
            else:
                fh.write("x,y,value\n")
                ys = self.axis(1)
                for i, x in enumerate(self.axis(0)):
                    for j, y in enumerate(ys):
                        fh.write(f"{x:.17g},{y:.17g},{self.values[i, j]:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "SpaceGrid":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        if header == ["x", "value"]:
            xs = np.array([float(r[0]) for r in rows])
            vals = np.array([float(r[1]) for r in rows])
            _check_uniform(xs, "x")
            return cls(((xs[0], xs[-1]),), vals)
        if header == ["x", "y", "value"]:
            xs = np.array([float(r[0]) for r in rows])
            ys = np.array([float(r[1]) for r in rows])
            vals = np.array([float(r[2]) for r in rows])
            ux = np.unique(xs)
            uy = np.unique(ys)
            if ux.size * uy.size != vals.size:
                raise DomainError("CSV rows do not form a complete grid")
            _check_uniform(ux, "x")
            _check_uniform(uy, "y")
            grid_vals = vals.reshape(ux.size, uy.size)
            return cls(((ux[0], ux[-1]), (uy[0], uy[-1])), grid_vals)
        raise DomainError(f"unrecognized CSV header {header}")


def _check_uniform(coords: np.ndarray, name: str) -> None:
    if coords.size < 2:
        raise DomainError(f"axis {name} needs at least 2 samples")
    d = np.diff(coords)
    if np.any(d <= 0):
        raise DomainError(f"axis {name} must be strictly increasing")
    if np.max(d) - np.min(d) > 1e-9 * np.max(np.abs(d)) + 1e-15:
        raise DomainError(f"axis {name} is not uniformly spaced")


def as_boundary_array(boundary, grid: SpaceGrid) -> np.ndarray:
    """Normalize a boundary trace to array form.

    1-D: a (left, right) pair.  2-D: an array shaped like the grid whose
    boundary ring carries the trace (interior entries are ignored), or a
    callable f(x, y) evaluated on the ring.
    """
    if grid.ndim == 1:
        arr = np.asarray(boundary, dtype=float)
        if arr.shape != (2,):
            raise DomainError("1-D boundary trace must be a (left, right) pair")
        if not np.all(np.isfinite(arr)):
            raise DomainError("boundary trace must be finite")
        return arr
    if callable(boundary):
        xs = grid.axis(0)[:, None]
        ys = grid.axis(1)[None, :]
        full = np.broadcast_to(boundary(xs, ys), grid.shape).astype(float)
        arr = np.array(full)
    else:
        arr = np.asarray(boundary, dtype=float)
        if arr.shape != grid.shape:
            raise DomainError(
                f"2-D boundary trace shape {arr.shape} must match grid {grid.shape}"
            )
    ring = _ring_mask(grid.shape)
    if not np.all(np.isfinite(arr[ring])):
        raise DomainError("boundary trace must be finite on the ring")
    return arr


def _ring_mask(shape: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[0, :] = mask[-1, :] = True
    mask[:, 0] = mask[:, -1] = True
    return mask


@dataclass(frozen=True)
class EnvelopeProblem:
    """Obstacle v on a grid, boundary trace f, and the phase a.

    The phase must lie in [(n-1)*pi/2, n*pi/2) for n space dimensions.
    """

    obstacle: SpaceGrid
    boundary: np.ndarray
    phase: float

    def __init__(self, obstacle: SpaceGrid, boundary, phase: float) -> None:
        if not isinstance(obstacle, SpaceGrid):
            raise DomainError("obstacle must be a SpaceGrid")
        n = obstacle.ndim
        a = float(phase)
        lo = (n - 1) * math.pi / 2
        hi = n * math.pi / 2
        if not (lo <= a < hi):
            raise DomainError(
                f"phase {a} outside [{lo:.6f}, {hi:.6f}) for n={n}"
            )
        arr = as_boundary_array(boundary, obstacle)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "obstacle", obstacle)
        object.__setattr__(self, "boundary", arr)
        object.__setattr__(self, "phase", a)

    @property
    def grid_spacing(self) -> float:
        return self.obstacle.square_spacing()


def convex_envelope_1d(xs, ys) -> np.ndarray:
    """Values of the lower convex hull of (xs, ys) at the nodes xs."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise DomainError("need matching 1-D arrays with at least 2 points")
    if not np.all(np.diff(x) > 0):
        raise DomainError("xs must be strictly increasing")
    hull = [0]
    for k in range(1, x.size):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            if (y[j] - y[i]) * (x[k] - x[i]) <= (y[k] - y[i]) * (x[j] - x[i]):
                break
            hull.pop()
        hull.append(k)
    out = np.empty_like(y)
    for a, b in zip(hull[:-1], hull[1:]):
        t = (x[a : b + 1] - x[a]) / (x[b] - x[a])
        out[a : b + 1] = y[a] + t * (y[b] - y[a])
    return out


def _capped_obstacle(problem: EnvelopeProblem) -> np.ndarray:
    # min(v, f) on the boundary, v elsewhere.
    v = problem.obstacle.values.copy()
    if problem.obstacle.ndim == 1:
        v[0] = min(v[0], problem.boundary[0])
        v[-1] = min(v[-1], problem.boundary[1])
    else:
        ring = _ring_mask(v.shape)
        v[ring] = np.minimum(v[ring], problem.boundary[ring])
    return v


def envelope(
    problem: EnvelopeProblem,
    stop_tol: float = SWEEP_STOP_TOL,
    max_sweeps: int = MAX_SWEEPS_2D,
) -> SpaceGrid:
    """Largest phase-a function below the obstacle and boundary trace.

    1-D: exact via the convex hull of the tan(a)-shifted capped obstacle.
    2-D: Gauss-Seidel clipping sweep with a closed-form nodewise solve.
    """
    grid = problem.obstacle
    if grid.ndim == 1:
        xs = grid.axis(0)
        kappa = math.tan(problem.phase)
        shift = 0.5 * kappa * xs * xs
        capped = _capped_obstacle(problem)
        hull = convex_envelope_1d(xs, capped - shift) + shift
        # shift round-off must never lift the hull above the obstacle cap
        return grid.with_values(np.minimum(hull, capped))
    h = problem.grid_spacing
    w = np.ascontiguousarray(_capped_obstacle(problem))
    v = np.ascontiguousarray(problem.obstacle.values)
    branch, tan_a = _phase_branch(problem.phase)
    sweeps, change = _kernels.gs_envelope_2d(
        w, v, tan_a, branch, h * h, stop_tol, int(max_sweeps)
    )
    if sweeps < 0:
        raise ConvergenceError(
            f"envelope sweep still changing by {change:.3e} after {max_sweeps} sweeps"
        )
    return grid.with_values(w)


def _phase_branch(a: float) -> tuple[int, float]:
    half_pi = math.pi / 2
    if abs(a - half_pi) < 1e-13:
        return 1, 0.0
    if a < half_pi:
        return 0, math.tan(a)
    return 2, math.tan(a)


def envelope_oracle(
    problem: EnvelopeProblem,
    stop_tol: float = SWEEP_STOP_TOL,
    max_sweeps: int | None = None,
) -> SpaceGrid:
    """Reference envelope by fixed-point sweeping from min(v, boundary cap).

    1-D updates each node to min(v_i, midpoint average - tan(a) h^2 / 2);
    2-D uses the same clipping fixed point as envelope() but solves the
    nodewise angle equation by safeguarded Newton instead of a closed form,
    over-relaxed at the classical factor for the grid so fine grids converge
    in O(1/h) sweeps instead of O(1/h^2).
    """
    grid = problem.obstacle
    v = np.ascontiguousarray(problem.obstacle.values)
    w = np.ascontiguousarray(_capped_obstacle(problem))
    if grid.ndim == 1:
        h = grid.spacings()[0]
        cap = MAX_SWEEPS_1D if max_sweeps is None else int(max_sweeps)
        half_kh2 = 0.5 * math.tan(problem.phase) * h * h
        sweeps, change = _kernels.gs_obstacle_1d(w, v, half_kh2, stop_tol, cap)
    else:
        h = problem.grid_spacing
        cap = 2 * MAX_SWEEPS_2D if max_sweeps is None else int(max_sweeps)
        interior = max(min(grid.shape) - 2, 1)
        omega = 2.0 / (1.0 + math.sin(math.pi / (interior + 1)))
        sweeps, change = _kernels.gs_oracle_2d(
            w, v, problem.phase, h * h, stop_tol, cap, omega
        )
    if sweeps < 0:
        raise ConvergenceError(
            f"reference sweep still changing by {change:.3e} after {cap} sweeps"
        )
    return grid.with_values(w)


def discrete_hessian_angle(grid: SpaceGrid) -> np.ndarray:
    """Angle sum of the discrete Hessian at interior nodes.

    1-D: arctan of the centered second difference over h^2.  2-D: angle sum
    of the 5-point-plus-cross Hessian stencil.
    """
    u = grid.values
    if grid.ndim == 1:
        h = grid.spacings()[0]
        d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
        return np.arctan(d2)
    h = grid.square_spacing()
    uxx, uyy, uxy = _hessian_fields(u, h)
    mean = 0.5 * (uxx + uyy)
    dev = np.sqrt(0.25 * (uxx - uyy) ** 2 + uxy**2)
    return np.arctan(mean + dev) + np.arctan(mean - dev)


def _hessian_fields(u: np.ndarray, h: float):
    h2 = h * h
    core = u[1:-1, 1:-1]
    uxx = (u[2:, 1:-1] - 2.0 * core + u[:-2, 1:-1]) / h2
    uyy = (u[1:-1, 2:] - 2.0 * core + u[1:-1, :-2]) / h2
    uxy = (u[2:, 2:] + u[:-2, :-2] - u[2:, :-2] - u[:-2, 2:]) / (4.0 * h2)
    return uxx, uyy, uxy


def dirichlet(
    bounds,
    shape,
    boundary,
    phase: float,
    residual_tol: float = 1e-10,
    max_iter: int = 60,
) -> SpaceGrid:
    """Solve the constant-angle equation with Dirichlet boundary data.

    1-D has the closed form tan(a) x^2 / 2 plus the line matching the
    endpoints.  2-D runs damped Newton on the discrete angle residual,
    warm-started from a Poisson solve.
    """
    placeholder = SpaceGrid(bounds, np.zeros(shape))
    n = placeholder.ndim
    a = float(phase)
    lo, hi = (n - 1) * math.pi / 2, n * math.pi / 2
    if not (lo <= a < hi):
        raise DomainError(f"phase {a} outside [{lo:.6f}, {hi:.6f}) for n={n}")
    trace = as_boundary_array(boundary, placeholder)
    if n == 1:
        xs = placeholder.axis(0)
        kappa = math.tan(a)
        x0, x1 = xs[0], xs[-1]
        f0, f1 = trace
        alpha = (f1 - f0 - 0.5 * kappa * (x1 * x1 - x0 * x0)) / (x1 - x0)
        beta = f0 - 0.5 * kappa * x0 * x0 - alpha * x0
        return placeholder.with_values(0.5 * kappa * xs * xs + alpha * xs + beta)
    return _dirichlet_newton(placeholder, trace, a, residual_tol, max_iter)


def _laplacian_solve(grid: SpaceGrid, trace: np.ndarray, rhs_const: float) -> np.ndarray:
    # 5-point Poisson solve with Dirichlet data, used as the Newton start.
    nx, ny = grid.shape
    h = grid.square_spacing()
    u = trace.copy()
    mi, mj = np.meshgrid(
        np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij"
    )
    idx = (mi - 1) * (ny - 2) + (mj - 1)
    n_int = (nx - 2) * (ny - 2)
    rows, cols, data = [], [], []
    rhs = np.full(n_int, rhs_const, dtype=float)
    center = idx.ravel()
    rows.append(center)
    cols.append(center)
    data.append(np.full(n_int, -4.0 / (h * h)))
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ni, nj = mi + di, mj + dj
        inner = (ni >= 1) & (ni <= nx - 2) & (nj >= 1) & (nj <= ny - 2)
        rows.append(center[inner.ravel()])
        cols.append(((ni - 1) * (ny - 2) + (nj - 1)).ravel()[inner.ravel()])
        data.append(np.full(int(inner.sum()), 1.0 / (h * h)))
        outer = ~inner
        np.subtract.at(
            rhs,
            center[outer.ravel()],
            u[ni[outer], nj[outer]] / (h * h),
        )
    mat = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_int, n_int),
    )
    sol = spla.spsolve(mat, rhs)
    u[1:-1, 1:-1] = sol.reshape(nx - 2, ny - 2)
    return u


def _angle_residual(u: np.ndarray, h: float, a: float) -> np.ndarray:
    uxx, uyy, uxy = _hessian_fields(u, h)
    mean = 0.5 * (uxx + uyy)
    dev = np.sqrt(0.25 * (uxx - uyy) ** 2 + uxy**2)
    return np.arctan(mean + dev) + np.arctan(mean - dev) - a


def _newton_matrix(u: np.ndarray, h: float) -> sp.csr_matrix:
    nx, ny = u.shape
    h2 = h * h
    uxx, uyy, uxy = _hessian_fields(u, h)
    # Real part of (I + iH)^{-1}: the linearization weights.
    det = (1.0 + uxx**2 + uxy**2) * (1.0 + uyy**2 + uxy**2) - (
        uxy * (uxx + uyy)
    ) ** 2
    w00 = (1.0 + uyy**2 + uxy**2) / det
    w11 = (1.0 + uxx**2 + uxy**2) / det
    w12 = -uxy * (uxx + uyy) / det
    mi, mj = np.meshgrid(
        np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij"
    )
    idx = (mi - 1) * (ny - 2) + (mj - 1)
    center = idx.ravel()
    n_int = center.size
    rows, cols, data = [center], [center], [(-2.0 * (w00 + w11) / h2).ravel()]
    stencil = (
        ((1, 0), w00 / h2),
        ((-1, 0), w00 / h2),
        ((0, 1), w11 / h2),
        ((0, -1), w11 / h2),
        ((1, 1), w12 / (2.0 * h2)),
        ((-1, -1), w12 / (2.0 * h2)),
        ((1, -1), -w12 / (2.0 * h2)),
        ((-1, 1), -w12 / (2.0 * h2)),
    )
    for (di, dj), coeff in stencil:
        ni, nj = mi + di, mj + dj
        inner = ((ni >= 1) & (ni <= nx - 2) & (nj >= 1) & (nj <= ny - 2)).ravel()
        rows.append(center[inner])
        cols.append(((ni - 1) * (ny - 2) + (nj - 1)).ravel()[inner])
        data.append(coeff.ravel()[inner])
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_int, n_int),
    )


def _dirichlet_newton(
    grid: SpaceGrid,
    trace: np.ndarray,
    a: float,
    residual_tol: float,
    max_iter: int,
) -> SpaceGrid:
    h = grid.square_spacing()
    u = _laplacian_solve(grid, trace, 2.0 * math.tan(a / 2.0))
    res = _angle_residual(u, h, a)
    res_norm = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if res_norm <= residual_tol:
            return grid.with_values(u)
        mat = _newton_matrix(u, h)
        step = spla.spsolve(mat, -res.ravel()).reshape(res.shape)
        s = 1.0
        while True:
            trial = u.copy()
            trial[1:-1, 1:-1] += s * step
            trial_res = _angle_residual(trial, h, a)
            trial_norm = float(np.max(np.abs(trial_res)))
            if trial_norm < res_norm * (1.0 - 1e-4 * s) or trial_norm <= residual_tol:
                break
            s *= 0.5
            if s < 1e-8:
                raise ConvergenceError(
                    f"line search failed at residual {res_norm:.3e}"
                )
        step_size = float(np.max(np.abs(s * step)))
        u, res, res_norm = trial, trial_res, trial_norm
        if step_size < 1e-14 and res_norm > 1e-6:
            raise ConvergenceError(
                f"Newton stagnated with residual {res_norm:.3e}"
            )
    if res_norm <= residual_tol:
        return grid.with_values(u)
    raise ConvergenceError(
        f"Newton residual {res_norm:.3e} > {residual_tol:.3e} after {max_iter} iterations"
    )
