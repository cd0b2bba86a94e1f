"""Membership tests for angle-sum cones and their duals, plus a sampler.

The space cone at phase c collects symmetric matrices whose angle sum is
at least c; the space-time cone uses the extended space-time angle.  Both
are closed under adding positive semidefinite matrices.  The dual of the
space-time cone at phase c coincides with the cone at phase -c, which is
how dual membership is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import LOCUS_RTOL, Phase, SymMatrix, lifted_angle, spacetime_lifted_angle
from .errors import DomainError, SamplingError

# Margins within this band of zero are reported as boundary.
DEFAULT_BAND = 1e-9

# Rejection sampling gives up after this many draws.
SAMPLE_BUDGET = 100_000

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"


@dataclass(frozen=True)
class Membership:
    """Tri-state membership verdict with the signed margin angle - c."""

    status: str
    margin: float

    def __post_init__(self) -> None:
        if self.status not in (INSIDE, BOUNDARY, OUTSIDE):
            raise DomainError(f"unknown status {self.status!r}")

    @property
    def is_member(self) -> bool:
        return self.status != OUTSIDE


def _classify(margin: float, band: float) -> Membership:
    if band < 0:
        raise DomainError("band must be nonnegative")
    if abs(margin) <= band:
        return Membership(BOUNDARY, margin)
    return Membership(INSIDE if margin > 0 else OUTSIDE, margin)


def in_Fc(a: SymMatrix, c: Phase, band: float = DEFAULT_BAND) -> Membership:
    """Membership of A in the space cone {angle sum >= c}, dim A = n."""
    if c.space_dim != a.dim:
        raise DomainError(
            f"phase is for space dimension {c.space_dim}, matrix has dim {a.dim}"
        )
    c.require_space_range()
    return _classify(lifted_angle(a) - c.value, band)


def in_calFc(
    a: SymMatrix,
    c: Phase,
    band: float = DEFAULT_BAND,
    locus_tol: float = LOCUS_RTOL,
) -> Membership:
    """Membership of A in the space-time cone {spacetime angle >= c}.

    A has dimension n + 1 where n = c.space_dim.
    """
    if c.space_dim != a.dim - 1:
        raise DomainError(
            f"phase is for space dimension {c.space_dim}, expected matrix dim "
            f"{c.space_dim + 1}, got {a.dim}"
        )
    c.require_spacetime_range()
    result = spacetime_lifted_angle(a, locus_tol)
    return _classify(result.angle - c.value, band)


def in_dual_calFc(
    a: SymMatrix,
    c: Phase,
    band: float = DEFAULT_BAND,
    locus_tol: float = LOCUS_RTOL,
) -> Membership:
    """Membership in the dual of the space-time cone: the cone at phase -c."""
    return in_calFc(a, c.negated(), band, locus_tol)


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def sample_calFc_member(
    c: Phase,
    seed: int,
    margin_range: tuple[float, float] = (0.01, 0.5),
) -> SymMatrix:
    """Draw a random member of the space-time cone at phase c.

    Requires c in [n*pi/2, (n+1)*pi/2).  Builds the lower-right block from
    prescribed arctangent sums, takes a nonnegative corner entry and a small
    coupling row, and rejects until membership holds.
    """
    n = c.space_dim
    lo = n * math.pi / 2
    hi = (n + 1) * math.pi / 2
    if not (lo <= c.value < hi):
        raise DomainError(f"sampler needs phase in [{lo:.6f}, {hi:.6f}), got {c.value}")
    rng = np.random.default_rng(seed)
    target_base = c.value - math.pi / 2
    # Largest usable clearance before the block's angle sum saturates.
    cap = n * math.pi / 2 - target_base - 1e-6
    if cap <= 0:
        raise SamplingError(f"phase {c.value} leaves no room for a sample")
    lo_extra = min(margin_range[0], cap / 2)
    hi_extra = min(margin_range[1], cap)
    for _ in range(SAMPLE_BUDGET):
        extra = rng.uniform(lo_extra, hi_extra)
        target = target_base + extra
        mu = rng.uniform(-math.pi / 2 + 0.05, math.pi / 2 - 0.05, size=n)
        deficit = target - float(np.sum(mu))
        if deficit > 0:
            mu = mu + deficit / n
            if np.any(mu >= math.pi / 2 - 1e-9):
                continue
        q = _haar_orthogonal(n, rng)
        block = (q * np.tan(mu)) @ q.T
        a00 = rng.uniform(0.0, 2.0)
        a0 = 0.05 * rng.standard_normal(n)
        m = np.empty((n + 1, n + 1))
        m[0, 0] = a00
        m[0, 1:] = a0
        m[1:, 0] = a0
        m[1:, 1:] = 0.5 * (block + block.T)
        candidate = SymMatrix(m)
        if in_calFc(candidate, c).is_member:
            return candidate
    raise SamplingError(
        f"no member of the space-time cone at phase {c.value} found in "
        f"{SAMPLE_BUDGET} draws"
    )


def sample_Fc_member(c: Phase, seed: int) -> SymMatrix:
    """Draw a random member of the space cone at phase c.

    Works for any c in (-n*pi/2, n*pi/2): eigenvalue arctangents are drawn
    so that their sum clears c by a positive margin.
    """
    c.require_space_range()
    n = c.space_dim
    rng = np.random.default_rng(seed)
    cap = n * math.pi / 2 - c.value - 1e-6
    lo_extra = min(0.01, cap / 2)
    hi_extra = min(0.5, cap)
    for _ in range(SAMPLE_BUDGET):
        extra = rng.uniform(lo_extra, hi_extra)
        target = c.value + extra
        mu = rng.uniform(-math.pi / 2 + 0.05, math.pi / 2 - 0.05, size=n)
        deficit = target - float(np.sum(mu))
        if deficit > 0:
            mu = mu + deficit / n
            if np.any(mu >= math.pi / 2 - 1e-9):
                continue
        q = _haar_orthogonal(n, rng)
        block = (q * np.tan(mu)) @ q.T
        candidate = SymMatrix(0.5 * (block + block.T))
        if in_Fc(candidate, c).is_member:
            return candidate
    raise SamplingError(
        f"no member of the space cone at phase {c.value} found in {SAMPLE_BUDGET} draws"
    )
