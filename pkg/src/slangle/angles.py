"""Lifted angle sums of symmetric matrices and their space-time extension.

The basic object is the angle sum of a real symmetric m x m matrix A,

    angle(A) = sum_i arctan(lambda_i(A)),

valued in (-m*pi/2, m*pi/2).  The space-time variant replaces the identity
by J = diag(0, 1, ..., 1) and sums the arguments of the eigenvalues of
J + iA.  That sum degenerates when the first row and column of A vanish;
on that locus the value is extended upper-semicontinuously by

    spacetime_angle(diag(0, B)) = pi/2 + angle(B),

which is the smallest upper-semicontinuous extension.  Off the locus the
value is computed through a block identity: with a00 = A[0,0], a0 the rest
of the first row and B the lower-right block,

    spacetime_angle(A) = angle(B) + arg(i*a00 + a0 (I + iB)^{-1} a0^T),

where the arg term lies in [-pi/2, pi/2].  Complex arguments always use
the branch with image (-pi, pi].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Method labels for AngleResult.
BLOCK_FORMULA = "block-formula"
DIRECT_EIGENSOLVE = "direct-eigensolve"
LIMIT = "limit"

# Dimensions stay at desk scale.
MAX_DIM = 64

# Relative asymmetry beyond this is rejected rather than silently averaged.
ASYMMETRY_RTOL = 1e-12

# Default relative tolerance deciding membership in the degenerate locus,
# measured against 1 + ||A||_F.
LOCUS_RTOL = 1e-9


@dataclass(frozen=True)
class SymMatrix:
    """Immutable real symmetric matrix.

    Entries are symmetrized on construction; inputs whose asymmetry exceeds
    ASYMMETRY_RTOL relative to the Frobenius norm are rejected.
    """

    entries: np.ndarray

    def __init__(self, entries) -> None:
        arr = np.asarray(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {arr.shape}")
        m = arr.shape[0]
        if m < 1 or m > MAX_DIM:
            raise DomainError(f"matrix dimension {m} outside [1, {MAX_DIM}]")
        if not np.all(np.isfinite(arr)):
            raise DomainError("matrix entries must be finite")
        skew = arr - arr.T
        scale = np.linalg.norm(arr)
        if np.linalg.norm(skew) > ASYMMETRY_RTOL * max(1.0, scale):
            raise DomainError("matrix is not symmetric within tolerance")
        sym = 0.5 * (arr + arr.T)
        sym.flags.writeable = False
        object.__setattr__(self, "entries", sym)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.entries))

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.entries + other.entries)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.entries - other.entries)

    def __neg__(self) -> "SymMatrix":
        return SymMatrix(-self.entries)

    def scaled(self, factor: float) -> "SymMatrix":
        return SymMatrix(self.entries * float(factor))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def to_json_dict(self) -> dict:
        return {"dim": self.dim, "rows": self.entries.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SymMatrix":
        try:
            dim = obj["dim"]
            rows = obj["rows"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"matrix JSON needs 'dim' and 'rows': {exc}") from exc
        arr = np.asarray(rows, dtype=float)
        if arr.shape != (dim, dim):
            raise DomainError(f"'rows' shape {arr.shape} does not match dim {dim}")
        return cls(arr)

    @classmethod
    def from_json(cls, text: str) -> "SymMatrix":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class Phase:
    """A phase value c together with the space dimension n it refers to.

    The admissible range depends on use: (-n*pi/2, n*pi/2) for space
    membership, (-(n+1)*pi/2, (n+1)*pi/2) for space-time membership.
    """

    value: float
    space_dim: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise DomainError("phase value must be finite")
        if self.space_dim < 1:
            raise DomainError(f"space dimension must be >= 1, got {self.space_dim}")

    def require_space_range(self) -> None:
        bound = self.space_dim * math.pi / 2
        if not (-bound < self.value < bound):
            raise DomainError(
                f"phase {self.value} outside (-{self.space_dim}*pi/2, {self.space_dim}*pi/2)"
            )

    def require_spacetime_range(self) -> None:
        bound = (self.space_dim + 1) * math.pi / 2
        if not (-bound < self.value < bound):
            raise DomainError(
                f"phase {self.value} outside the space-time range (+-{bound:.6f})"
            )

    def negated(self) -> "Phase":
        return Phase(-self.value, self.space_dim)


@dataclass(frozen=True)
class AngleResult:
    """Space-time angle value plus how it was obtained."""

    angle: float
    on_degenerate_locus: bool
    method: str

    def __post_init__(self) -> None:
        if self.method not in (BLOCK_FORMULA, DIRECT_EIGENSOLVE, LIMIT):
            raise DomainError(f"unknown method {self.method!r}")
        if self.on_degenerate_locus and self.method != BLOCK_FORMULA:
            raise DomainError("locus values are only produced by the block formula")


def lifted_angle(a: SymMatrix) -> float:
    """Sum of arctangents of the eigenvalues, in (-dim*pi/2, dim*pi/2)."""
    return float(np.sum(np.arctan(a.eigenvalues())))


def block_decompose(a: SymMatrix) -> tuple[float, np.ndarray, SymMatrix]:
    """Split A into (A[0,0], first row remainder, lower-right block)."""
    if a.dim < 2:
        raise DomainError("block decomposition needs dim >= 2")
    m = a.entries
    return float(m[0, 0]), m[0, 1:].copy(), SymMatrix(m[1:, 1:])


def in_degenerate_locus(a: SymMatrix, tol: float = LOCUS_RTOL) -> bool:
    """Whether the first row and column vanish relative to 1 + ||A||_F."""
    if a.dim < 2:
        raise DomainError("degenerate locus is defined for dim >= 2")
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    scale = (1.0 + a.norm()) * tol
    a00, a0, _ = block_decompose(a)
    return abs(a00) <= scale and float(np.linalg.norm(a0)) <= scale


def degenerate_identity(eta: float, n: int) -> SymMatrix:
    """diag(eta, 1, ..., 1) of dimension n + 1."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if not (eta >= 0 and math.isfinite(eta)):
        raise DomainError(f"eta must be finite and >= 0, got {eta}")
    d = np.ones(n + 1)
    d[0] = eta
    return SymMatrix(np.diag(d))


def _block_arg_term(a00: float, a0: np.ndarray, aplus: SymMatrix) -> float:
    # arg(i*a00 + a0 (I + iB)^{-1} a0^T) via the eigenbasis of B.
    lam, q = np.linalg.eigh(aplus.entries)
    w = q.T @ a0
    w2 = w * w
    denom = 1.0 + lam * lam
    quad_re = float(np.sum(w2 / denom))
    quad_im = float(np.sum(-w2 * lam / denom))
    ang = math.atan2(a00 + quad_im, quad_re)
    # The identity confines the term to [-pi/2, pi/2]; clamp roundoff.
    return min(max(ang, -math.pi / 2), math.pi / 2)


def spacetime_lifted_angle(a: SymMatrix, locus_tol: float = LOCUS_RTOL) -> AngleResult:
    """Space-time angle of A, upper-semicontinuously extended on the locus.

    Off the degenerate locus this evaluates the block identity; on it the
    value is pi/2 + lifted_angle(lower-right block).
    """
    if a.dim < 2:
        raise DomainError("space-time angle needs dim >= 2")
    a00, a0, aplus = block_decompose(a)
    base = lifted_angle(aplus)
    if in_degenerate_locus(a, locus_tol):
        return AngleResult(base + math.pi / 2, True, BLOCK_FORMULA)
    return AngleResult(base + _block_arg_term(a00, a0, aplus), False, BLOCK_FORMULA)


def spacetime_angle_direct(a: SymMatrix, locus_tol: float = LOCUS_RTOL) -> float:
    """Space-time angle via a dense eigensolve of J + iA, J = diag(0,1,..,1).

    Only defined off the degenerate locus, where no eigenvalue vanishes.
    Kept as an independent cross-check of spacetime_lifted_angle.
    """
    if a.dim < 2:
        raise DomainError("space-time angle needs dim >= 2")
    if in_degenerate_locus(a, locus_tol):
        raise DomainError("direct eigensolve is undefined on the degenerate locus")
    j = np.ones(a.dim)
    j[0] = 0.0
    m = np.diag(j) + 1j * a.entries
    lam = np.linalg.eigvals(m)
    if np.any(np.abs(lam) <= 1e-14 * (1.0 + a.norm())):
        raise DomainError("near-zero eigenvalue: matrix is too close to the locus")
    return float(np.sum(np.angle(lam)))


def scaled_angle(a: SymMatrix, p: float) -> float:
    """lifted_angle(S A S) with S = diag(p, 1, ..., 1).

    For fixed A off the degenerate locus this converges to
    spacetime_lifted_angle(A) as p grows.
    """
    if a.dim < 2:
        raise DomainError("scaled angle needs dim >= 2")
    if not (p > 0 and math.isfinite(p)):
        raise DomainError(f"scale p must be positive and finite, got {p}")
    s = np.ones(a.dim)
    s[0] = p
    scaled = a.entries * np.outer(s, s)
    return float(np.sum(np.arctan(np.linalg.eigvalsh(scaled))))


def schur_det(c: np.ndarray) -> complex:
    """det C via the Schur pivot on the (0,0) entry.

    det C = c00 * det(C_plus - outer(c0, c0) / c00) for complex symmetric C.
    """
    m = np.asarray(c, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise DomainError(f"expected a square matrix of dim >= 2, got shape {m.shape}")
    if np.linalg.norm(m - m.T) > ASYMMETRY_RTOL * max(1.0, np.linalg.norm(m)):
        raise DomainError("matrix is not complex symmetric within tolerance")
    c00 = m[0, 0]
    if abs(c00) < 1e-14 * (1.0 + np.linalg.norm(m)):
        raise DomainError("pivot c00 is too small for the Schur identity")
    c0 = m[0, 1:]
    reduced = m[1:, 1:] - np.outer(c0, c0) / c00
    if reduced.shape == (1, 1):
        return complex(c00 * reduced[0, 0])
    return complex(c00 * np.linalg.det(reduced))


def resolvent_parts(c: SymMatrix) -> tuple[SymMatrix, SymMatrix]:
    """Real and imaginary parts of (I + iC)^{-1} for real symmetric C.

    The real part is positive definite; the imaginary part is negative
    semidefinite exactly when C is positive semidefinite.
    """
    lam, q = np.linalg.eigh(c.entries)
    denom = 1.0 + lam * lam
    re = (q * (1.0 / denom)) @ q.T
    im = (q * (-lam / denom)) @ q.T
    return SymMatrix(re), SymMatrix(im)
