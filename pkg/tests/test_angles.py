import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slangle import (
    AngleResult,
    DomainError,
    Phase,
    SymMatrix,
    block_decompose,
    degenerate_identity,
    in_degenerate_locus,
    lifted_angle,
    resolvent_parts,
    scaled_angle,
    schur_det,
    spacetime_angle_direct,
    spacetime_lifted_angle,
)

PI = math.pi


def sym(rows) -> SymMatrix:
    return SymMatrix(np.array(rows, dtype=float))


def random_sym(rng, dim, scale=5.0) -> SymMatrix:
    m = rng.uniform(-scale, scale, (dim, dim))
    return SymMatrix((m + m.T) / 2)


def random_off_locus(rng, dim, scale=5.0) -> SymMatrix:
    while True:
        a = random_sym(rng, dim, scale)
        if not in_degenerate_locus(a, 1e-6):
            return a


class TestSymMatrix:
    def test_symmetrizes_small_noise(self):
        m = np.array([[1.0, 2.0 + 1e-14], [2.0, 3.0]])
        a = SymMatrix(m)
        assert a.entries[0, 1] == a.entries[1, 0]

    def test_rejects_large_asymmetry(self):
        with pytest.raises(DomainError):
            SymMatrix([[1.0, 2.0], [2.5, 3.0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            SymMatrix([[math.nan, 0.0], [0.0, 1.0]])

    def test_rejects_oversize(self):
        with pytest.raises(DomainError):
            SymMatrix(np.eye(65))

    def test_json_round_trip(self):
        a = sym([[1.0, 2.0], [2.0, -0.5]])
        b = SymMatrix.from_json(a.to_json())
        assert np.array_equal(a.entries, b.entries)
        payload = json.loads(a.to_json())
        assert payload["dim"] == 2
        assert payload["rows"] == [[1.0, 2.0], [2.0, -0.5]]

    def test_entries_immutable(self):
        a = sym([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            a.entries[0, 0] = 5.0


class TestPhase:
    def test_space_range(self):
        Phase(1.5, 1).require_space_range()
        with pytest.raises(DomainError):
            Phase(PI / 2, 1).require_space_range()

    def test_spacetime_range(self):
        Phase(PI - 1e-9, 1).require_spacetime_range()
        with pytest.raises(DomainError):
            Phase(PI, 1).require_spacetime_range()

    def test_negated(self):
        assert Phase(0.3, 2).negated().value == -0.3


class TestAngleResult:
    def test_locus_requires_block_formula(self):
        AngleResult(1.0, True, "block-formula")
        with pytest.raises(DomainError):
            AngleResult(1.0, True, "direct-eigensolve")

    def test_method_whitelist(self):
        with pytest.raises(DomainError):
            AngleResult(1.0, False, "guesswork")


class TestLiftedAngle:
    def test_zero(self):
        assert lifted_angle(sym([[0.0, 0.0], [0.0, 0.0]])) == 0.0

    def test_identity(self):
        assert lifted_angle(SymMatrix(np.eye(2))) == pytest.approx(PI / 2, abs=1e-14)

    def test_mixed_diagonal(self):
        a = sym([[math.sqrt(3.0), 0.0], [0.0, -1.0]])
        assert lifted_angle(a) == pytest.approx(PI / 12, abs=1e-14)


class TestBlockDecompose:
    def test_off_diagonal(self):
        a00, a0, aplus = block_decompose(sym([[0.0, 1.0], [1.0, 0.0]]))
        assert a00 == 0.0
        assert np.array_equal(a0, [1.0])
        assert np.array_equal(aplus.entries, [[0.0]])

    def test_diagonal(self):
        a00, a0, aplus = block_decompose(SymMatrix(np.diag([2.0, 3.0, 4.0])))
        assert a00 == 2.0
        assert np.array_equal(a0, [0.0, 0.0])
        assert np.array_equal(aplus.entries, np.diag([3.0, 4.0]))

    def test_full(self):
        a = sym([[1, 2, 3], [2, 5, 6], [3, 6, 9]])
        a00, a0, aplus = block_decompose(a)
        assert a00 == 1.0
        assert np.array_equal(a0, [2.0, 3.0])
        assert np.array_equal(aplus.entries, [[5.0, 6.0], [6.0, 9.0]])

    def test_reassembles(self):
        rng = np.random.default_rng(3)
        a = random_sym(rng, 4)
        a00, a0, aplus = block_decompose(a)
        re = np.empty((4, 4))
        re[0, 0] = a00
        re[0, 1:] = a0
        re[1:, 0] = a0
        re[1:, 1:] = aplus.entries
        assert np.array_equal(re, a.entries)

    def test_needs_dim_two(self):
        with pytest.raises(DomainError):
            block_decompose(sym([[1.0]]))


class TestDegenerateLocus:
    def test_on_locus(self):
        assert in_degenerate_locus(SymMatrix(np.diag([0.0, 5.0])), 1e-9)

    def test_off_locus(self):
        assert not in_degenerate_locus(sym([[0.0, 1.0], [1.0, 0.0]]), 1e-9)

    def test_below_tolerance(self):
        assert in_degenerate_locus(SymMatrix(np.diag([1e-12, 2.0])), 1e-9)


class TestDegenerateIdentity:
    def test_eta_zero(self):
        assert np.array_equal(degenerate_identity(0.0, 1).entries, np.diag([0.0, 1.0]))

    def test_eta_one(self):
        assert np.array_equal(degenerate_identity(1.0, 2).entries, np.eye(3))

    def test_eta_four(self):
        assert np.array_equal(degenerate_identity(4.0, 1).entries, np.diag([4.0, 1.0]))

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            degenerate_identity(-0.1, 1)


class TestSpacetimeLiftedAngle:
    def test_zero_on_locus(self):
        res = spacetime_lifted_angle(SymMatrix(np.zeros((3, 3))))
        assert res.on_degenerate_locus
        assert res.method == "block-formula"
        assert res.angle == pytest.approx(PI / 2, abs=1e-14)

    def test_identity_three(self):
        res = spacetime_lifted_angle(SymMatrix(np.eye(3)))
        assert not res.on_degenerate_locus
        assert res.angle == pytest.approx(PI, abs=1e-12)

    def test_pure_off_diagonal(self):
        res = spacetime_lifted_angle(sym([[0.0, 1.0], [1.0, 0.0]]))
        assert res.angle == pytest.approx(0.0, abs=1e-12)

    def test_diag01_usc_value(self):
        res = spacetime_lifted_angle(SymMatrix(np.diag([0.0, 1.0])))
        assert res.on_degenerate_locus
        assert res.angle == pytest.approx(3 * PI / 4, abs=1e-14)


class TestSpacetimeAngleDirect:
    def test_identity_three(self):
        assert spacetime_angle_direct(SymMatrix(np.eye(3))) == pytest.approx(PI, abs=1e-12)

    def test_pure_off_diagonal(self):
        a = sym([[0.0, 1.0], [1.0, 0.0]])
        assert spacetime_angle_direct(a) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_locus(self):
        with pytest.raises(DomainError):
            spacetime_angle_direct(SymMatrix(np.diag([0.0, 1.0])))


class TestScaledAngle:
    def test_diagonal_closed_form(self):
        a = SymMatrix(np.eye(2))
        expect = math.atan(100.0) + PI / 4
        assert scaled_angle(a, 10.0) == pytest.approx(expect, abs=1e-12)

    def test_limit_value(self):
        a = SymMatrix(np.eye(2))
        assert scaled_angle(a, 1e6) == pytest.approx(3 * PI / 4, abs=1e-5)

    def test_zero(self):
        assert scaled_angle(SymMatrix(np.zeros((2, 2))), 7.0) == 0.0

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            scaled_angle(SymMatrix(np.eye(2)), 0.0)


class TestSchurDet:
    def test_real_example(self):
        c = np.array([[2.0, 1.0], [1.0, 3.0]], dtype=complex)
        assert schur_det(c) == pytest.approx(5.0, abs=1e-12)

    def test_complex_diagonal(self):
        c = np.diag([1j, 1.0 + 1j])
        assert schur_det(c) == pytest.approx(-1.0 + 1j, abs=1e-12)

    def test_rejects_zero_pivot(self):
        c = np.array([[0.0, 1.0], [1.0, 1.0]], dtype=complex)
        with pytest.raises(DomainError):
            schur_det(c)

    def test_matches_direct_determinant(self):
        rng = np.random.default_rng(11)
        count = 0
        while count < 1000:
            m = rng.uniform(-3, 3, (3, 3)) + 1j * rng.uniform(-3, 3, (3, 3))
            c = (m + m.T) / 2
            if abs(c[0, 0]) < 0.1:
                continue
            count += 1
            d = np.linalg.det(c)
            assert abs(schur_det(c) - d) <= 1e-10 * max(1.0, abs(d))


class TestResolventParts:
    def test_scalar_positive(self):
        re, im = resolvent_parts(sym([[1.0]]))
        assert re.entries[0, 0] == pytest.approx(0.5, abs=1e-15)
        assert im.entries[0, 0] == pytest.approx(-0.5, abs=1e-15)

    def test_scalar_negative(self):
        re, im = resolvent_parts(sym([[-1.0]]))
        assert re.entries[0, 0] == pytest.approx(0.5, abs=1e-15)
        assert im.entries[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_zero_matrix(self):
        re, im = resolvent_parts(SymMatrix(np.zeros((2, 2))))
        assert np.allclose(re.entries, np.eye(2), atol=1e-15)
        assert np.allclose(im.entries, 0.0, atol=1e-15)

    def test_real_part_positive_definite(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            c = random_sym(rng, rng.integers(1, 5))
            re, _ = resolvent_parts(c)
            assert np.min(np.linalg.eigvalsh(re.entries)) > 0.0

    def test_imag_sign_tracks_definiteness(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            q = np.linalg.qr(rng.normal(size=(3, 3)))[0]
            pos = SymMatrix(q @ np.diag(rng.uniform(0.1, 3.0, 3)) @ q.T)
            _, im = resolvent_parts(pos)
            assert np.max(np.linalg.eigvalsh(im.entries)) <= 1e-12
            neg = SymMatrix(q @ np.diag(-rng.uniform(0.1, 3.0, 3)) @ q.T)
            _, im2 = resolvent_parts(neg)
            assert np.min(np.linalg.eigvalsh(im2.entries)) >= -1e-12

    def test_matches_complex_inverse(self):
        rng = np.random.default_rng(7)
        c = random_sym(rng, 4)
        re, im = resolvent_parts(c)
        inv = np.linalg.inv(np.eye(4) + 1j * c.entries)
        assert np.allclose(re.entries, inv.real, atol=1e-12)
        assert np.allclose(im.entries, inv.imag, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_branch_consistency(seed):
    # exp(i * lifted angle) must match the phase of det(I + iA).
    rng = np.random.default_rng(seed)
    a = random_sym(rng, int(rng.integers(1, 5)))
    det = np.linalg.det(np.eye(a.dim) + 1j * a.entries)
    assert abs(np.exp(1j * lifted_angle(a)) - det / abs(det)) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_block_formula_matches_direct(seed):
    rng = np.random.default_rng(seed)
    a = random_off_locus(rng, int(rng.integers(2, 5)))
    res = spacetime_lifted_angle(a)
    assert not res.on_degenerate_locus
    assert abs(res.angle - spacetime_angle_direct(a)) <= 1e-8


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_arg_term_range(seed):
    # The scalar correction over the trailing-block angle stays in [-pi/2, pi/2].
    rng = np.random.default_rng(seed)
    a = random_sym(rng, int(rng.integers(2, 5)))
    _, _, aplus = block_decompose(a)
    gap = spacetime_lifted_angle(a).angle - lifted_angle(aplus)
    assert -PI / 2 - 1e-12 <= gap <= PI / 2 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_upper_semicontinuity_at_locus(seed):
    # The tail of the sequence A + eps*B may not exceed the extension value.
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    block = random_sym(rng, n, scale=2.0)
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = block.entries
    base = spacetime_lifted_angle(SymMatrix(a))
    assert base.on_degenerate_locus
    b = random_sym(rng, n + 1, scale=1.0)
    tail = []
    for eps in (1e-7, 1e-8):
        pert = SymMatrix(a + eps * b.entries)
        if in_degenerate_locus(pert, 1e-9):
            continue
        tail.append(spacetime_lifted_angle(pert).angle)
    assert max(tail, default=base.angle) <= base.angle + 1e-6


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_locus_value_attained_from_diagonal_direction(seed):
    # Perturbing the zero corner upward attains the extension value in the limit.
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    block = random_sym(rng, n, scale=2.0)
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = block.entries
    base = spacetime_lifted_angle(SymMatrix(a)).angle
    pert = a.copy()
    pert[0, 0] = 1e8
    approached = spacetime_lifted_angle(SymMatrix(pert)).angle
    assert abs(approached - base) <= 1e-6


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_corner_sign_above_halfturn(seed):
    # Whenever the space-time angle reaches n*pi/2, the corner entry is >= 0.
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 5))
    a = random_sym(rng, dim)
    n = dim - 1
    if spacetime_lifted_angle(a).angle >= n * PI / 2:
        assert a.entries[0, 0] >= -1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_scaled_angle_error_shrinks(seed):
    rng = np.random.default_rng(seed)
    a = random_off_locus(rng, int(rng.integers(2, 5)))
    target = spacetime_lifted_angle(a).angle
    e10 = abs(scaled_angle(a, 10.0) - target)
    e100 = abs(scaled_angle(a, 100.0) - target)
    assert e100 < e10


def test_scaled_angle_diag_convergence_sequence():
    a = SymMatrix(np.eye(2))
    errs = [abs(scaled_angle(a, p) - 3 * PI / 4) for p in (10.0, 100.0, 1000.0)]
    assert errs[0] > errs[1] > errs[2]
