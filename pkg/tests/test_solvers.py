import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcheck import wide_angle_1d, wide_angle_2d
from slangle import (
    ConvergenceError,
    DomainError,
    EnvelopeProblem,
    SpaceGrid,
    as_boundary_array,
    convex_envelope_1d,
    dirichlet,
    discrete_hessian_angle,
    envelope,
    envelope_oracle,
)

PI = math.pi


def grid_1d(fn, lo=-1.0, hi=1.0, n=101) -> SpaceGrid:
    xs = np.linspace(lo, hi, n)
    return SpaceGrid(((lo, hi),), fn(xs))


def random_problem_1d(rng, n=101) -> EnvelopeProblem:
    xs = np.linspace(-1, 1, n)
    bumps = rng.uniform(-2, 2, 4)
    v = (
        bumps[0] * xs**2
        + bumps[1] * np.sin(3 * xs + bumps[2])
        + bumps[3]
    )
    f = (v[0] + rng.uniform(-1, 1), v[-1] + rng.uniform(-1, 1))
    a = rng.uniform(0.0, PI / 2 - 0.2)
    return EnvelopeProblem(SpaceGrid(((-1.0, 1.0),), v), f, a)


class TestSpaceGrid:
    def test_axis_and_spacing(self):
        g = SpaceGrid(((0.0, 1.0), (0.0, 2.0)), np.zeros((5, 9)))
        assert g.axis(0)[-1] == 1.0
        assert g.spacings() == (0.25, 0.25)
        assert g.h == 0.25
        assert g.square_spacing() == 0.25

    def test_square_spacing_mismatch_rejected(self):
        g = SpaceGrid(((0.0, 1.0), (0.0, 1.0)), np.zeros((5, 9)))
        with pytest.raises(DomainError):
            g.square_spacing()

    def test_rejects_bad_inputs(self):
        with pytest.raises(DomainError):
            SpaceGrid(((1.0, 0.0),), np.zeros(5))
        with pytest.raises(DomainError):
            SpaceGrid(((0.0, 1.0),), np.zeros((5, 5)))
        with pytest.raises(DomainError):
            SpaceGrid(((0.0, 1.0),), [0.0, math.nan, 0.0])
        with pytest.raises(DomainError):
            SpaceGrid(((0.0, 1.0),), [1.0])
        with pytest.raises(DomainError):
            SpaceGrid(((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)), np.zeros((3, 3, 3)))

    def test_values_immutable(self):
        g = grid_1d(lambda x: x)
        with pytest.raises(ValueError):
            g.values[0] = 7.0

    def test_csv_round_trip_1d(self, tmp_path):
        g = grid_1d(lambda x: np.sin(x) + x**3, n=37)
        path = tmp_path / "g1.csv"
        g.to_csv(path)
        back = SpaceGrid.from_csv(path)
        assert back.bounds == g.bounds
        assert np.array_equal(back.values, g.values)

    def test_csv_round_trip_2d(self, tmp_path):
        xs = np.linspace(0, 1, 9)[:, None]
        ys = np.linspace(-1, 1, 17)[None, :]
        g = SpaceGrid(((0.0, 1.0), (-1.0, 1.0)), np.cos(xs) * ys**2)
        path = tmp_path / "g2.csv"
        g.to_csv(path)
        back = SpaceGrid.from_csv(path)
        assert back.bounds == g.bounds
        assert np.array_equal(back.values, g.values)

    def test_csv_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DomainError):
            SpaceGrid.from_csv(path)

    def test_csv_rejects_incomplete_grid(self, tmp_path):
        path = tmp_path / "bad2.csv"
        path.write_text("x,y,value\n0,0,1\n0,1,1\n1,0,1\n")
        with pytest.raises(DomainError):
            SpaceGrid.from_csv(path)


class TestBoundaryArray:
    def test_1d_pair(self):
        g = grid_1d(lambda x: x)
        assert np.array_equal(as_boundary_array((2.0, 3.0), g), [2.0, 3.0])
        with pytest.raises(DomainError):
            as_boundary_array((1.0, 2.0, 3.0), g)
        with pytest.raises(DomainError):
            as_boundary_array((math.inf, 0.0), g)

    def test_2d_callable_and_shape(self):
        g = SpaceGrid(((0.0, 1.0), (0.0, 1.0)), np.zeros((5, 5)))
        arr = as_boundary_array(lambda x, y: x + y, g)
        assert arr[0, 0] == 0.0
        assert arr[-1, -1] == pytest.approx(2.0)
        with pytest.raises(DomainError):
            as_boundary_array(np.zeros((4, 5)), g)


class TestConvexEnvelope1D:
    def test_convex_input_unchanged(self):
        xs = np.linspace(-1, 1, 41)
        ys = xs**2
        assert np.array_equal(convex_envelope_1d(xs, ys), ys)

    def test_concave_input_becomes_chord(self):
        xs = np.linspace(-1, 1, 41)
        out = convex_envelope_1d(xs, -(xs**2))
        assert np.max(np.abs(out - (-1.0))) <= 1e-15

    def test_kink_unchanged(self):
        xs = np.linspace(-1, 1, 41)
        ys = np.abs(xs)
        assert np.array_equal(convex_envelope_1d(xs, ys), ys)

    def test_rejects_bad_inputs(self):
        with pytest.raises(DomainError):
            convex_envelope_1d([0.0], [1.0])
        with pytest.raises(DomainError):
            convex_envelope_1d([0.0, 0.0], [1.0, 1.0])
        with pytest.raises(DomainError):
            convex_envelope_1d([0.0, 1.0], [1.0])


class TestEnvelopeProblem:
    def test_phase_range(self):
        g = grid_1d(lambda x: x**2)
        with pytest.raises(DomainError):
            EnvelopeProblem(g, (1.0, 1.0), -0.1)
        with pytest.raises(DomainError):
            EnvelopeProblem(g, (1.0, 1.0), PI / 2)
        g2 = SpaceGrid(((0.0, 1.0), (0.0, 1.0)), np.zeros((5, 5)))
        with pytest.raises(DomainError):
            EnvelopeProblem(g2, np.zeros((5, 5)), 0.3)

    def test_obstacle_type_checked(self):
        with pytest.raises(DomainError):
            EnvelopeProblem(np.zeros(5), (0.0, 0.0), 0.0)


class TestEnvelope1D:
    def test_convex_obstacle_is_its_own_envelope(self):
        prob = EnvelopeProblem(grid_1d(lambda x: x**2), (1.0, 1.0), 0.0)
        out = envelope(prob)
        assert np.array_equal(out.values, prob.obstacle.values)

    def test_flat_obstacle_zero_trace(self):
        prob = EnvelopeProblem(grid_1d(lambda x: np.ones_like(x)), (0.0, 0.0), 0.0)
        out = envelope(prob)
        assert np.max(np.abs(out.values)) <= 1e-15

    def test_quarter_phase_zero_obstacle(self):
        prob = EnvelopeProblem(grid_1d(lambda x: np.zeros_like(x)), (0.0, 0.0), PI / 4)
        out = envelope(prob)
        xs = np.linspace(-1, 1, 101)
        assert np.max(np.abs(out.values - (xs**2 - 1) / 2)) <= 1e-12
        # certify the curvature with a stencil the solver does not use
        assert np.min(wide_angle_1d(out.values, out.spacings()[0])) >= PI / 4 - 1e-6

    def test_reference_matches_on_examples(self):
        cases = [
            (lambda x: x**2, (1.0, 1.0), 0.0),
            (lambda x: np.ones_like(x), (0.0, 0.0), 0.0),
            (lambda x: np.zeros_like(x), (0.0, 0.0), PI / 4),
        ]
        for fn, trace, a in cases:
            prob = EnvelopeProblem(grid_1d(fn), trace, a)
            direct = envelope(prob)
            swept = envelope_oracle(prob)
            assert np.max(np.abs(direct.values - swept.values)) <= 1e-8

    def test_reference_at_zero_phase_is_convex_hull(self):
        rng = np.random.default_rng(3)
        xs = np.linspace(-1, 1, 81)
        v = rng.uniform(-1, 1, 81)
        prob = EnvelopeProblem(SpaceGrid(((-1.0, 1.0),), v), (v[0], v[-1]), 0.0)
        swept = envelope_oracle(prob)
        hull = convex_envelope_1d(xs, v)
        assert np.max(np.abs(swept.values - hull)) <= 1e-8

    def test_admissible_obstacle_returned_unchanged(self):
        prob = EnvelopeProblem(grid_1d(lambda x: x**2), (1.0, 1.0), 0.0)
        swept = envelope_oracle(prob)
        assert np.max(np.abs(swept.values - prob.obstacle.values)) <= 1e-8

    def test_sweep_budget_error(self):
        prob = EnvelopeProblem(grid_1d(lambda x: np.ones_like(x)), (0.0, 0.0), 0.0)
        with pytest.raises(ConvergenceError):
            envelope_oracle(prob, max_sweeps=1)


class TestEnvelope2D:
    def test_matches_reference(self):
        xs = np.linspace(-1, 1, 33)[:, None]
        ys = np.linspace(-1, 1, 33)[None, :]
        v = xs**2 + ys**2
        g = SpaceGrid(((-1.0, 1.0), (-1.0, 1.0)), v)
        prob = EnvelopeProblem(g, np.full((33, 33), 1.0), PI / 2)
        direct = envelope(prob)
        swept = envelope_oracle(prob)
        assert np.max(np.abs(direct.values - swept.values)) <= 1e-8
        assert np.all(direct.values <= prob.obstacle.values)
        # convex along both grid axes
        assert np.min(np.diff(direct.values, n=2, axis=0)) >= -1e-10
        assert np.min(np.diff(direct.values, n=2, axis=1)) >= -1e-10

    def test_sweep_budget_error(self):
        g = SpaceGrid(((0.0, 1.0), (0.0, 1.0)), np.ones((17, 17)))
        prob = EnvelopeProblem(g, np.zeros((17, 17)), PI / 2)
        with pytest.raises(ConvergenceError):
            envelope(prob, max_sweeps=1)


class TestDirichlet:
    def test_1d_quarter_phase(self):
        out = dirichlet(((0.0, 1.0),), (51,), (0.0, 0.5), PI / 4)
        xs = np.linspace(0, 1, 51)
        assert np.max(np.abs(out.values - xs**2 / 2)) <= 1e-14

    def test_1d_zero_phase_affine(self):
        out = dirichlet(((-2.0, 3.0),), (41,), (1.0, -4.0), 0.0)
        xs = np.linspace(-2, 3, 41)
        affine = 1.0 + (-4.0 - 1.0) * (xs + 2.0) / 5.0
        assert np.max(np.abs(out.values - affine)) <= 1e-12

    def test_2d_half_pi_quadratic(self):
        out = dirichlet(
            ((0.0, 1.0), (0.0, 1.0)),
            (33, 33),
            lambda x, y: (x**2 + y**2) / 2,
            PI / 2,
        )
        xs = np.linspace(0, 1, 33)[:, None]
        ys = np.linspace(0, 1, 33)[None, :]
        exact = (xs**2 + ys**2) / 2
        assert np.max(np.abs(out.values - exact)) <= 1e-6
        res = discrete_hessian_angle(out) - PI / 2
        assert np.max(np.abs(res)) <= 1e-6
        wide = wide_angle_2d(out.values, out.square_spacing())
        assert np.max(np.abs(wide - PI / 2)) <= 1e-6

    def test_phase_out_of_range(self):
        with pytest.raises(DomainError):
            dirichlet(((0.0, 1.0),), (11,), (0.0, 0.0), PI / 2)


class TestDiscreteHessianAngle:
    def test_1d_quadratic(self):
        g = grid_1d(lambda x: x**2 / 2)
        assert np.max(np.abs(discrete_hessian_angle(g) - PI / 4)) <= 1e-12

    def test_2d_quadratic(self):
        xs = np.linspace(0, 1, 21)[:, None]
        ys = np.linspace(0, 1, 21)[None, :]
        g = SpaceGrid(((0.0, 1.0), (0.0, 1.0)), (xs**2 + ys**2) / 2)
        assert np.max(np.abs(discrete_hessian_angle(g) - PI / 2)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_envelope_candidate_for_itself(seed):
    rng = np.random.default_rng(seed)
    prob = random_problem_1d(rng)
    out = envelope(prob)
    v = prob.obstacle.values
    assert np.all(out.values <= v)
    assert out.values[0] <= prob.boundary[0]
    assert out.values[-1] <= prob.boundary[1]
    h = prob.obstacle.spacings()[0]
    d2 = np.diff(out.values, n=2)
    assert np.min(d2) >= math.tan(prob.phase) * h * h - 1e-10
    again = envelope(
        EnvelopeProblem(out, (out.values[0], out.values[-1]), prob.phase)
    )
    assert np.max(np.abs(again.values - out.values)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_envelope_monotone_in_data(seed):
    rng = np.random.default_rng(seed)
    prob = random_problem_1d(rng)
    lift_v = rng.uniform(0, 1, prob.obstacle.shape)
    lift_f = rng.uniform(0, 1, 2)
    bigger = EnvelopeProblem(
        prob.obstacle.with_values(prob.obstacle.values + lift_v),
        (prob.boundary[0] + lift_f[0], prob.boundary[1] + lift_f[1]),
        prob.phase,
    )
    low = envelope(prob)
    high = envelope(bigger)
    assert np.all(low.values <= high.values)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_envelope_matches_reference_randomly(seed):
    rng = np.random.default_rng(seed)
    prob = random_problem_1d(rng)
    direct = envelope(prob)
    swept = envelope_oracle(prob)
    assert np.max(np.abs(direct.values - swept.values)) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_unbounded_obstacle_gives_dirichlet(seed):
    rng = np.random.default_rng(seed)
    f = (rng.uniform(-2, 2), rng.uniform(-2, 2))
    a = rng.uniform(0.0, PI / 2 - 0.2)
    huge = EnvelopeProblem(grid_1d(lambda x: np.full_like(x, 1e9)), f, a)
    out = envelope(huge)
    ref = dirichlet(((-1.0, 1.0),), (101,), f, a)
    assert np.max(np.abs(out.values - ref.values)) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_envelope_maximality(seed):
    # lifting any interior node breaks the obstacle bound or the curvature
    rng = np.random.default_rng(seed)
    prob = random_problem_1d(rng)
    out = envelope(prob)
    v = prob.obstacle.values.copy()
    v[0] = min(v[0], prob.boundary[0])
    v[-1] = min(v[-1], prob.boundary[1])
    h = prob.obstacle.spacings()[0]
    floor = math.tan(prob.phase) * h * h - 1e-10
    for i in rng.integers(1, v.size - 1, size=8):
        bumped = out.values.copy()
        bumped[i] += 1e-9
        d2 = bumped[i - 1] - 2.0 * bumped[i] + bumped[i + 1]
        assert bumped[i] > v[i] or d2 < floor
