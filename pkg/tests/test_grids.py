"""Grid function plumbing: quadrature, evaluation, level crossings."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from profile_lab.grids import (GridFunction, Piece, cumulative_integral,
                               make_grid)


def test_grid_snapping():
    grid = make_grid(-30.0, 1e-3)
    assert grid.steps_per_unit == 1000
    assert grid.m == 30000
    assert grid.positions[0] == pytest.approx(-30.0)
    assert grid.positions[-1] == 0.0


def test_grid_rejects_bad_inputs():
    with pytest.raises(ValueError):
        make_grid(-30.0, 0.3)  # too coarse
    with pytest.raises(ValueError):
        make_grid(-0.5, 1e-3)  # window shorter than one unit
    with pytest.raises(ValueError):
        make_grid(2.0, 1e-3)


class TestCumulativeIntegral:
    def test_exact_for_smooth_exponential(self):
        h = 1e-2
        x = np.arange(301) * h
        cum = cumulative_integral(np.exp(x), h)
        exact = np.exp(x) - 1.0
        # entries 0-2 skip the endpoint correction by design
        assert np.max(np.abs(cum[3:] - exact[3:]) / exact[3:]) < 1e-9
        assert np.max(np.abs(cum[:3] - exact[:3])) < 1e-6

    def test_kink_splitting(self):
        # f(x) = x for x <= 1, 3x - 2 beyond: derivative jump at the node
        h = 1e-2
        x = np.arange(201) * h
        f = np.where(x <= 1.0, x, 3.0 * x - 2.0)
        exact = np.where(x <= 1.0, 0.5 * x * x,
                         0.5 + 1.5 * (x * x - 1.0) - 2.0 * (x - 1.0))
        plain = cumulative_integral(f, h)
        split = cumulative_integral(f, h, kinks=(100,))
        assert np.max(np.abs(split - exact)) <= np.max(np.abs(plain - exact))
        assert np.max(np.abs(split - exact)) < 1e-12

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_order_preserving(self, seed):
        # all composite weights are non-negative, so A <= B pointwise
        # implies ordered cumulative integrals
        rng = np.random.default_rng(seed)
        n = 50
        a = np.cumsum(rng.random(n))
        b = a + np.cumsum(rng.random(n)) * 0.1
        kinks = (int(rng.integers(3, n - 3)),)
        ca = cumulative_integral(a, 0.01, kinks=kinks)
        cb = cumulative_integral(b, 0.01, kinks=kinks)
        assert np.all(cb - ca >= -1e-15)


class TestPiece:
    def test_constant(self):
        p = Piece.constant(2.0, 0.0, 1.5)
        assert p.value(1.0) == 2.0
        assert p.integral(0.0, 1.0) == pytest.approx(2.0)
        assert p.integral(-1.0, 3.0) == pytest.approx(3.0)  # clipped to (0, 1.5]

    def test_exponential(self):
        p = Piece.exponential(1.5, 0.8, 1.0, 1.0, math.inf)
        assert p.value(1.0) == pytest.approx(1.5)
        assert p.integral(1.0, 2.0) == pytest.approx(
            1.5 / 0.8 * (math.exp(0.8) - 1.0))

    def test_crossing_closed_form(self):
        p = Piece.exponential(1.0, 1.0, 0.0, 0.0, math.inf)
        assert p.crossing(math.e ** 2) == pytest.approx(2.0, abs=1e-14)

    def test_crossing_two_terms_by_bisection(self):
        p = Piece(lo=0.0, hi=math.inf, level=0.0,
                  terms=((1.0, 1.0, 0.0), (0.5, 0.3, 0.0)))
        target = 4.0
        x = p.crossing(target)
        assert p.value(x) == pytest.approx(target, rel=1e-12)

    def test_crossing_none_when_piece_too_low(self):
        p = Piece.constant(1.0, 0.0, 2.0)
        assert p.crossing(1.5) is None
        assert p.crossing(0.5) == 0.0  # whole piece already above


@pytest.fixture()
def exp_grid_function():
    grid = make_grid(-10.0, 1e-3)
    return GridFunction(
        grid=grid, left_values=np.exp(grid.positions),
        right_pieces=(Piece.exponential(1.0, 1.0, 0.0, 0.0, math.inf),),
        tail_rate=1.0)


class TestGridFunction:
    def test_value_zones(self, exp_grid_function):
        g = exp_grid_function
        for x in (-12.0, -5.5, -0.0007, 0.0, 0.3, 4.2):
            assert g.value(x) == pytest.approx(math.exp(x), rel=1e-10)

    def test_vectorized_matches_scalar(self, exp_grid_function):
        g = exp_grid_function
        xs = np.array([-12.0, -3.2, 0.0, 1.7])
        np.testing.assert_allclose(g.value(xs),
                                   [g.value(float(x)) for x in xs])

    def test_integral(self, exp_grid_function):
        g = exp_grid_function
        for x in (-11.0, -2.345, 0.0, 2.5):
            assert g.integral_to(x) == pytest.approx(math.exp(x), rel=1e-9)

    def test_tau_inverts(self, exp_grid_function):
        g = exp_grid_function
        for t in (1e-6, 0.01, 0.9999, 1.0, 5.0, 100.0):
            assert g.tau(t) == pytest.approx(math.log(t), abs=1e-9)

    def test_tau_plateau_supremum(self):
        # plateau at level 1 on (0, 2], then rising: tau(1) is the left end,
        # tau of anything in (1, value(2+)] lands at the plateau's right end
        grid = make_grid(-5.0, 1e-2)
        vals = np.exp(grid.positions)
        g = GridFunction(
            grid=grid, left_values=vals,
            right_pieces=(Piece.constant(1.0, 0.0, 2.0),
                          Piece.exponential(1.0, 1.0, 2.0, 2.0, math.inf)),
            tail_rate=1.0)
        assert g.tau(1.0) == pytest.approx(0.0, abs=1e-9)
        assert g.tau(1.0001) == pytest.approx(2.0 + math.log(1.0001), abs=1e-9)

    def test_monotonicity_probes(self, exp_grid_function):
        assert exp_grid_function.is_monotone()
        assert exp_grid_function.is_nonnegative()
        assert exp_grid_function.is_strictly_positive()

    def test_tail_mass(self, exp_grid_function):
        g = exp_grid_function
        assert g.tail_mass == pytest.approx(math.exp(-10.0), rel=1e-12)
