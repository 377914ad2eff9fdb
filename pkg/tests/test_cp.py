from dataclasses import dataclass

import numpy as np
import pytest
from numpy.testing import assert_allclose

from thermal_qcp import (
    Branch,
    DomainError,
    Method,
    ModelPoint,
    Quantity,
    SweepCurve,
    XState,
    XYModel,
    cp_vs_temperature,
    detect_branch_switch,
    estimate_cp,
    numerical_derivative,
    regrowth_scan,
    sweep,
)
from thermal_qcp.cp import max_value_location, refine_cp

GRID = np.linspace(0.0, 2.0, 201)


def curve(values, branch=None, t=GRID):
    return SweepCurve(t, values, Quantity.TQD, {"beta": 3.0}, branch)


@dataclass(frozen=True)
class FrozenModel:
    """Model whose state ignores both the tuning value and the temperature."""

    state: XState
    beta: float = 1.0

    @property
    def fixed(self):
        return {"beta": self.beta}

    def with_beta(self, beta):
        return FrozenModel(self.state, beta)

    def __call__(self, t):
        return ModelPoint(self.state, {})


class TestSweepCurve:
    def test_validation(self):
        with pytest.raises(DomainError):
            curve(np.ones(5), t=np.arange(5.0)[::-1])
        with pytest.raises(DomainError):
            curve(np.full(GRID.size, np.nan))
        with pytest.raises(DomainError):
            curve(np.ones(GRID.size), branch=(Branch.Z,))


class TestDerivative:
    def test_quadratic(self):
        d2 = numerical_derivative(curve((GRID - 0.7) ** 2), order=2)
        assert_allclose(d2.values, 2.0, atol=1e-9)
        assert d2.derivative == 2

    def test_linear(self):
        c = curve(3 * GRID - 1)
        assert_allclose(numerical_derivative(c, 1).values, 3.0, atol=1e-9)
        assert_allclose(numerical_derivative(c, 2).values, 0.0, atol=1e-9)

    def test_linearity(self):
        f, g = np.sin(GRID), GRID**3
        lhs = numerical_derivative(curve(2 * f - 5 * g)).values
        rhs = 2 * numerical_derivative(curve(f)).values - 5 * numerical_derivative(curve(g)).values
        assert_allclose(lhs, rhs, atol=1e-10)

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            numerical_derivative(curve(np.ones(4), t=np.arange(4.0)))

    def test_non_uniform_grid(self):
        t = np.sort(np.random.default_rng(0).uniform(0, 1, 20))
        with pytest.raises(DomainError):
            numerical_derivative(curve(t, t=t))

    def test_bad_order(self):
        with pytest.raises(DomainError):
            numerical_derivative(curve(GRID), order=3)


class TestBranchSwitch:
    def test_constant_branch(self):
        c = curve(np.zeros(GRID.size), branch=(Branch.Z,) * GRID.size)
        assert detect_branch_switch(c) == []

    def test_single_switch(self):
        branch = tuple(Branch.Y if t < 1.234 else Branch.Z for t in GRID)
        (est,) = detect_branch_switch(curve(np.zeros(GRID.size), branch=branch))
        assert_allclose(est.location, 1.235)
        assert_allclose(est.uncertainty, 0.005)
        assert est.method is Method.BRANCH_SWITCH

    def test_needs_branches(self):
        with pytest.raises(DomainError):
            detect_branch_switch(curve(GRID))


class TestEstimate:
    def test_step_location(self):
        est = estimate_cp(curve(np.tanh((GRID - 1.23) / 0.05)))
        assert_allclose(est.location, 1.23, atol=0.01)
        assert est.method is Method.FIRST_DERIV_EXTREMUM
        assert est.uncertainty > 0
        assert est.kT == pytest.approx(1 / 3)

    def test_second_order(self):
        est = estimate_cp(curve(np.log(np.cosh((GRID - 0.8) / 0.1))), order=2)
        assert_allclose(est.location, 0.8, atol=0.01)
        assert est.method is Method.SECOND_DERIV_EXTREMUM

    @pytest.mark.parametrize("scale, shift", [(3.0, 0.0), (-0.2, 5.0), (1e4, -2.0)])
    def test_rescaling_invariance(self, scale, shift):
        v = np.tanh((GRID - 1.23) / 0.05) + 0.3 * GRID
        a = estimate_cp(curve(v))
        b = estimate_cp(curve(scale * v + shift))
        assert a.location == b.location

    def test_flat(self):
        assert estimate_cp(curve(np.full(GRID.size, 0.4))) is None

    def test_monotone_derivative(self):
        assert estimate_cp(curve(np.exp(GRID))) is None

    def test_window_without_extremum(self):
        assert estimate_cp(curve(np.tanh((GRID - 1.23) / 0.05)), window=(0.0, 0.5)) is None

    def test_ambiguous(self):
        v = np.tanh((GRID - 0.5) / 0.05) + np.tanh((GRID - 1.5) / 0.05)
        assert estimate_cp(curve(v)).ambiguous
        assert not estimate_cp(curve(np.tanh((GRID - 1.0) / 0.05))).ambiguous

    def test_max_value(self):
        est = max_value_location(curve(-((GRID - 1.31) ** 2)))
        assert_allclose(est.location, 1.31)
        assert est.method is Method.MAX_VALUE


class TestSweep:
    def test_minimum_points(self):
        with pytest.raises(DomainError):
            sweep(XYModel(lam=1.0), np.linspace(0.5, 1.5, 20), [Quantity.TQD])

    def test_workers_do_not_change_results(self):
        model = XYModel(axis="lam", gamma=1.0, beta=5.0)
        grid = np.linspace(0.5, 1.5, 51)
        a = sweep(model, grid, [Quantity.TQD, Quantity.EOF], workers=1)
        b = sweep(model, grid, [Quantity.TQD, Quantity.EOF], workers=2)
        for x, y in zip(a, b):
            assert np.array_equal(x.values, y.values)
            assert x.branch == y.branch

    def test_branch_attached_to_discord_only(self):
        model = XYModel(axis="lam", gamma=1.0, beta=5.0)
        tqd, eof = sweep(model, np.linspace(0.5, 1.5, 51), [Quantity.TQD, Quantity.EOF])
        assert tqd.branch is not None and eof.branch is None

    def test_refine(self):
        model = XYModel(axis="lam", gamma=1.0, beta=10.0)
        grid = np.linspace(0.5, 1.5, 51)
        (c,) = sweep(model, grid, [Quantity.SXX])
        coarse = estimate_cp(c, order=1, window=(0.8, 1.2))
        fine = refine_cp(model, Quantity.SXX, coarse, grid[1] - grid[0])
        assert abs(fine.location - coarse.location) <= 2 * (grid[1] - grid[0])
        assert fine.uncertainty < coarse.uncertainty


class TestTemperatureTable:
    def test_single_temperature(self):
        model = XYModel(axis="lam", gamma=1.0)
        table = cp_vs_temperature(model, [Quantity.SXX], [10.0], np.linspace(0.5, 1.5, 51))
        assert len(table.rows) == 1
        assert table.extrapolation[Quantity.SXX] is None

    def test_extrapolation(self):
        model = XYModel(axis="lam", gamma=1.0)
        table = cp_vs_temperature(
            model, [Quantity.SXX], [5.0, 10.0], np.linspace(0.5, 1.5, 101), window=(0.8, 1.2)
        )
        assert [r.kT for r in table.rows] == [0.1, 0.2]
        ext = table.extrapolation[Quantity.SXX]
        assert np.isinf(ext.beta) and ext.kT == 0.0
        e1, e2 = table.rows[0].estimate, table.rows[1].estimate
        slope = (e2.location - e1.location) / 0.1
        assert_allclose(ext.location, e1.location - slope * 0.1)


class TestRegrowth:
    def test_temperature_independent_state(self):
        state = XState(0.3, 0.15, 0.4, 0.1, 0.2)
        rep = regrowth_scan(FrozenModel(state), 0.0, np.linspace(0.1, 3, 50))
        assert rep.tqd_regrowth == () and rep.eof_regrowth == ()
        assert rep.eof_death_kT is None

    def test_onsets(self):
        from thermal_qcp.cp import _regrowth_onsets

        kt = np.arange(8.0)
        assert _regrowth_onsets(kt, np.array([3, 2, 1, 2, 3, 2, 1, 0.0]), 1e-7) == (2.0,)
        assert _regrowth_onsets(kt, np.array([0, 0, 1, 2, 3, 2, 1, 0.0]), 1e-7) == (1.0,)
        assert _regrowth_onsets(kt, np.array([5, 4, 3, 2, 1, 1, 1, 1.0]), 1e-7) == ()

    def test_too_few_temperatures(self):
        with pytest.raises(DomainError):
            regrowth_scan(XYModel(), 1.0, np.linspace(0.1, 1, 10))
