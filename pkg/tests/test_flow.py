import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conflictlab import flow
from conflictlab.calculus import integrate_disk
from conflictlab.errors import DegenerateQuadraticForm, Stalled, StepRejected
from conflictlab.liouville import minimize_w, residual, solve_pair, solve_single
from conflictlab.model import (
    FlowConfig,
    Params,
    RadialField,
    make_grid,
    project_density,
)

PI = math.pi

CFG2 = FlowConfig(1.0, 0.0, 0.0, dt=1e-3, t_end=0.5)
CFG_FULL = FlowConfig(1.0, 1.0, 0.0, dt=1e-3, t_end=0.5)
CFG_POT = FlowConfig(0.0, 0.0, 1.0, dt=0.05, t_end=200.0)


def bump_density(grid, mass, width=4.0):
    f = RadialField.from_function(grid, lambda r: np.exp(-width * r**2), kind="density")
    return project_density(f, mass)


def uniform_density(grid, mass):
    return RadialField.density(grid, np.full_like(grid.r, mass / PI))


def zero_potential(grid):
    return RadialField.potential(grid, np.zeros_like(grid.r))


class TestBernoulli:
    def test_at_zero_and_symmetry(self):
        x = np.array([0.0, 1e-9, -1e-9, 0.3, -0.3, 30.0, -30.0])
        b = flow._bernoulli(x)
        assert b[0] == 1.0
        np.testing.assert_allclose(b / flow._bernoulli(-x), np.exp(-x), rtol=1e-12)

    def test_extreme_arguments_stay_finite(self):
        b = flow._bernoulli(np.array([800.0, -800.0]))
        assert b[0] == 0.0
        assert np.isclose(b[1], 800.0)


class TestInitialState:
    def test_single_density_regime_seeds_traces(self, g256):
        p = Params(alpha=1.0, beta=1.0, gamma=1.0, theta=-1, m1=9.0, m2=3.0)
        s = flow.initial_state(p, CFG2, rho1=bump_density(g256, 9.0))
        assert s.t == 0.0
        assert s.energy_trace.shape == (1, 2)
        assert s.mass_trace.shape == (1, 3)
        assert s.sup_trace.shape == (1, 2)
        assert np.isclose(s.mass_trace[0, 1], 9.0, rtol=1e-12)
        assert np.isclose(integrate_disk(s.rho2), 3.0, rtol=1e-12)

    def test_gamma_zero_gives_flat_chemical_potential(self, g256):
        p = Params(alpha=1.0, beta=1.0, gamma=0.0, theta=-1, m1=9.0, m2=3.0)
        s = flow.initial_state(p, CFG2, rho1=bump_density(g256, 9.0))
        assert np.all(s.u2.values == 0.0)

    def test_potential_regime_induces_densities(self, g256):
        p = Params(alpha=1.0, beta=0.5, gamma=1.0, theta=-1, m1=6.0, m2=2.0)
        u1 = RadialField.potential(g256, 0.3 * (1.0 - g256.r**2))
        s = flow.initial_state(p, CFG_POT, u1=u1, u2=zero_potential(g256))
        assert np.isclose(integrate_disk(s.rho1), 6.0, rtol=1e-12)
        assert np.isclose(integrate_disk(s.rho2), 2.0, rtol=1e-12)

    @pytest.mark.parametrize(
        "cfg, kwargs",
        [
            (CFG2, {}),
            (CFG2, {"rho1": "rho", "rho2": "rho"}),
            (CFG_FULL, {"rho1": "rho"}),
            (CFG_FULL, {"rho1": "rho", "u1": "u"}),
            (CFG_POT, {"u1": "u"}),
            (CFG_POT, {"u1": "u", "u2": "u", "rho1": "rho"}),
        ],
    )
    def test_rejects_wrong_field_combinations(self, g256, cfg, kwargs):
        p = Params(alpha=1.0, beta=0.5, gamma=1.0, theta=-1, m1=6.0, m2=2.0)
        fields = {"rho": bump_density(g256, 6.0), "u": zero_potential(g256)}
        with pytest.raises(ValueError):
            flow.initial_state(p, cfg, **{k: fields[v] for k, v in kwargs.items()})

    def test_state_rejects_mistagged_fields(self, g256):
        rho = bump_density(g256, 5.0)
        u = zero_potential(g256)
        with pytest.raises(ValueError):
            flow.FlowState(t=0.0, rho1=u, u1=u, u2=u)
        with pytest.raises(ValueError):
            flow.FlowState(t=0.0, rho1=rho, u1=rho, u2=u)

    def test_state_rejects_mixed_grids(self, g256):
        other = make_grid(128)
        with pytest.raises(ValueError):
            flow.FlowState(
                t=0.0,
                rho1=bump_density(g256, 5.0),
                u1=zero_potential(other),
                u2=zero_potential(other),
            )


class TestSingleDensityStep:
    def test_uniform_no_coupling_is_stationary(self, g256):
        p = Params(alpha=0.0, beta=0.0, gamma=1.0, theta=-1, m1=2.0, m2=1.0)
        s0 = flow.initial_state(p, CFG2, rho1=uniform_density(g256, 2.0))
        s1 = flow.step_single_density(s0, p, 0.05)
        assert np.max(np.abs(s1.rho1.values - s0.rho1.values)) < 1e-12
        assert abs(s1.mass_trace[-1, 1] - 2.0) < 1e-12

    def test_pair_solution_is_a_fixed_point(self, g256):
        p = Params(alpha=1.0, beta=0.5, gamma=1.0, theta=-1, m1=8.0, m2=4.0)
        sol = solve_pair(p, g256)
        e = np.exp(p.alpha * sol.u1.values - p.beta * sol.u2.values)
        rho = RadialField.density(
            g256, p.m1 * e / integrate_disk(RadialField(g256, e))
        )
        s = flow.initial_state(p, CFG2, rho1=rho)
        f0 = s.energy_trace[-1, 1]
        for _ in range(50):
            s = flow.step_single_density(s, p, 0.01)
        assert np.max(np.abs(s.rho1.values - rho.values)) < 1e-9
        assert np.max(np.abs(s.u1.values - sol.u1.values)) < 1e-9
        assert abs(s.energy_trace[-1, 1] - f0) < 1e-10

    def test_energy_never_rises_beyond_slack(self, g256):
        p = Params(alpha=1.0, beta=2.0, gamma=1.0, theta=-1, m1=10.0, m2=5.0)
        end = flow.run_flow(flow.initial_state(p, CFG2, rho1=bump_density(g256, 10.0)), p, CFG2)
        e = end.energy_trace[:, 1]
        assert np.all(np.diff(e) <= 1e-10 * np.maximum(1.0, np.abs(e[:-1])))

    def test_mass_conserved_and_positive_along_run(self, g256):
        p = Params(alpha=1.0, beta=2.0, gamma=1.0, theta=-1, m1=10.0, m2=5.0)
        end = flow.run_flow(flow.initial_state(p, CFG2, rho1=bump_density(g256, 10.0)), p, CFG2)
        m1s = end.mass_trace[:, 1]
        assert np.max(np.abs(m1s - m1s[0])) / m1s[0] < 1e-12
        assert end.rho1.values.min() >= 0.0

    def test_frozen_terminal_energy(self, g256):
        p = Params(alpha=1.0, beta=2.0, gamma=1.0, theta=-1, m1=10.0, m2=5.0)
        end = flow.run_flow(flow.initial_state(p, CFG2, rho1=bump_density(g256, 10.0)), p, CFG2)
        assert end.t == 0.5
        assert np.isclose(end.energy_trace[-1, 1], 19.036937783402205, rtol=1e-9)
        assert np.isclose(np.max(end.rho1.values), 3.4140065674838502, rtol=1e-9)


class TestTwoDensityStep:
    def test_requires_second_density(self, g256):
        p = Params(alpha=1.0, beta=0.5, gamma=1.0, theta=1, m1=6.0, m2=4.0)
        s = flow.FlowState(
            t=0.0,
            rho1=bump_density(g256, 6.0),
            u1=zero_potential(g256),
            u2=zero_potential(g256),
        )
        with pytest.raises(ValueError, match="rho2"):
            flow.step_two_densities(s, p, 1e-3)

    def test_cooperative_energy_monotone(self, g256):
        p = Params(alpha=1.0, beta=0.5, gamma=1.0, theta=1, m1=6.0, m2=4.0)
        s = flow.initial_state(
            p,
            CFG_FULL,
            rho1=bump_density(g256, 6.0),
            rho2=project_density(
                RadialField.from_function(g256, lambda r: 2.0 - r**2, kind="density"), 4.0
            ),
        )
        end = flow.run_flow(s, p, CFG_FULL)
        e = end.energy_trace[:, 1]
        assert np.all(np.diff(e) <= 1e-10 * np.maximum(1.0, np.abs(e[:-1])))
        m = end.mass_trace
        assert np.max(np.abs(m[:, 1] - 6.0)) < 6e-12
        assert np.max(np.abs(m[:, 2] - 4.0)) < 4e-12

    def test_conflict_case_steps_without_enforcement(self, g256):
        p = Params(alpha=0.5, beta=2.0, gamma=0.5, theta=-1, m1=6.0, m2=4.0)
        s = flow.initial_state(
            p, CFG_FULL, rho1=bump_density(g256, 6.0), rho2=uniform_density(g256, 4.0)
        )
        for _ in range(20):
            s = flow.step_two_densities(s, p, 1e-3)
        assert s.t > 0.019
        assert np.isclose(s.mass_trace[-1, 1], 6.0, rtol=1e-12)


class TestPotentialStep:
    def test_degenerate_form_warns_and_proceeds(self, g256):
        p = Params(alpha=1.0, beta=1.0, gamma=1.0, theta=-1, m1=4.0, m2=2.0)
        s = flow.initial_state(p, CFG_POT, u1=zero_potential(g256), u2=zero_potential(g256))
        with pytest.warns(DegenerateQuadraticForm):
            s = flow.step_potentials(s, p, 0.01)
        assert s.t == 0.01

    def test_definite_form_does_not_warn(self, g256):
        p = Params(alpha=2.0, beta=1.0, gamma=1.0, theta=-1, m1=4.0, m2=2.0)
        s = flow.initial_state(p, CFG_POT, u1=zero_potential(g256), u2=zero_potential(g256))
        with warnings.catch_warnings():
            warnings.simplefilter("error", DegenerateQuadraticForm)
            flow.step_potentials(s, p, 0.01)

    def test_wall_values_stay_zero(self, g256):
        p = Params(alpha=2.0, beta=1.0, gamma=1.0, theta=-1, m1=4.0, m2=2.0)
        u1 = RadialField.potential(g256, 0.5 * (1.0 - g256.r**2))
        s = flow.initial_state(p, CFG_POT, u1=u1, u2=zero_potential(g256))
        for _ in range(5):
            s = flow.step_potentials(s, p, 0.1)
        assert s.u1.values[-1] == 0.0
        assert s.u2.values[-1] == 0.0

    def test_sourceless_potential_decays(self, g256):
        p = Params(alpha=1.0, beta=0.0, gamma=1.0, theta=-1, m1=4.0 * PI, m2=0.0)
        cfg = FlowConfig(0.0, 0.0, 1.0, dt=0.05, t_end=3.0, adapt=False)
        u2 = RadialField.potential(g256, 0.2 * (1.0 - g256.r**2) ** 2)
        s = flow.initial_state(p, cfg, u1=zero_potential(g256), u2=u2)
        end = flow.run_flow(s, p, cfg)
        assert np.max(np.abs(end.u2.values)) < 1e-6

    def test_decoupled_flow_reaches_single_species_solution(self, g256):
        p = Params(alpha=1.0, beta=0.0, gamma=1.0, theta=-1, m1=4.0 * PI, m2=0.0)
        s = flow.initial_state(p, CFG_POT, u1=zero_potential(g256), u2=zero_potential(g256))
        end = flow.run_flow(s, p, CFG_POT)
        ref = solve_single(4.0 * PI, 1.0, g256)
        assert np.max(np.abs(end.u1.values - ref.u1.values)) < 1e-8
        r1, r2 = residual(flow.steady_solution(end, p), p)
        assert r1 < 1e-7 and r2 == 0.0

    def test_enforced_conflict_energy_monotone(self, g256):
        p = Params(alpha=2.0, beta=1.0, gamma=1.0, theta=-1, m1=10.0, m2=4.0)
        u1 = RadialField.potential(g256, 0.3 * (1.0 - g256.r**2))
        cfg = FlowConfig(0.0, 0.0, 1.0, dt=1e-3, t_end=0.3, adapt=False)
        s = flow.initial_state(p, cfg, u1=u1, u2=zero_potential(g256))
        end = flow.run_flow(s, p, cfg)
        e = end.energy_trace[:, 1]
        assert np.all(np.diff(e) <= 1e-10 * np.maximum(1.0, np.abs(e[:-1])))


class TestRunFlow:
    def test_detects_steady_state_early(self, g256):
        p = Params(alpha=1.0, beta=0.0, gamma=1.0, theta=-1, m1=4.0 * PI, m2=0.0)
        s = flow.initial_state(p, CFG_POT, u1=zero_potential(g256), u2=zero_potential(g256))
        end = flow.run_flow(s, p, CFG_POT)
        assert end.t < CFG_POT.t_end
        assert len(end.mass_trace) < 200

    def test_fixed_step_grid_without_adapt(self, g256):
        p = Params(alpha=1.0, beta=1.0, gamma=1.0, theta=-1, m1=9.0, m2=3.0)
        cfg = FlowConfig(1.0, 0.0, 0.0, dt=0.01, t_end=0.05, adapt=False)
        end = flow.run_flow(flow.initial_state(p, cfg, rho1=bump_density(g256, 9.0)), p, cfg)
        np.testing.assert_allclose(np.diff(end.mass_trace[:, 0]), 0.01, rtol=1e-12)
        assert np.isclose(end.t, 0.05, rtol=1e-12)

    def test_stalls_when_every_step_is_rejected(self, g256, monkeypatch):
        def always_reject(s, p, dt):
            raise StepRejected("forced")

        monkeypatch.setitem(flow._STEPPERS, (1.0, 0.0, 0.0), always_reject)
        p = Params(alpha=0.0, beta=0.0, gamma=1.0, theta=-1, m1=2.0, m2=1.0)
        s = flow.initial_state(p, CFG2, rho1=uniform_density(g256, 2.0))
        with pytest.raises(Stalled):
            flow.run_flow(s, p, CFG2)

    def test_rejection_propagates_without_adapt(self, g256, monkeypatch):
        def always_reject(s, p, dt):
            raise StepRejected("forced")

        monkeypatch.setitem(flow._STEPPERS, (1.0, 0.0, 0.0), always_reject)
        p = Params(alpha=0.0, beta=0.0, gamma=1.0, theta=-1, m1=2.0, m2=1.0)
        cfg = FlowConfig(1.0, 0.0, 0.0, dt=0.01, t_end=0.05, adapt=False)
        s = flow.initial_state(p, cfg, rho1=uniform_density(g256, 2.0))
        with pytest.raises(StepRejected):
            flow.run_flow(s, p, cfg)

    def test_trace_rows_layout(self, g256):
        p = Params(alpha=1.0, beta=1.0, gamma=1.0, theta=-1, m1=9.0, m2=3.0)
        cfg = FlowConfig(1.0, 0.0, 0.0, dt=0.01, t_end=0.05, adapt=False)
        end = flow.run_flow(flow.initial_state(p, cfg, rho1=bump_density(g256, 9.0)), p, cfg)
        rows = flow.trace_rows(end)
        assert rows.shape == (len(end.mass_trace), 5)
        assert np.all(np.diff(rows[:, 0]) > 0)
        np.testing.assert_array_equal(rows[:, 3], end.energy_trace[:, 1])
        assert rows[-1, 4] == np.max(end.rho1.values)


class TestSteadySolution:
    def test_residual_small_at_fixed_point(self, g256):
        p = Params(alpha=1.0, beta=1.0, gamma=1.0, theta=-1, m1=9.0, m2=3.0)
        cfg = FlowConfig(1.0, 0.0, 0.0, dt=0.01, t_end=100.0)
        end = flow.run_flow(flow.initial_state(p, cfg, rho1=bump_density(g256, 9.0)), p, cfg)
        r1, r2 = residual(flow.steady_solution(end, p), p)
        assert r1 < 1e-8
        assert r2 < 1e-8

    def test_residual_honest_away_from_fixed_point(self, g256):
        p = Params(alpha=1.0, beta=0.0, gamma=1.0, theta=-1, m1=4.0 * PI, m2=0.0)
        s = flow.initial_state(p, CFG_POT, u1=zero_potential(g256), u2=zero_potential(g256))
        r1, _ = residual(flow.steady_solution(s, p), p)
        assert r1 > 0.1

    def test_multipliers_positive_at_fixed_point(self, g256):
        p = Params(alpha=1.0, beta=1.0, gamma=1.0, theta=-1, m1=9.0, m2=3.0)
        cfg = FlowConfig(1.0, 0.0, 0.0, dt=0.01, t_end=100.0)
        end = flow.run_flow(flow.initial_state(p, cfg, rho1=bump_density(g256, 9.0)), p, cfg)
        lam1, lam2 = flow.steady_solution(end, p).multipliers
        assert lam1 > 0 and lam2 > 0


class TestWarmStart:
    def test_matches_cold_start(self, g256):
        p = Params(alpha=1.0, beta=2.0, gamma=1.0, theta=-1, m1=10.0, m2=5.0)
        rho = bump_density(g256, 10.0, width=3.0)
        cold = minimize_w(rho, p, g256)
        warm = minimize_w(rho, p, g256, w0=cold)
        assert np.max(np.abs(cold.values - warm.values)) < 1e-9

    def test_rejects_foreign_grid_seed(self, g256):
        from conflictlab.errors import GridMismatch

        p = Params(alpha=1.0, beta=2.0, gamma=1.0, theta=-1, m1=10.0, m2=5.0)
        rho = bump_density(g256, 10.0)
        w0 = zero_potential(make_grid(128))
        with pytest.raises(GridMismatch):
            minimize_w(rho, p, g256, w0=w0)


@settings(max_examples=25, deadline=None)
@given(
    mass=st.floats(1.0, 20.0),
    amp=st.floats(-0.5, 0.5),
    mode=st.integers(1, 3),
)
def test_step_preserves_mass_and_positivity(mass, amp, mode):
    grid = make_grid(64)
    p = Params(alpha=1.0, beta=1.0, gamma=1.0, theta=-1, m1=mass, m2=2.0)
    vals = np.exp(amp * np.cos(mode * PI * grid.r))
    rho = project_density(RadialField.density(grid, vals), mass)
    s = flow.initial_state(p, CFG2, rho1=rho)
    for _ in range(3):
        s = flow.step_single_density(s, p, 1e-3)
    assert np.isclose(s.mass_trace[-1, 1], mass, rtol=1e-12)
    assert s.rho1.values.min() >= 0.0
