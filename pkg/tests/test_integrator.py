import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import solve_ivp

from forge.core.errors import ConfigError
from forge.integrator.config import IterationConfig, StageScales
from forge.integrator.cutoffs import build_cutoffs, chi
from forge.integrator.energy import energy_gap_report
from forge.integrator.flows import VelocitySampler, solve_flows, trace_back
from forge.integrator.iterate import admissible_lambda, ledger_stage, run_iteration
from forge.integrator.mollify import mollify_time, time_weights
from forge.integrator.perturbation import WavePacket, cancellation_check
from forge.integrator.phase import stationary_phase_fit
from forge.integrator.residual import residual_check
from forge.integrator.starting import (
    base_profile,
    base_stress,
    make_time_grid,
    noise_series,
    starting_bounds,
    starting_triple,
)
from forge.integrator.state import STRESS_COMPONENTS, energy_profile, hold_after
from forge.ledger.params import ParameterSet
from forge.spectral.field import FourierField, Rank
from forge.spectral.grid import TorusGrid
from forge.spectral.operators import div, trace
from forge.stochastic.ou import simulate_ou
from forge.stochastic.spectrum import NoiseSpectrum
from forge.waves.families import build_wave_families
from forge.waves.gamma import build_gamma_system

from .conftest import random_field


@pytest.fixture(scope="module")
def start_config() -> IterationConfig:
    return IterationConfig(n=16, horizon=0.0125, stages=())


@pytest.fixture(scope="module")
def surrogate_runs():
    """One stage at the default scales, plus the same stage with the Nash term left out."""
    config = IterationConfig(n=24, horizon=0.0125, stages=(StageScales(lam=5, delta=100.0, ell=0.01, mu=40.0),))
    return run_iteration(config, None), run_iteration(config, None, drop_component="nash")


class TestConfig:
    def test_mu_must_align_with_dt(self):
        with pytest.raises(ValidationError):
            IterationConfig(stages=(StageScales(lam=5, delta=1.0, ell=0.01, mu=30.0),))

    def test_L_above_one(self):
        with pytest.raises(ValidationError):
            IterationConfig(L=1.0)

    def test_history_covers_every_mollifier(self):
        config = IterationConfig(stages=(StageScales(lam=5, delta=1.0, ell=0.01, mu=40.0),) * 2)
        assert config.history_samples() == 2 * (4 + 2) + 2

    @pytest.mark.parametrize("lam, n", [(3, 24), (10, 24), (5, 16)])
    def test_inadmissible_lambda(self, lam, n):
        with pytest.raises(ConfigError):
            admissible_lambda(lam, n)

    def test_admissible_lambda(self):
        admissible_lambda(5, 24)
        admissible_lambda(10, 48)


class TestStartingTriple:
    def test_residual_vanishes(self, start_config):
        grid = TorusGrid(n=start_config.n)
        tg = make_time_grid(start_config)
        z = noise_series(None, grid, tg)
        state = starting_triple(start_config.L, grid, tg, z, start_config.alpha)
        assert residual_check(state, z).relative <= 1e-6

    def test_velocity_bound_ratio(self, start_config):
        grid = TorusGrid(n=start_config.n)
        tg = make_time_grid(start_config)
        state = starting_triple(start_config.L, grid, tg, noise_series(None, grid, tg), start_config.alpha)
        bounds = starting_bounds(state, c_R=1.0)
        assert bounds["v0_ratio"] == pytest.approx((2 * math.pi) ** -1.5, rel=1e-12)

    def test_base_stress_is_trace_free_with_the_profile_as_divergence(self, grid):
        s = base_stress(grid)
        np.testing.assert_allclose(div(s).coeffs, base_profile(grid).coeffs, atol=1e-12)
        np.testing.assert_allclose(trace(s).coeffs, 0.0, atol=1e-14)

    def test_L_above_one(self, start_config):
        grid = TorusGrid(n=16)
        tg = make_time_grid(start_config)
        with pytest.raises(ValueError):
            starting_triple(1.0, grid, tg, noise_series(None, grid, tg), 0.25)

    def test_energy_profile(self):
        assert energy_profile(np.array([0.0]), 2.0)[0] == 16.0
        assert energy_profile(np.array([0.5]), 2.0)[0] == pytest.approx(16.0 * math.exp(4.0))


class TestHold:
    def test_hold_after(self, grid):
        series = FourierField.stack([random_field(grid, s) for s in range(5)])
        held = hold_after(series, 2)
        for i in (3, 4):
            np.testing.assert_array_equal(held.at(i).coeffs, series.at(2).coeffs)
        np.testing.assert_array_equal(held.at(1).coeffs, series.at(1).coeffs)


class TestCutoffsAndMollifier:
    def test_partition_of_unity(self):
        times = np.linspace(-0.1, 0.3, 161)
        cutoffs = build_cutoffs(40.0, times)
        assert cutoffs.partition_error() < 1e-12
        assert cutoffs.max_overlap() <= 2

    def test_chi_support(self):
        assert chi(np.array([0.8]))[0] == 0.0
        assert chi(np.array([0.0]))[0] == pytest.approx(1.0)

    def test_time_weights(self):
        w = time_weights(0.01, 2.5e-3)
        assert w.size == 4
        assert w.sum() == pytest.approx(1.0)
        assert time_weights(1e-3, 2.5e-3).tolist() == [1.0]

    def test_mollify_time_keeps_constants(self):
        c = np.ones((10, 2), dtype=np.complex128)
        np.testing.assert_allclose(mollify_time(c, time_weights(0.01, 2.5e-3)), c)


def _shear(times: np.ndarray, x: np.ndarray) -> np.ndarray:
    """(1 + t)(sin x₂, sin x₃, sin x₁) at points x of shape (3, ...)."""
    t = np.reshape(times, np.shape(times) + (1,) * (x.ndim - 1))
    return np.stack([(1.0 + t) * np.sin(x[1]), (1.0 + t) * np.sin(x[2]), (1.0 + t) * np.sin(x[0])], axis=-x.ndim)


def _shear_field(grid: TorusGrid, times: np.ndarray) -> FourierField:
    x = np.stack(np.broadcast_arrays(*grid.coordinates()))
    return FourierField.from_physical(grid, _shear(times, x), Rank.VECTOR)


class TestFlows:
    def test_sampler_is_exact_off_grid(self, grid, rng):
        dt = 0.1
        times = dt * np.arange(9)
        sampler = VelocitySampler(grid, _shear_field(grid, times).coeffs)
        points = rng.uniform(-np.pi, 3 * np.pi, size=(3, 50))
        for s in (0.0, 2.5, 3.3, 8.0):
            np.testing.assert_allclose(sampler.at_time(s, points), _shear(np.array(s * dt), points), atol=1e-12)

    def test_substep_order(self, grid, rng):
        dt = 0.1
        times = dt * np.arange(9)
        sampler = VelocitySampler(grid, _shear_field(grid, times).coeffs)
        start = rng.uniform(0.0, 2 * np.pi, size=(3, 40))

        def rhs(t, y):
            return _shear(np.array(t), y.reshape(3, -1)).ravel()

        exact = solve_ivp(rhs, (0.0, 0.8), start.ravel(), method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1]
        substeps = np.array([1, 2, 4, 8])
        errors = [
            float(np.max(np.abs(trace_back(sampler, start, 0, 8, 8 * m, dt).ravel() - exact))) for m in substeps
        ]
        assert all(e > 0 for e in errors)
        order = -np.polyfit(np.log2(substeps), np.log2(errors), 1)[0]
        assert order >= 3.5, errors
        assert errors[-1] < 1e-8

    def test_constant_velocity_translates(self, grid):
        dt, mu = 0.01, 20.0
        times = dt * np.arange(16)
        U = np.array([0.3, -0.2, 0.1])
        values = np.broadcast_to(U.reshape(1, 3, 1, 1, 1), (times.size, 3) + grid.shape)
        velocity = FourierField.from_physical(grid, values, Rank.VECTOR)
        flows = solve_flows(velocity, build_cutoffs(mu, times), dt, history=0, substeps=2)
        assert flows
        for flow in flows:
            assert flow.anchor_error() == 0.0
            assert flow.periodicity < 1e-12
            for i, n in enumerate(flow.indices):
                shift = -U * (n - flow.anchor_index) * dt
                np.testing.assert_allclose(flow.displacement[i], np.broadcast_to(shift.reshape(3, 1, 1, 1), flow.displacement[i].shape), atol=1e-12)
                np.testing.assert_allclose(flow.jacobian(i), np.broadcast_to(np.eye(3).reshape(3, 3, 1, 1, 1), (3, 3) + grid.shape), atol=1e-12)


class TestCancellation:
    def test_resonant_sum_cancels_constant_stress(self, rng):
        family = build_wave_families("five")[0]
        system = build_gamma_system(family)
        s = rng.standard_normal((3, 3))
        s = 0.25 * system.r0 * (s + s.T) / np.linalg.norm(s + s.T, ord=2)
        rho = 1.0
        shape = (4, 4, 4)
        g = system.g_values(np.eye(3) - s / rho)
        packets = [
            WavePacket(
                a=np.full(shape, math.sqrt(g[p])),
                b=family.frame_b()[2 * p],
                theta=rng.uniform(0, 2 * math.pi, shape),
            )
            for p in range(family.n_pairs)
        ]
        stress = np.broadcast_to(s[:, :, None, None, None], (3, 3) + shape).copy()
        result = cancellation_check(packets, stress, rho)
        assert result.residual < 1e-12
        np.testing.assert_allclose(result.resonant[..., 0, 0, 0], rho * np.eye(3) - s, atol=1e-12)


class TestEnergyReport:
    def test_zero_horizon_is_degenerate(self, grid):
        v = FourierField.stack([random_field(grid, 1, solenoidal=True)] * 2)
        z = FourierField.zeros(grid, Rank.VECTOR, batch=(2,))
        report = energy_gap_report(v, z, np.array([0.0, 0.1]), 2.0, 0.0, trace=1.0, K=4.0)
        assert not report.exhibited
        assert report.threshold == pytest.approx(4.0 * report.u0_energy)

    def test_horizon_must_be_sampled(self, grid):
        v = FourierField.zeros(grid, Rank.VECTOR, batch=(2,))
        with pytest.raises(ValueError):
            energy_gap_report(v, v, np.array([0.0, 0.1]), 2.0, 0.05, trace=1.0)

    def test_growth_exhibits_gap(self, grid):
        base = random_field(grid, 2, solenoidal=True)
        v = FourierField.stack([base, base * 3.0])
        z = FourierField.zeros(grid, Rank.VECTOR, batch=(2,))
        report = energy_gap_report(v, z, np.array([0.0, 0.1]), 2.0, 0.1, trace=0.0, K=4.0)
        assert report.u_energy == pytest.approx(9.0 * report.u0_energy)
        assert report.exhibited and report.gap > 0
        assert len(report.rows) == 2


class TestLedgerStage:
    def test_small_a_is_representable(self):
        stage = ledger_stage(ParameterSet(log2_a=0.0, a=1), 0, 24)
        assert stage.representable
        assert stage.log_scales.log2_lambda == pytest.approx(1.0)

    def test_true_scales_are_not(self):
        stage = ledger_stage(ParameterSet(log2_a=1.0, a=2), 0, 24)
        assert not stage.representable
        assert stage.state is None


@pytest.mark.slow
class TestSurrogateStage:
    def test_identities_hold(self, surrogate_runs):
        run, _ = surrogate_runs
        stage = run.stages[0]
        assert stage.checks["cancellation"] <= 1e-8
        assert stage.checks["w_divergence"] <= 1e-8
        assert stage.checks["partition_of_unity"] < 1e-12
        assert stage.checks["flow_periodicity"] < 1e-10
        assert stage.checks["flow_anchor"] == 0.0
        assert {"A1", "A2", "r0", "energy_growth"} <= stage.ratios.keys()
        assert run.final.stage == 1

    def test_breakdown_has_every_component(self, surrogate_runs):
        stage = surrogate_runs[0].stages[0]
        assert set(stage.breakdown.l2) == set(STRESS_COMPONENTS)

    def test_dropping_a_component_breaks_the_residual(self, surrogate_runs):
        run, dropped = surrogate_runs
        assert dropped.final.provenance["dropped_component"] == "nash"
        assert dropped.stages[0].residual.relative > run.stages[0].residual.relative

    def test_stationary_phase_decay(self):
        fit = stationary_phase_fit(TorusGrid(n=64), [4, 8, 16, 24])
        assert 0.8 <= fit.exponent <= 1.2


def test_unresolved_phase_rejected():
    with pytest.raises(ValueError):
        stationary_phase_fit(TorusGrid(n=16), [8])


class TestResidualRefinement:
    def test_starting_residual_order_in_dt(self):
        steps = np.array([0.01, 0.005, 0.0025])
        rel = []
        for dt in steps:
            config = IterationConfig(n=16, dt=float(dt), horizon=0.02, stages=())
            grid = TorusGrid(n=16)
            tg = make_time_grid(config)
            z = noise_series(None, grid, tg)
            rel.append(residual_check(starting_triple(config.L, grid, tg, z, config.alpha), z).relative)
        order = np.polyfit(np.log2(steps), np.log2(rel), 1)[0]
        assert abs(order - 4.0) <= 0.5, rel

    @pytest.mark.slow
    def test_stage_residual_and_divergence_do_not_depend_on_substeps(self):
        grid = TorusGrid(n=24)
        path = simulate_ou(NoiseSpectrum(amplitude=1e-3), grid, 0.0025, 0.0125, seed=2)
        stages = {}
        for substeps in (1, 2):
            config = IterationConfig(
                n=24, horizon=0.0125, substeps=substeps,
                stages=(StageScales(lam=5, delta=100.0, ell=0.01, mu=40.0),),
            )
            stages[substeps] = run_iteration(config, path).stages[0]
        coarse, fine = stages[1], stages[2]
        for stage in (coarse, fine):
            assert stage.checks["w_divergence"] <= 1e-12
            assert stage.residual.relative <= 1e-6
        assert abs(coarse.residual.relative - fine.residual.relative) <= 1e-3 * fine.residual.relative + 1e-12
