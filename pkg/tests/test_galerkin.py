import math

import numpy as np
import pytest
from pydantic import ValidationError

from forge.core.config import get_settings
from forge.galerkin.config import GalerkinConfig
from forge.galerkin.ensemble import member_seed, moment_report, run_ensemble
from forge.galerkin.solver import prepare_initial, simulate_path
from forge.spectral.field import FourierField, Rank
from forge.spectral.grid import TorusGrid
from forge.spectral.norms import l2_norm
from forge.stochastic.ou import simulate_ou
from forge.stochastic.spectrum import NoiseSpectrum
from forge.waves.beltrami import pair_field
from forge.waves.families import build_wave_families


class TestConfig:
    def test_stiffness_guard(self):
        with pytest.raises(ValidationError):
            GalerkinConfig(cutoff=8, dt=1.0)

    def test_grid_must_resolve_products(self):
        with pytest.raises(ValidationError):
            GalerkinConfig(cutoff=4, grid_n=8)

    def test_bias_needs_a_field(self):
        with pytest.raises(ValidationError):
            GalerkinConfig(drift_bias=1.0)

    @pytest.mark.parametrize("cutoff, n", [(1, 8), (4, 14), (5, 16)])
    def test_default_grid(self, cutoff, n):
        assert GalerkinConfig(cutoff=cutoff).grid.n == n

    def test_horizon_must_be_step_multiple(self):
        with pytest.raises(ValueError):
            GalerkinConfig(dt=0.03, T=0.1).n_steps

    def test_truncated_spectrum_takes_smaller_cutoff(self):
        cfg = GalerkinConfig(cutoff=4, spectrum=NoiseSpectrum(shell_cutoff=2))
        assert cfg.truncated_spectrum.shell_cutoff == 2


class TestSolver:
    def test_zero_datum_without_noise_stays_zero(self):
        cfg = GalerkinConfig(cutoff=2, dt=0.01, T=0.05, ensemble=1, noise=False)
        rec = simulate_path(cfg, seed=0)
        assert np.all(rec.energy == 0.0)
        np.testing.assert_allclose(rec.times, np.arange(6) * 0.01)

    def test_beltrami_decays_exactly(self):
        grid = TorusGrid(n=16)
        family = build_wave_families("five")[0]
        lam, alpha, T = 5, 0.25, 0.05
        x0 = pair_field(1, lam, grid, family, 0.4)
        cfg = GalerkinConfig(
            cutoff=5, dt=1e-3, T=T, ensemble=1, spectrum=NoiseSpectrum(alpha=alpha),
            x0=x0, grid_n=16, noise=False,
        )
        rec = simulate_path(cfg, seed=0)
        expected = rec.energy[0] * math.exp(-2.0 * lam ** (2 * alpha) * T)
        assert rec.energy[-1] == pytest.approx(expected, rel=1e-5)

    def test_linear_run_is_the_ou_path(self):
        cfg = GalerkinConfig(
            cutoff=3, dt=0.01, T=0.1, ensemble=1, spectrum=NoiseSpectrum(amplitude=1e-2), nonlinear=False,
            store_fields=True,
        )
        rec = simulate_path(cfg, seed=5)
        path = simulate_ou(cfg.truncated_spectrum, cfg.grid, cfg.dt, cfg.T, seed=5)
        np.testing.assert_array_equal(rec.fields.coeffs, path.series().coeffs)

    def test_x0_must_share_the_grid(self):
        x0 = FourierField.zeros(TorusGrid(n=8), Rank.VECTOR)
        cfg = GalerkinConfig(cutoff=4, x0=x0)
        with pytest.raises(ValueError):
            prepare_initial(cfg)

    def test_x0_projected_onto_galerkin_space(self):
        grid = TorusGrid(n=16)
        values = np.random.default_rng(0).standard_normal((3,) + grid.shape)
        x0 = FourierField.from_physical(grid, values, Rank.VECTOR)
        cfg = GalerkinConfig(cutoff=5, grid_n=16, x0=x0)
        projected = prepare_initial(cfg)
        assert float(l2_norm(projected)) < float(l2_norm(x0))

    def test_blow_up_aborts(self):
        from forge.core.errors import NumericalAbort

        cfg = GalerkinConfig(
            cutoff=2, dt=0.01, T=0.05, ensemble=1, spectrum=NoiseSpectrum(amplitude=1.0), energy_cap=1e-12,
        )
        with pytest.raises(NumericalAbort):
            simulate_path(cfg, seed=0)


class TestEnsemble:
    def test_member_seeds(self):
        seeds = [member_seed(3, m) for m in range(8)]
        assert len(set(seeds)) == 8
        assert seeds == [member_seed(3, m) for m in range(8)]
        assert member_seed(4, 0) != seeds[0]

    def test_thread_count_does_not_change_statistics(self, monkeypatch):
        cfg = GalerkinConfig(
            cutoff=2, dt=0.01, T=0.05, ensemble=8, spectrum=NoiseSpectrum(amplitude=1e-2), store_fields=True,
        )
        runs = {}
        for threads in ("1", "8"):
            monkeypatch.setenv("FORGE_THREADS", threads)
            get_settings.cache_clear()
            runs[threads] = run_ensemble(cfg, keep_paths=True, q_list=(1.0, 2.0))
        (serial, serial_paths), (parallel, parallel_paths) = runs["1"], runs["8"]
        for name in ("mean_energy", "se", "se_half", "mean_dissipation", "identity_residual", "identity_se"):
            np.testing.assert_array_equal(getattr(parallel, name), getattr(serial, name), err_msg=name)
        for q in (1.0, 2.0):
            np.testing.assert_array_equal(parallel.moments[q], serial.moments[q])
        for a, b in zip(serial_paths, parallel_paths):
            np.testing.assert_array_equal(a.fields.coeffs, b.fields.coeffs)

    def test_single_member_has_zero_se(self):
        cfg = GalerkinConfig(cutoff=2, dt=0.01, T=0.05, ensemble=1)
        stats, records = run_ensemble(cfg)
        assert records == []
        assert np.all(stats.se == 0)

    @pytest.mark.slow
    def test_energy_identity_and_inequality(self):
        cfg = GalerkinConfig(
            cutoff=3, dt=0.005, T=0.2, ensemble=64, seed=1, spectrum=NoiseSpectrum(amplitude=0.1),
        )
        stats, _ = run_ensemble(cfg)
        assert stats.identity_holds(n_se=4.0)
        assert stats.inequality_holds()
        assert stats.truncated_trace <= stats.full_trace

    @pytest.mark.slow
    def test_moment_table_respected(self):
        grid_cfg = GalerkinConfig(cutoff=5, dt=0.005, T=0.05, ensemble=16, spectrum=NoiseSpectrum(amplitude=0.1))
        family = build_wave_families("five")[0]
        data = []
        for amp in (0.1, 0.2):
            x0 = pair_field(0, 5, grid_cfg.grid, family, amp)
            _, records = run_ensemble(grid_cfg.model_copy(update={"x0": x0}), keep_paths=True)
            data.append((float(l2_norm(x0)), records))
        report = moment_report(data, (1.0, 2.0))
        assert report.respected()
        assert report.x0_norms[1] == pytest.approx(2 * report.x0_norms[0])

    def test_moment_report_needs_a_datum(self):
        with pytest.raises(ValueError):
            moment_report([], (1.0,))
