import math

import numpy as np
import pytest
from pydantic import ValidationError

from forge.core.errors import InvariantError
from forge.spectral.grid import TorusGrid
from forge.spectral.norms import l2_norm
from forge.spectral.operators import divergence_ratio
from forge.stochastic.diagnostics import martingale_diagnostics
from forge.stochastic.functionals import (
    SignConvention,
    conventions_disagree,
    functional_gap,
    m_process,
    z_functional,
)
from forge.stochastic.ou import refine_path, simulate_ou
from forge.stochastic.rng import mode_table, shell_representatives, stream_key
from forge.stochastic.spectrum import NoiseSpectrum
from forge.stochastic.stopping import (
    path_holder_quotient, running_holder_quotient, stopping_time_TL, stopping_time_tauL,
)


@pytest.fixture
def small_grid() -> TorusGrid:
    return TorusGrid(n=8)


class TestSpectrum:
    def test_full_lattice_needs_rho_above_three_halves(self):
        with pytest.raises(ValidationError):
            NoiseSpectrum(rho=1.0)

    def test_truncated_lattice_accepts_small_rho(self):
        assert NoiseSpectrum(rho=1.0, shell_cutoff=4).trace() > 0

    def test_alpha_must_stay_below_half(self):
        with pytest.raises(ValidationError):
            NoiseSpectrum(alpha=0.5)

    def test_single_mode_trace(self):
        spec = NoiseSpectrum(amplitude=0.3, support=((1, 0, 0),))
        # ±k, two polarizations each
        assert spec.trace() == pytest.approx(4 * 0.3)

    def test_q_vanishes_off_support_and_at_zero(self):
        spec = NoiseSpectrum(support=((1, 1, 0),))
        q = spec.q(np.array([[0, 0, 0], [1, 1, 0], [-1, -1, 0], [1, 0, 0]]))
        assert q[0] == 0 and q[3] == 0
        assert q[1] == q[2] == pytest.approx(1e-3 * 2.0**-4.5)

    def test_trace_tail_is_small(self):
        spec = NoiseSpectrum()
        assert spec.trace() == pytest.approx(spec.truncated_trace(48), rel=1e-6)


class TestNoiseStreams:
    def test_stream_key_range(self):
        with pytest.raises(ValueError):
            stream_key(-1, 0, 1)
        assert stream_key(5, 0, 0) == 5

    def test_shell_representatives_are_half_of_shell(self):
        reps = shell_representatives(2)
        assert reps.shape[0] == (5**3 - 3**3) // 2
        assert np.all(np.max(np.abs(reps), axis=1) == 2)

    def test_mode_table_respects_band(self, small_grid):
        table = mode_table(small_grid, 10)
        assert table.shells == (1, 2, 3)


class TestOUPath:
    def test_starts_at_zero_and_reproducible(self, small_grid):
        spec = NoiseSpectrum(amplitude=1e-2)
        a = simulate_ou(spec, small_grid, 0.01, 0.2, seed=11)
        b = simulate_ou(spec, small_grid, 0.01, 0.2, seed=11)
        c = simulate_ou(spec, small_grid, 0.01, 0.2, seed=12)
        assert a.n_times == 21
        assert np.all(a.z[0] == 0) and np.all(a.b[0] == 0)
        np.testing.assert_array_equal(a.z, b.z)
        assert not np.array_equal(a.z, c.z)

    def test_divergence_free(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.01, 0.1, seed=3)
        assert divergence_ratio(path.series(slice(1, None))) < 1e-12

    def test_draws_do_not_depend_on_grid_size(self):
        spec = NoiseSpectrum(amplitude=1e-2, shell_cutoff=2)
        a = simulate_ou(spec, TorusGrid(n=8), 0.02, 0.1, seed=4)
        b = simulate_ou(spec, TorusGrid(n=12), 0.02, 0.1, seed=4)
        np.testing.assert_array_equal(a.z, b.z)

    def test_step_must_divide_horizon(self, small_grid):
        with pytest.raises(ValueError):
            simulate_ou(NoiseSpectrum(), small_grid, 0.03, 0.1, seed=0)

    def test_alpha_mismatch(self, small_grid):
        with pytest.raises(ValueError):
            simulate_ou(NoiseSpectrum(alpha=0.25), small_grid, 0.01, 0.1, seed=0, alpha=0.3)

    def test_refinement_keeps_coarse_samples(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.02, 0.1, seed=9)
        fine = refine_path(path)
        assert fine.h == pytest.approx(0.01)
        assert fine.n_times == 2 * path.n_times - 1
        np.testing.assert_array_equal(fine.z[0::2], path.z)
        np.testing.assert_array_equal(fine.b[0::2], path.b)

    def test_zero_amplitude_path_is_zero(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=0.0), small_grid, 0.05, 0.5, seed=1)
        assert float(np.max(l2_norm(path.series()))) == 0.0


class TestStoppingTime:
    def test_zero_noise_runs_to_cap(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=0.0), small_grid, 0.05, 1.5, seed=0)
        clock = stopping_time_TL(path, 1.5, 0.01)
        assert clock.T_L == 1.5
        assert clock.reason == "cap" and clock.index is None

    def test_large_noise_stops_early(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e3), small_grid, 0.05, 1.5, seed=0)
        clock = stopping_time_TL(path, 1.5, 0.01)
        assert 0.0 < clock.T_L < 1.5
        assert clock.reason in ("sobolev", "holder")
        assert clock.bounds["sup_z"] <= clock.bounds["bound"]

    def test_horizon_shorter_than_L(self, small_grid):
        path = simulate_ou(NoiseSpectrum(), small_grid, 0.05, 1.0, seed=0)
        with pytest.raises(ValueError):
            stopping_time_TL(path, 1.5, 0.01)

    def test_L_must_exceed_one(self, small_grid):
        path = simulate_ou(NoiseSpectrum(), small_grid, 0.05, 1.0, seed=0)
        with pytest.raises(ValueError):
            stopping_time_TL(path, 1.0, 0.01)

    def test_running_quotient_of_linear_path(self):
        times = np.arange(21) * 0.1
        q = running_holder_quotient(times[:, None].astype(np.complex128), times, 0.5, 0.1)
        assert q[0] == 0.0
        assert np.all(np.diff(q) >= 0)
        # |t − s|/|t − s|^{1/2} peaks at the unit window
        assert q[-1] == pytest.approx(1.0)

    def test_path_quotient_nondecreasing(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.02, 0.4, seed=2)
        assert np.all(np.diff(path_holder_quotient(path, 0.01)) >= 0)

    def test_bound_breach_raises_under_strict_flag(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e3), small_grid, 0.05, 1.5, seed=0)
        # C_S far below the embedding constant lets the path outrun L^{1/4}
        with pytest.raises(InvariantError):
            stopping_time_TL(path, 1.5, 0.01, C_S=1e-6)

    def test_bound_breach_recorded_when_flag_off(self, small_grid, monkeypatch):
        monkeypatch.setenv("FF_ASSERT_Z_BOUNDS", "false")
        path = simulate_ou(NoiseSpectrum(amplitude=1e3), small_grid, 0.05, 1.5, seed=0)
        clock = stopping_time_TL(path, 1.5, 0.01, C_S=1e-6)
        assert clock.bounds["sup_z"] > clock.bounds["bound"]


class TestPathFunctionals:
    def test_tau_sequence_nondecreasing(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.02, 0.4, seed=5)
        report = stopping_time_tauL(path.series(), path.h, 0.25, 0.01, 1.5, [2, 4, 8], 0.01)
        assert report.nondecreasing()
        assert report.tau_L == report.tau_n[8]
        assert report.censored == (report.tau_L == pytest.approx(0.4))

    def test_sign_conventions_disagree_on_noise(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.02, 0.2, seed=6)
        assert conventions_disagree(path.series(), path.h, 0.25)

    def test_m_of_z_recovers_wiener_path(self, small_grid):
        # a single shear mode: the nonlinearity vanishes, only quadrature error remains
        spec = NoiseSpectrum(amplitude=1.0, support=((1, 0, 0),))
        path = simulate_ou(spec, small_grid, 0.01, 0.5, seed=9)
        m = m_process(path.series(), path.h, 0.25, SignConvention.MARTINGALE)
        b = path.wiener_series()
        assert functional_gap(m, b) < 0.05 * float(np.max(l2_norm(b)))

    def test_default_convention_is_as_printed(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.02, 0.2, seed=6)
        x, h = path.series(), path.h
        m = m_process(x, h, 0.25)
        np.testing.assert_array_equal(m.coeffs, m_process(x, h, 0.25, SignConvention.AS_PRINTED).coeffs)
        assert not np.array_equal(m.coeffs, m_process(x, h, 0.25, SignConvention.MARTINGALE).coeffs)
        np.testing.assert_array_equal(
            z_functional(m, h, 0.25).coeffs, z_functional(m, h, 0.25, SignConvention.AS_PRINTED).coeffs,
        )

    def test_tau_report_uses_martingale_reading(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.02, 0.2, seed=6)
        report = stopping_time_tauL(path.series(), path.h, 0.25, 0.1, 1.5, [4], 0.1)
        assert report.convention is SignConvention.MARTINGALE

    def test_zero_path_functionals_vanish(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=0.0), small_grid, 0.02, 0.2, seed=1)
        z = z_functional(m_process(path.series(), path.h, 0.25), path.h, 0.25)
        assert float(np.max(l2_norm(z))) == 0.0

    def test_martingale_needs_an_ensemble(self, small_grid):
        path = simulate_ou(NoiseSpectrum(amplitude=1e-2), small_grid, 0.02, 0.2, seed=6)
        e = path.series().at(3)
        with pytest.raises(ValueError):
            martingale_diagnostics([path.series()] * 3, 0.02, 0.25, path.spectrum, e, 1, 5)
