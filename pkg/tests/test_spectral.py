import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from forge.core.errors import RankError
from forge.spectral.dump import read_field, write_field
from forge.spectral.field import FourierField, Rank, resample
from forge.spectral.grid import TorusGrid
from forge.spectral.norms import c0_norm, l2_norm, smoothing_constant, sobolev_norm
from forge.spectral.operators import (
    curl, div, grad, inverse_divergence, leray_project, remove_mean, traceless,
)

from .conftest import random_field


def _rel(a: FourierField, b: FourierField) -> float:
    return float(np.max(l2_norm(a - b))) / max(float(np.max(l2_norm(b))), 1e-300)


class TestTorusGrid:
    @pytest.mark.parametrize("n", [6, 9, 0])
    def test_rejects_small_or_odd(self, n):
        with pytest.raises(ValidationError):
            TorusGrid(n=n)

    def test_shapes(self):
        g = TorusGrid(n=16)
        assert g.shape == (16, 16, 16)
        assert g.spectral_shape == (16, 16, 9)
        assert g.max_wavenumber == 7
        assert g.k_vector().shape == (3, 16, 16, 9)

    def test_half_weights_count_full_lattice(self):
        g = TorusGrid(n=8)
        assert g.half_weights().sum() == 8**3

    def test_mode_index_wraps_negative(self):
        g = TorusGrid(n=8)
        assert g.mode_index((-1, 2, 0)) == (7, 2, 0)
        with pytest.raises(ValueError):
            g.mode_index((0, 0, -1))


class TestFourierField:
    def test_cosine_l2_norm(self, grid):
        x1, _, _ = grid.coordinates()
        f = FourierField.from_physical(grid, np.broadcast_to(np.cos(x1), grid.shape), Rank.SCALAR)
        assert float(l2_norm(f)) == pytest.approx(math.sqrt(0.5), rel=1e-12)
        assert float(c0_norm(f)) == pytest.approx(1.0, rel=1e-12)

    def test_physical_round_trip(self, grid, rng):
        values = rng.standard_normal(grid.shape)
        f = FourierField.from_physical(grid, values, Rank.SCALAR)
        # Nyquist modes are dropped, so compare against the band-limited field
        g = FourierField.from_physical(grid, f.physical(), Rank.SCALAR)
        np.testing.assert_allclose(g.coeffs, f.coeffs, atol=1e-13)

    def test_rank_mismatch_rejected(self, grid):
        with pytest.raises(RankError):
            FourierField(grid, Rank.MATRIX, np.zeros((3,) + grid.spectral_shape))

    def test_combining_ranks_rejected(self, grid):
        v = FourierField.zeros(grid, Rank.VECTOR)
        s = FourierField.zeros(grid, Rank.SCALAR)
        with pytest.raises(RankError):
            v + s

    def test_coefficients_read_only(self, grid):
        f = FourierField.zeros(grid, Rank.SCALAR)
        with pytest.raises(ValueError):
            f.coeffs[0, 0, 0] = 1.0

    def test_batch_scaling(self, grid):
        f = FourierField.stack([random_field(grid, s) for s in range(3)])
        scaled = f * np.array([0.0, 1.0, 2.0])
        assert float(l2_norm(scaled.at(0))) == 0.0
        assert float(l2_norm(scaled.at(2))) == pytest.approx(2.0 * float(l2_norm(f.at(2))))


class TestResample:
    def test_identity_on_same_grid(self, grid):
        f = random_field(grid, 3)
        assert resample(f, grid) is f

    def test_up_then_down_is_exact(self, grid):
        f = random_field(grid, 4, solenoidal=True)
        fine = resample(f, TorusGrid(n=24))
        assert float(l2_norm(fine)) == pytest.approx(float(l2_norm(f)), rel=1e-12)
        assert _rel(resample(fine, grid), f) < 1e-12

    def test_down_drops_high_modes(self):
        fine = TorusGrid(n=24)
        x1, _, _ = fine.coordinates()
        values = np.broadcast_to(np.cos(x1) + np.cos(9 * x1), fine.shape)
        coarse = resample(FourierField.from_physical(fine, values, Rank.SCALAR), TorusGrid(n=8))
        assert float(l2_norm(coarse)) == pytest.approx(math.sqrt(0.5), rel=1e-12)


class TestOperators:
    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_inverse_divergence_identities(self, seed):
        grid = TorusGrid(n=8)
        v = random_field(grid, seed)
        m = inverse_divergence(v)
        assert _rel(div(m), remove_mean(v)) < 1e-10
        asym = m.with_coeffs(np.swapaxes(m.coeffs, -4, -5))
        assert _rel(asym, m) < 1e-10
        assert _rel(traceless(m), m) < 1e-10

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_leray_projection(self, seed):
        grid = TorusGrid(n=8)
        v = random_field(grid, seed)
        p = leray_project(v)
        assert _rel(leray_project(p), p) < 1e-12
        assert float(np.max(l2_norm(div(p)))) <= 1e-10 * max(float(l2_norm(v)), 1.0)

    def test_gradients_are_curl_free(self, grid):
        s = random_field(grid, 5, Rank.SCALAR)
        assert float(l2_norm(curl(grad(s)))) < 1e-10 * float(l2_norm(grad(s)))

    def test_sobolev_norm_of_single_mode(self, grid):
        x1, _, _ = grid.coordinates()
        f = FourierField.from_physical(grid, np.broadcast_to(np.sin(3 * x1), grid.shape), Rank.SCALAR)
        expected = math.sqrt(0.5) * (1 + 9) ** 0.75
        assert float(sobolev_norm(f, 1.5)) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0])
    def test_smoothing_constant_bounded(self, grid, gamma):
        fit = smoothing_constant(grid, 0.25, gamma)
        assert 0.0 < fit.constant <= 1.0
        assert np.all(np.diff(fit.measured) <= 1e-15)

    def test_smoothing_without_derivative(self, grid):
        fit = smoothing_constant(grid, 0.25, 0.0, times=[0.01, 1.0])
        np.testing.assert_allclose(fit.measured, np.exp(-np.array([0.01, 1.0])), rtol=1e-12)
        assert fit.constant == pytest.approx(0.5 * math.exp(-0.01))


class TestDump:
    def test_write_then_read(self, grid, tmp_path):
        f = random_field(grid, 6, Rank.MATRIX)
        raw, side = write_field(tmp_path / "stage_1" / "R_n00000", f, "R", 0.25)
        assert raw.stat().st_size == 9 * 8 * grid.n**3
        g, meta = read_field(tmp_path / "stage_1" / "R_n00000")
        assert meta.N == grid.n and meta.rank == Rank.MATRIX and meta.time == 0.25
        assert _rel(g, f) < 1e-12

    def test_x_varies_fastest(self, tmp_path):
        grid = TorusGrid(n=8)
        x1, _, _ = grid.coordinates()
        f = FourierField.from_physical(grid, np.broadcast_to(np.cos(x1), grid.shape), Rank.SCALAR)
        raw, _ = write_field(tmp_path / "s", f, "s", 0.0)
        values = np.frombuffer(raw.read_bytes(), dtype="<f8")
        np.testing.assert_allclose(values[:8], np.cos(np.arange(8) * 2 * math.pi / 8), atol=1e-12)

    def test_rejects_series(self, grid, tmp_path):
        series = FourierField.zeros(grid, Rank.SCALAR, batch=(2,))
        with pytest.raises(ValueError):
            write_field(tmp_path / "s", series, "s", 0.0)
