from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from forge.core.errors import DomainError
from forge.spectral.grid import TorusGrid
from forge.spectral.norms import l2_norm
from forge.spectral.operators import curl, div
from forge.waves.beltrami import beltrami_field, pair_field, waves_payload
from forge.waves.families import build_wave_families, common_n0
from forge.waves.gamma import amplitude_derivative_bounds, build_gamma_system, gamma


@pytest.fixture(scope="module")
def families():
    return build_wave_families("five")


@pytest.fixture(scope="module")
def systems(families):
    return tuple(build_gamma_system(f) for f in families)


class TestFamilies:
    @pytest.mark.parametrize("variant, n0", [("five", 5), ("thirteen", 65)])
    def test_common_n0(self, variant, n0):
        assert common_n0(build_wave_families(variant)) == n0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            build_wave_families("seven")

    def test_directions_unit_and_antipodal(self, families):
        for fam in families:
            d = fam.directions()
            assert fam.size == 12
            np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-15)
            np.testing.assert_array_equal(d[0::2], -d[1::2])

    def test_outer_products_sum_to_twice_identity(self, families):
        for fam in families:
            total = [[Fraction(0)] * 3 for _ in range(3)]
            for xi in fam.fractions()[0::2]:
                for i in range(3):
                    for j in range(3):
                        total[i][j] += xi[i] * xi[j]
            assert total == [[Fraction(2 if i == j else 0) for j in range(3)] for i in range(3)]

    def test_families_disjoint(self, families):
        f0, f1 = families
        assert not set(map(tuple, f0.fractions())) & set(map(tuple, f1.fractions()))

    def test_frame_b_is_eigenvector(self, families):
        for fam in families:
            xi, b = fam.directions(), fam.frame_b()
            # iξ × B = B
            np.testing.assert_allclose(1j * np.cross(xi, b), b, atol=1e-14)
            np.testing.assert_allclose(np.sum(xi * b, axis=1), 0.0, atol=1e-14)


class TestBeltrami:
    def test_curl_eigenfield(self, families, rng):
        grid = TorusGrid(n=16)
        for fam in families[:1]:
            for pair in range(fam.n_pairs):
                a = complex(rng.standard_normal(), rng.standard_normal())
                w = pair_field(pair, 5, grid, fam, a)
                assert float(l2_norm(w)) > 0
                assert float(l2_norm(curl(w) - w * 5.0)) < 1e-10 * float(l2_norm(w))
                assert float(l2_norm(div(w))) < 1e-12

    def test_lambda_must_be_multiple_of_n0(self, families):
        with pytest.raises(ValueError):
            pair_field(0, 3, TorusGrid(n=16), families[0])

    def test_lambda_beyond_band(self, families):
        with pytest.raises(ValueError):
            pair_field(0, 10, TorusGrid(n=16), families[0])

    def test_rejects_non_conjugate_pair(self, families):
        amps = np.zeros(12, dtype=np.complex128)
        amps[0] = 1.0
        amps[1] = 2.0
        with pytest.raises(ValueError):
            beltrami_field(amps, 5, TorusGrid(n=16), families[0])

    def test_payload_keys(self):
        payload = waves_payload("five")
        assert {"provenance", "family0", "family1"} <= payload.keys()
        assert payload["family0"]["n0"] == 5
        assert payload["family1"]["r0"] > 0


class TestGeometricLemma:
    def test_identity_gives_quarter(self, systems):
        for system in systems:
            np.testing.assert_allclose(system.g_values(np.eye(3)), 0.25, atol=1e-15)

    def test_reconstruction_on_the_ball(self, systems, rng):
        for system in systems:
            for _ in range(50):
                s = rng.standard_normal((3, 3))
                s = 0.5 * (s + s.T)
                r = np.eye(3) + 0.5 * system.r0 * s / np.linalg.norm(s, ord=2)
                g = system.g_values(r)
                assert np.all(g > 0)
                np.testing.assert_allclose(system.reconstruct(g), r, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(s=arrays(np.float64, (3, 3), elements=st.floats(-1.0, 1.0)))
    def test_reconstruction_property(self, systems, s):
        s = 0.5 * (s + s.T)
        norm = np.linalg.norm(s, ord=2)
        assume(norm > 1e-6)
        system = systems[0]
        r = np.eye(3) + system.r0 * s / norm
        assert np.all(system.g_values(r) > 0)
        np.testing.assert_allclose(system.reconstruct(system.g_values(r)), r, atol=1e-12)

    def test_gamma_outside_ball(self, systems):
        system = systems[0]
        r = np.eye(3) * (1.0 + 2.0 * system.r0)
        with pytest.raises(DomainError):
            gamma(r, system, 0)

    def test_gamma_on_antipodes_agrees(self, systems):
        system = systems[1]
        assert gamma(np.eye(3), system, 4) == gamma(np.eye(3), system, 5) == pytest.approx(0.5)

    def test_constants_positive(self, systems):
        for system in systems:
            assert 0 < system.r0 < 1
            assert system.D > 1

    def test_derivative_bounds_dominate_D(self, systems):
        for system in systems:
            bounds = amplitude_derivative_bounds(system)
            assert bounds.shape == (system.n_derivatives + 1,)
            assert bounds[0] >= 0.5
            assert np.all(bounds > 0)
            assert system.D <= 2 * system.family.size * bounds.sum() * (1 + 1e-12)

    def test_sampled_D_sits_below_the_bound(self, systems):
        for system in systems:
            assert system.family.size <= system.D_sampled <= system.D * (1 + 1e-9)
            payload = system.to_json()
            assert payload["D_sampled"] == system.D_sampled
            assert payload["D"] == system.D
