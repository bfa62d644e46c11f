"""
Invariant suites for `selftest`, at reduced sizes.

Each suite returns its measured values and raises InvariantError when one
leaves its tolerance.
"""

import logging
import math

import numpy as np

from .registry import suite
from ..core.errors import InvariantError
from ..galerkin.config import GalerkinConfig
from ..galerkin.solver import simulate_path
from ..integrator.config import IterationConfig, StageScales
from ..integrator.iterate import run_iteration
from ..integrator.phase import stationary_phase_fit
from ..integrator.residual import residual_check
from ..integrator.starting import make_time_grid, noise_series, starting_triple
from ..ledger.constraints import check_constraints
from ..ledger.params import ParameterSet, derive_scales, make_parameters
from ..ledger.search import find_min_a
from ..spectral.field import FourierField, Rank
from ..spectral.grid import TorusGrid
from ..spectral.norms import l2_norm
from ..spectral.operators import curl, dealias, div, inverse_divergence, leray_project, remove_mean, traceless
from ..stochastic.ou import simulate_ou
from ..stochastic.spectrum import NoiseSpectrum
from ..stochastic.stopping import stopping_time_TL
from ..waves.beltrami import pair_field
from ..waves.families import build_wave_families
from ..waves.gamma import build_gamma_system

logger = logging.getLogger(__name__)

_SEED = 20240611


def _require(name: str, value: float, tol: float) -> float:
    if not value <= tol:
        raise InvariantError(name, value, tol)
    return value


def _relative(a: FourierField, b: FourierField) -> float:
    scale = max(float(np.max(l2_norm(b))), 1e-300)
    return float(np.max(l2_norm(a - b))) / scale


def random_vector_field(grid: TorusGrid, rng: np.random.Generator) -> FourierField:
    values = rng.standard_normal((3,) + grid.shape)
    return dealias(FourierField.from_physical(grid, values, Rank.VECTOR))


@suite("spectral identities", module="spectral")
def spectral_identities() -> dict:
    grid = TorusGrid(n=16)
    rng = np.random.default_rng(_SEED)
    worst = {"inverse_divergence": 0.0, "leray_idempotent": 0.0, "symmetric_trace_free": 0.0}
    for _ in range(10):
        v = random_vector_field(grid, rng)
        m = inverse_divergence(v)
        worst["inverse_divergence"] = max(worst["inverse_divergence"], _relative(div(m), remove_mean(v)))
        p = leray_project(v)
        worst["leray_idempotent"] = max(worst["leray_idempotent"], _relative(leray_project(p), p))
        asym = m.with_coeffs(np.swapaxes(m.coeffs, -4, -5))
        worst["symmetric_trace_free"] = max(
            worst["symmetric_trace_free"], _relative(asym, m), _relative(traceless(m), m),
        )
    for name, value in worst.items():
        _require(name, value, 1e-10)
    return worst


@suite("beltrami and geometric lemma", module="waves")
def beltrami_identities() -> dict:
    grid = TorusGrid(n=16)
    rng = np.random.default_rng(_SEED)
    out = {"curl_eigen": 0.0, "reconstruction": 0.0}
    for family in build_wave_families("five"):
        for pair in range(family.n_pairs):
            w = pair_field(pair, 5, grid, family, complex(rng.standard_normal(), rng.standard_normal()))
            out["curl_eigen"] = max(out["curl_eigen"], _relative(curl(w), w * 5.0))
        system = build_gamma_system(family)
        for _ in range(200):
            s = rng.standard_normal((3, 3))
            s = 0.5 * (s + s.T)
            r = np.eye(3) + 0.5 * system.r0 * s / np.linalg.norm(s, ord=2)
            recon = system.reconstruct(system.g_values(r))
            out["reconstruction"] = max(out["reconstruction"], float(np.max(np.abs(recon - r))))
            if np.any(system.g_values(r) <= 0):
                raise InvariantError("γ² positive on the r0/2-ball", float(np.min(system.g_values(r))), 0.0)
    _require("curl W = λW", out["curl_eigen"], 1e-10)
    _require("geometric lemma reconstruction", out["reconstruction"], 1e-10)
    return out


@suite("noise path and stopping time", module="stochastic")
def noise_path_suite() -> dict:
    grid = TorusGrid(n=8)
    spectrum = NoiseSpectrum(amplitude=1e-2)
    a = simulate_ou(spectrum, grid, 0.01, 1.5, seed=7)
    b = simulate_ou(spectrum, grid, 0.01, 1.5, seed=7)
    if not np.array_equal(a.z, b.z):
        raise InvariantError("OU path reproducible from its seed", 1.0, 0.0)
    z = a.series()
    div_ratio = float(np.max(l2_norm(div(z)))) / max(float(np.max(l2_norm(z))), 1e-300)
    clock = stopping_time_TL(a, 1.5, 0.01)
    _require("z divergence-free", div_ratio, 1e-12)
    return {"divergence": div_ratio, "T_L": clock.T_L}


@suite("galerkin Beltrami decay", module="galerkin")
def galerkin_decay() -> dict:
    grid = TorusGrid(n=16)
    family = build_wave_families("five")[0]
    lam, alpha, dt, T = 5, 0.25, 1e-3, 0.1
    x0 = pair_field(0, lam, grid, family, 0.3)
    config = GalerkinConfig(
        cutoff=5, dt=dt, T=T, ensemble=1, spectrum=NoiseSpectrum(alpha=alpha), x0=x0,
        grid_n=grid.n, noise=False,
    )
    rec = simulate_path(config, seed=0)
    expected = rec.energy[0] * math.exp(-2.0 * lam ** (2 * alpha) * T)
    rel = abs(rec.energy[-1] - expected) / expected
    _require("Beltrami decay", rel, 10 * dt**2)
    return {"relative_error": rel}


@suite("starting triple residual", module="integrator")
def starting_residual() -> dict:
    config = IterationConfig(n=16, horizon=0.0125, stages=())
    grid = TorusGrid(n=config.n)
    tg = make_time_grid(config)
    z = noise_series(None, grid, tg)
    state = starting_triple(config.L, grid, tg, z, config.alpha)
    rel = residual_check(state, z).relative
    _require("starting triple residual", rel, 1e-6)
    return {"relative_residual": rel}


@suite("one surrogate stage", module="integrator")
def surrogate_stage() -> dict:
    config = IterationConfig(
        n=24, horizon=0.0125,
        stages=(StageScales(lam=5, delta=100.0, ell=0.01, mu=40.0),),
    )
    run = run_iteration(config, None)
    stage = run.stages[0]
    _require("resonant cancellation", stage.checks["cancellation"], 1e-8)
    _require("w divergence-free", stage.checks["w_divergence"], 1e-8)
    return {"cancellation": stage.checks["cancellation"], "residual": stage.residual.relative}


@suite("stationary phase decay", module="integrator")
def phase_decay() -> dict:
    fit = stationary_phase_fit(TorusGrid(n=64), [4, 8, 16, 24])
    if not 0.8 <= fit.exponent <= 1.2:
        raise InvariantError("stationary phase exponent near 1", abs(fit.exponent - 1.0), 0.2)
    return {"exponent": fit.exponent}


@suite("ledger scales and minimal a", module="ledger")
def ledger_suite() -> dict:
    row = derive_scales(ParameterSet(log2_a=1.0, a=2, b=6, c=15), 0)[0]
    _require("log2 λ0 at a = 2", abs(row.log2_lambda - 88.0), 1e-9)
    params = make_parameters()
    found = find_min_a(params, q_max=3)
    if not found.satisfiable:
        raise InvariantError("admissible a exists", 1.0, 0.0)
    report = check_constraints(params.with_a(found.log2_a, found.a), q_max=3)
    if not report.passed:
        raise InvariantError("constraints pass at the minimal a", float(len(report.failures)), 0.0)
    return {"log2_min_a": found.log2_a, "monotone": found.monotone}
