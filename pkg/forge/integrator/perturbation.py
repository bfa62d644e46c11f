"""
Principal and corrector perturbations built from transported Beltrami waves.

For each active cutoff j and direction ξ ∈ Λ_{j mod 2}:
    a_{j,ξ} = χ_j M^{1/2} δ^{1/2} c_R^{1/4} γ_ξ(Id − R̊_ℓ/(M δ c_R^{1/2})),
    w_p = Σ a_{j,ξ} B_ξ e^{iλξ·Φ_j},    w = λ⁻¹ curl Σ a_{j,ξ} B_ξ e^{iλξ·Φ_j},
so w is divergence-free on the grid and w_c = w − w_p. Antipodal directions
share γ, carry conjugate frames and opposite phases; sums run over pair
representatives and take twice the real part.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cutoffs import CutoffFamily
from .flows import FlowMap
from .state import TimeGrid, energy_profile
from ..core.errors import R0Violation
from ..spectral.field import FourierField, Rank, inverse
from ..spectral.norms import c0_norm, derivative_coeffs, time_derivative
from ..spectral.operators import curl
from ..waves.gamma import GammaSystem

logger = logging.getLogger(__name__)

_EYE = np.eye(3).reshape(3, 3, 1, 1, 1)


@dataclass
class WavePacket:
    """a B e^{iθ} for one pair representative; the antipode is its conjugate."""

    a: np.ndarray          # (N, N, N) real
    b: np.ndarray          # (3,) complex
    theta: np.ndarray      # (N, N, N)

    def value(self) -> np.ndarray:
        return self.a * self.b[:, None, None, None] * np.exp(1j * self.theta)


@dataclass
class CancellationResult:
    residual: float            # max |w_p⊗w_p + R̊_ℓ − ρ Id − Σ_non-resonant| / ρ
    resonant: np.ndarray       # Σ_ξ a_ξ² B_ξ⊗B̄_ξ (real, summed over both signs)


def _outer(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x[:, None] * y[None, :]


def resonant_sum(packets: Sequence[WavePacket]) -> np.ndarray:
    out = 0.0
    for p in packets:
        out = out + 2.0 * np.real(_outer(p.b, np.conj(p.b)))[..., None, None, None] * p.a**2
    return out


def cancellation_check(packets: Sequence[WavePacket], stress: np.ndarray, rho: float) -> CancellationResult:
    """w_p⊗w_p + R̊_ℓ − ρ Id against the explicitly assembled non-resonant sum Σ_{ξ+ξ'≠0}.

    stress is physical (3, 3, N, N, N); packets are all active (j, ξ) representatives.
    """
    terms = []
    for p in packets:
        t = p.value()
        terms.extend([t, np.conj(t)])
    total = np.real(sum(terms)) if terms else np.zeros_like(stress[0])
    non_resonant = np.zeros_like(stress)
    for t in terms:
        non_resonant += np.real(_outer(t, total - np.conj(t)))
    residual = _outer(total, total) + stress - rho * _EYE - non_resonant
    err = float(np.max(np.sqrt(np.sum(residual**2, axis=(0, 1))))) / rho
    return CancellationResult(residual=err, resonant=resonant_sum(packets) if packets else np.zeros_like(stress))


@dataclass
class Perturbation:
    w_p: FourierField
    w_c: FourierField
    w: FourierField
    p_osc: FourierField                                   # (|w_p|² − Σ a²)/2
    cancellation: np.ndarray                              # per sample
    r0_ratio: np.ndarray                                  # sup_x |R̊_ℓ|/(M δ c_R^{1/2}) per sample
    coefficient_c0: dict[tuple[int, int], float] = field(default_factory=dict)   # (j, pair) → ‖a‖_{C⁰}
    coefficient_dt: dict[tuple[int, int], float] = field(default_factory=dict)   # (j, pair) → ‖∂_t a‖_{C⁰}
    l_c0: dict[tuple[int, int], float] = field(default_factory=dict)             # (j, pair) → ‖L_{j,ξ}‖_{C⁰}
    corrector_gap: float = 0.0                             # grid w_c against its pointwise formula, relative


def _op_norm(m: np.ndarray) -> np.ndarray:
    """Pointwise operator norm of symmetric (3, 3, ...) samples."""
    eig = np.linalg.eigvalsh(np.moveaxis(m, (0, 1), (-2, -1)))
    return np.max(np.abs(eig), axis=-1)


def build_perturbation(
    stress: FourierField,
    flows: Sequence[FlowMap],
    cutoffs: CutoffFamily,
    systems: tuple[GammaSystem, GammaSystem],
    lam: int,
    delta: float,
    c_R: float,
    L: float,
    time_grid: TimeGrid,
    check: slice = slice(None),
) -> Perturbation:
    """stress is R̊_ℓ as a series on the full time grid; check selects samples where r0 is enforced."""
    grid = stress.grid
    n_t = time_grid.size
    times = time_grid.times
    m_profile = energy_profile(times, L)
    rho = m_profile * delta * np.sqrt(c_R)
    prefactor = np.sqrt(m_profile * delta) * c_R**0.25
    by_j = {f.j: f for f in flows}

    r_phys = stress.physical()
    dr = np.stack([inverse(derivative_coeffs(stress, (l,)), grid.n) for l in range(3)], axis=1)  # (n_t, 3 dir, 3, 3, ...)
    shape = grid.shape
    u = np.zeros((n_t, 3) + shape)
    p_osc = np.zeros((n_t,) + shape)
    formula = np.zeros((n_t, 3) + shape)
    cancellation = np.zeros(n_t)
    r0_ratio = np.zeros(n_t)
    amps: dict[tuple[int, int], list] = {}
    out = Perturbation(
        w_p=None, w_c=None, w=None, p_osc=None, cancellation=cancellation, r0_ratio=r0_ratio,
    )
    checked = np.zeros(n_t, dtype=bool)
    checked[check] = True

    for n in range(n_t):
        r_now = r_phys[n]
        r0_ratio[n] = float(np.max(_op_norm(r_now))) / rho[n]
        packets = []
        for j in cutoffs.active(n):
            system = systems[j % 2]
            if r0_ratio[n] >= system.r0:
                if checked[n]:
                    raise R0Violation(times[n], r0_ratio[n], system.r0)
                logger.warning("r0 ratio %.3g ≥ r0 at t=%.4g outside the checked window", r0_ratio[n], times[n])
            flow = by_j[j]
            i = flow.locate(n)
            phi = flow.position(i)
            jac_t = np.swapaxes(flow.jacobian(i), 0, 1) - _EYE          # DΦᵀ − Id
            chi_val = float(cutoffs.values(j)[n])
            g = system.g_values(np.moveaxis(np.eye(3)[:, :, None, None, None] - r_now / rho[n], (0, 1), (-2, -1)))
            g = np.maximum(g, 0.0)
            gamma_val = np.sqrt(g)
            dirs = system.family.directions()
            frames = system.family.frame_b()
            lmat = system.functional_matrices()
            for p in range(system.family.n_pairs):
                xi, b = dirs[2 * p], frames[2 * p]
                a = chi_val * prefactor[n] * gamma_val[..., p]
                theta = lam * np.einsum("i,i...->...", xi, phi)
                packet = WavePacket(a=a, b=b, theta=theta)
                packets.append(packet)
                phase = np.exp(1j * theta)
                u[n] += 2.0 * np.real(b[:, None, None, None] * a * phase)
                p_osc[n] -= a**2
                # ∇a = χ M^{1/2}δ^{1/2}c_R^{1/4} ∇g / (2γ),  ∇g = −tr(L_p ∇R̊_ℓ)/ρ
                grad_g = -np.einsum("ij,lij...->l...", lmat[p], dr[n]) / rho[n]
                grad_a = chi_val * prefactor[n] * np.divide(grad_g, 2.0 * gamma_val[..., p], where=gamma_val[..., p] > 0, out=np.zeros_like(grad_g))
                shift = np.einsum("ik...,k->i...", jac_t, xi)         # (DΦᵀ − Id)ξ
                vec = grad_a / lam + 1j * a * shift
                cross = np.cross(vec, b[:, None, None, None] * np.ones_like(a), axis=0)
                formula[n] += 2.0 * np.real(cross * phase)
                l_vec = a * b[:, None, None, None] + cross
                key = (j, p)
                out.l_c0[key] = max(out.l_c0.get(key, 0.0), float(np.max(np.sqrt(np.sum(np.abs(l_vec) ** 2, axis=0)))))
                amps.setdefault(key, []).append(a)
        p_osc[n] += 0.5 * np.sum(u[n] ** 2, axis=0)
        if packets:
            cancellation[n] = cancellation_check(packets, r_now, rho[n]).residual

    for key, series in amps.items():
        arr = np.stack(series)
        out.coefficient_c0[key] = float(np.max(np.abs(arr)))
        if arr.shape[0] >= 3:
            out.coefficient_dt[key] = float(np.max(np.abs(time_derivative(arr, time_grid.dt))))

    w_p = FourierField.from_physical(grid, u, Rank.VECTOR)
    w = curl(w_p) * (1.0 / lam)
    w_c = w - w_p
    out.w_p, out.w, out.w_c = w_p, w, w_c
    out.p_osc = FourierField.from_physical(grid, p_osc, Rank.SCALAR)
    scale = max(float(np.max(np.abs(formula))), float(np.max(c0_norm(w_c))), 1e-300)
    out.corrector_gap = float(np.max(np.abs(w_c.physical() - formula))) / scale
    logger.info(
        "Perturbation λ=%d: max cancellation residual %.2e, max r0 ratio %.3g, corrector gap %.2e",
        lam, float(np.max(cancellation)), float(np.max(r0_ratio[check])), out.corrector_gap,
    )
    return out
