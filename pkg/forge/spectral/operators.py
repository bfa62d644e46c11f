"""
Differential and multiplier operators on FourierField.

Every operator is a pure function of its inputs. Wavevector arrays come from
the grid cache and broadcast against the trailing (component, kx, ky, kz) axes.
"""

import logging

import numpy as np

from .field import FourierField, Rank
from .grid import TorusGrid
from ..core.errors import InvariantError, RankError
from ..core.flags import get_flags

logger = logging.getLogger(__name__)


def _require(f: FourierField, *ranks: Rank) -> None:
    if f.rank not in ranks:
        raise RankError(f"expected {'/'.join(r.value for r in ranks)} field, got {f.rank.value}")


def _inverse_k2(grid: TorusGrid) -> np.ndarray:
    kk = grid.k_squared()
    return np.divide(1.0, kk, out=np.zeros_like(kk), where=kk > 0)


# ── Derivatives ──────────────────────────────────────────────────────

def grad(f: FourierField) -> FourierField:
    """Scalar → vector ∂_j f; vector → matrix (∇v)_{ij} = ∂_j v_i."""
    _require(f, Rank.SCALAR, Rank.VECTOR)
    k = f.grid.k_vector()
    if f.rank is Rank.SCALAR:
        return f.with_coeffs(1j * k * f.coeffs[..., None, :, :, :], Rank.VECTOR)
    return f.with_coeffs(1j * f.coeffs[..., :, None, :, :, :] * k, Rank.MATRIX)


def div(f: FourierField) -> FourierField:
    """Vector → scalar; matrix → vector with (div M)_i = Σ_j ∂_j M_ij."""
    _require(f, Rank.VECTOR, Rank.MATRIX)
    k = f.grid.k_vector()
    out = 1j * np.sum(f.coeffs * k, axis=-4)
    return f.with_coeffs(out, Rank.SCALAR if f.rank is Rank.VECTOR else Rank.VECTOR)


def curl(v: FourierField) -> FourierField:
    _require(v, Rank.VECTOR)
    kx, ky, kz = v.grid.k_vector()
    c = v.coeffs
    out = 1j * np.stack([
        ky * c[..., 2, :, :, :] - kz * c[..., 1, :, :, :],
        kz * c[..., 0, :, :, :] - kx * c[..., 2, :, :, :],
        kx * c[..., 1, :, :, :] - ky * c[..., 0, :, :, :],
    ], axis=-4)
    return v.with_coeffs(out)


def mean(f: FourierField) -> np.ndarray:
    """Zero-mode coefficients (the spatial mean of each component)."""
    return np.real(f.coeffs[..., 0, 0, 0])


def remove_mean(f: FourierField) -> FourierField:
    c = np.array(f.coeffs)
    c[..., 0, 0, 0] = 0.0
    return f.with_coeffs(c)


# ── Projections and multipliers ──────────────────────────────────────

def leray_project(v: FourierField) -> FourierField:
    _require(v, Rank.VECTOR)
    k = v.grid.k_vector()
    kdotv = np.sum(k * v.coeffs, axis=-4, keepdims=True)
    return v.with_coeffs(v.coeffs - k * kdotv * _inverse_k2(v.grid))


def frac_laplacian(f: FourierField, alpha: float, power_sign: int = 1) -> FourierField:
    """(−Δ)^{±α}: multiplier |k|^{±2α}, zero mode sent to zero in both directions."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if power_sign not in (1, -1):
        raise ValueError("power_sign must be +1 or -1")
    kk = f.grid.k_squared()
    mult = np.zeros_like(kk)
    np.power(kk, alpha * power_sign, out=mult, where=kk > 0)
    return f.with_coeffs(f.coeffs * mult)


def semigroup_apply(f: FourierField, t: float, alpha: float) -> FourierField:
    """S_α(t) = e^{−t(−Δ)^α}, per mode."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    return f.with_coeffs(f.coeffs * semigroup_multiplier(f.grid, t, alpha))


def semigroup_multiplier(grid: TorusGrid, t: float, alpha: float) -> np.ndarray:
    return np.exp(-t * np.power(grid.k_squared(), alpha))


def inverse_laplacian(f: FourierField) -> FourierField:
    return f.with_coeffs(-f.coeffs * _inverse_k2(f.grid))


def inverse_divergence(v: FourierField) -> FourierField:
    """𝓡: symmetric trace-free M with div M = v − mean(v).

    M = ∇Δ⁻¹v + (∇Δ⁻¹v)ᵀ − ½(Id + ∇∇Δ⁻¹) div Δ⁻¹v.
    """
    _require(v, Rank.VECTOR)
    k = v.grid.k_vector()
    inv = _inverse_k2(v.grid)
    u = -v.coeffs * inv
    u[..., 0, 0, 0] = 0.0
    d = 1j * np.sum(k * u, axis=-4)
    ku = 1j * u[..., :, None, :, :, :] * k
    kk = k[:, None] * k[None, :] * inv
    eye = np.eye(3).reshape(3, 3, 1, 1, 1)
    m = ku + np.swapaxes(ku, -4, -5) - 0.5 * (eye + kk) * d[..., None, None, :, :, :]
    return v.with_coeffs(m, Rank.MATRIX)


def dealias(f: FourierField) -> FourierField:
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask())


# ── Products ─────────────────────────────────────────────────────────

def product_field(grid: TorusGrid, values: np.ndarray, rank: Rank) -> FourierField:
    """Transform a pointwise product back, truncated by the 2/3 rule when enabled."""
    f = FourierField.from_physical(grid, values, rank)
    return dealias(f) if get_flags().dealias else f


def tensor_product(a: FourierField, b: FourierField) -> FourierField:
    _require(a, Rank.VECTOR)
    _require(b, Rank.VECTOR)
    pa = a.physical()
    pb = pa if b is a else b.physical()
    return product_field(a.grid, pa[..., :, None, :, :, :] * pb[..., None, :, :, :, :], Rank.MATRIX)


def traceless(m: FourierField) -> FourierField:
    _require(m, Rank.MATRIX)
    tr = np.trace(m.coeffs, axis1=-5, axis2=-4)
    eye = np.eye(3).reshape(3, 3, 1, 1, 1)
    return m.with_coeffs(m.coeffs - eye * tr[..., None, None, :, :, :] / 3.0)


def trace(m: FourierField) -> FourierField:
    _require(m, Rank.MATRIX)
    return m.with_coeffs(np.trace(m.coeffs, axis1=-5, axis2=-4), Rank.SCALAR)


def inner(f: FourierField, g: FourierField) -> np.ndarray:
    """L² pairing ⟨f, g⟩ = (2π)^{-3}∫ f·g, reduced over components and space."""
    if f.rank != g.rank:
        raise RankError("pairing needs equal ranks")
    w = f.grid.half_weights()
    prod = np.real(f.coeffs * np.conj(g.coeffs)) * w
    ncomp = len(f.rank.component_shape)
    return prod.sum(axis=tuple(range(-3 - ncomp, 0)))


# ── Drift ────────────────────────────────────────────────────────────

def nonlinear_drift(y: FourierField) -> FourierField:
    """−P div(y⊗y)."""
    return -leray_project(div(tensor_product(y, y)))


def f_alpha(y: FourierField, alpha: float, tol: float = 1e-8) -> FourierField:
    """F_α(y) = −P div(y⊗y) − (−Δ)^α y."""
    _require(y, Rank.VECTOR)
    check_divergence_free(y, tol, "f_alpha input")
    return nonlinear_drift(y) - frac_laplacian(y, alpha)


def divergence_ratio(v: FourierField) -> float:
    """‖div v‖_{L²} / ‖∇v‖_{L²}, zero for constant fields."""
    from .norms import l2_norm

    num = float(np.max(l2_norm(div(v))))
    den = float(np.max(l2_norm(grad(v))))
    return 0.0 if den == 0.0 else num / den


def check_divergence_free(v: FourierField, tol: float, name: str) -> float:
    ratio = divergence_ratio(v)
    if ratio > tol:
        raise InvariantError(f"{name} divergence-free", ratio, tol)
    return ratio
