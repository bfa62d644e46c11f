"""
Space-time mollification of a state and the commutator stress.

The space mollifier is a radial C_c^∞ bump of radius ℓ, applied through its
Fourier transform. The time mollifier is causal: a bump supported on [0, ℓ],
applied as an FIR filter over past samples.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter
from scipy.special import roots_legendre

from .state import IterationState
from ..spectral.field import FourierField
from ..spectral.operators import tensor_product, trace, traceless

logger = logging.getLogger(__name__)

_QUADRATURE_NODES = 96


def bump(s: np.ndarray) -> np.ndarray:
    """exp(−1/(1−s²)) on (−1, 1), zero outside."""
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@lru_cache(maxsize=4)
def _radial_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    r = 0.5 * (x + 1.0)
    return r, 0.5 * w


def mollifier_transform(kappa: np.ndarray) -> np.ndarray:
    """φ̂(κ) = ∫φ(y)e^{−iκ·y}dy for the unit-mass radial bump of radius one."""
    r, w = _radial_nodes(_QUADRATURE_NODES)
    profile = bump(r) * r**2 * w
    kappa = np.asarray(kappa, dtype=np.float64)
    kr = kappa[..., None] * r
    return np.sum(profile * np.sinc(kr / math.pi), axis=-1) / np.sum(profile)


def space_multiplier(grid, ell: float) -> np.ndarray:
    return mollifier_transform(ell * np.sqrt(grid.k_squared()))


def time_weights(ell: float, dt: float) -> np.ndarray:
    """Causal FIR weights: bump on (0, ℓ) sampled at midpoints, unit sum."""
    m = max(1, int(round(ell / dt)))
    if m == 1:
        logger.warning("time mollifier under-resolved (ℓ=%.3g, dt=%.3g); using the identity", ell, dt)
        return np.ones(1)
    w = bump(2.0 * (np.arange(m) + 0.5) / m - 1.0)
    return w / w.sum()


def mollify_time(coeffs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Σ_m w_m f[n−m] along axis 0, holding the first sample for n − m < 0."""
    m = weights.size
    if m == 1:
        return np.array(coeffs)
    head = np.repeat(coeffs[:1], m - 1, axis=0)
    extended = np.concatenate([head, coeffs])
    out = lfilter(weights, [1.0], extended, axis=0)
    return out[m - 1:]


def mollify_field(f: FourierField, ell: float, dt: float) -> FourierField:
    """(f *_x φ_ℓ) *_t φ_ℓ over the batch (time) axis."""
    c = f.coeffs * space_multiplier(f.grid, ell)
    return f.with_coeffs(mollify_time(c, time_weights(ell, dt)))


@dataclass(frozen=True)
class Mollified:
    v: FourierField           # v_ℓ
    z: FourierField           # z_ℓ
    stress: FourierField      # R̊_ℓ
    commutator: FourierField  # R_com
    p: FourierField           # p_ℓ
    ell: float
    lag: int                  # samples consumed by the causal filter


def mollify_state(state: IterationState, z: FourierField, ell: float) -> Mollified:
    """v_ℓ, z_ℓ, R̊_ℓ and R_com = u_ℓ⊗̊u_ℓ − (u⊗̊u)_ℓ, p_ℓ = (p_q)_ℓ − ⅓(|u_ℓ|² − (|u|²)_ℓ), u = v_q + z."""
    dt = state.time_grid.dt
    if ell < state.grid.spacing:
        logger.warning("space mollifier under-resolved: ℓ=%.3g < grid spacing %.3g", ell, state.grid.spacing)
    u = state.v + z
    uu = tensor_product(u, u)
    v_l = mollify_field(state.v, ell, dt)
    z_l = mollify_field(z, ell, dt)
    u_l = v_l + z_l
    ulul = tensor_product(u_l, u_l)
    uu_l = mollify_field(uu, ell, dt)
    commutator = traceless(ulul) - traceless(uu_l)
    p_l = mollify_field(state.p, ell, dt) - (trace(ulul) - trace(uu_l)) * (1.0 / 3.0)
    lag = time_weights(ell, dt).size
    logger.info("Mollified stage %d: ℓ=%.3g (%d-sample causal kernel)", state.stage, ell, lag)
    return Mollified(
        v=v_l,
        z=z_l,
        stress=mollify_field(state.stress, ell, dt),
        commutator=commutator,
        p=p_l,
        ell=ell,
        lag=lag,
    )
