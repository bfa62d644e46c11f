"""
Geometric lemma: R = Σ_pairs γ_ξ(R)² (Id − ξ⊗ξ) near Id.

g_ξ = γ_ξ² is the exact rational solution of the 6×6 linear system on Sym(3),
so γ_ξ = √g_ξ is smooth wherever g_ξ > 0. The certified radius r0 and the
constant D are computed once per family.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .families import WaveFamily, projector_rows
from ..core.errors import DomainError

logger = logging.getLogger(__name__)

_SYM_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class GammaSystem:
    parity: int
    family: WaveFamily
    inverse_exact: tuple[tuple[Fraction, ...], ...]   # pair p, Sym(3) coordinate c
    r0: float
    D: float
    D_sampled: float                                   # D with suprema over sampled points and directions
    margin: float
    n_derivatives: int
    directions: np.ndarray = field(repr=False, compare=False, default=None)  # unit op-norm directions used by the certificate

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.inverse_exact])

    def functional_matrices(self) -> np.ndarray:
        """Symmetric L_p with g_p(R) = tr(L_p R)."""
        return _functional_matrices(self.coefficients)

    def g_values(self, r: np.ndarray) -> np.ndarray:
        """g_p(R) for R of shape (..., 3, 3); result (..., n_pairs)."""
        return np.einsum("pij,...ij->...p", self.functional_matrices(), r)

    def gamma_values(self, r: np.ndarray) -> np.ndarray:
        return np.sqrt(self.g_values(r))

    def reconstruct(self, g: np.ndarray) -> np.ndarray:
        """Σ_p g_p (Id − ξ_p⊗ξ_p)."""
        xi = self.family.representatives()
        proj = np.eye(3) - xi[:, :, None] * xi[:, None, :]
        return np.einsum("...p,pij->...ij", g, proj)

    def to_json(self) -> dict:
        return {
            "parity": self.parity,
            "g_functionals": [[str(c) for c in row] for row in self.inverse_exact],
            "r0": self.r0,
            "D": self.D,
            "D_sampled": self.D_sampled,
            "margin": self.margin,
            "n_derivatives": self.n_derivatives,
        }


def _functional_matrices(coef: np.ndarray) -> np.ndarray:
    out = np.zeros((coef.shape[0], 3, 3))
    for c, (i, j) in enumerate(_SYM_INDEX):
        if i == j:
            out[:, i, i] = coef[:, c]
        else:
            out[:, i, j] = out[:, j, i] = coef[:, c] / 2.0
    return out


def _exact_inverse(rows: list[list[Fraction]]) -> tuple[tuple[Fraction, ...], ...]:
    """Inverse of the matrix whose columns are the given Sym(3) vectors."""
    n = len(rows)
    a = [[rows[col][r] for col in range(n)] for r in range(n)]
    aug = [a[r] + [Fraction(int(r == c)) for c in range(n)] for r in range(n)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def _test_directions(lmat: np.ndarray, n_random: int, seed: int) -> np.ndarray:
    """Unit operator-norm symmetric directions: the per-pair extremals plus random ones."""
    dirs = []
    for lp in lmat:
        w, u = np.linalg.eigh(lp)
        dirs.append(-(u * np.sign(w)) @ u.T)
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n_random, 3, 3))
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    m /= np.linalg.norm(m, ord=2, axis=(-2, -1))[:, None, None]
    return np.concatenate([np.array(dirs), m])


def _certificate(coef_l: np.ndarray, directions: np.ndarray, r: float, margin: float) -> bool:
    g = np.einsum("pij,sij->sp", coef_l, np.eye(3) + r * directions)
    return bool(np.min(g) >= margin)


def certify_r0(
    family: WaveFamily,
    margin: float = 1e-2,
    n_random: int = 4096,
    seed: int = 20240611,
    tol: float = 1e-6,
) -> float:
    """Largest r (to tol) keeping min g ≥ margin on the sampled r-ball, halved."""
    lmat = _functional_matrices(np.array([[float(c) for c in row] for row in _exact_inverse(projector_rows(family))]))
    directions = _test_directions(lmat, n_random, seed)
    lo, hi = 0.0, 1.0
    while _certificate(lmat, directions, hi, margin):
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _certificate(lmat, directions, mid, margin):
            lo = mid
        else:
            hi = mid
    return 0.5 * lo


def certificate_holds(system: GammaSystem, r: float) -> bool:
    return _certificate(system.functional_matrices(), system.directions, r, system.margin)


def _order_bounds(system_l: np.ndarray, r0: float, n_derivatives: int) -> np.ndarray:
    """|c_n| ‖ℓ_p‖_*^n g_min^{1/2−n} per pair p and order 1 ≤ n ≤ N; order 0 is √g_max.

    c_n = Π_{m<n}(½ − m) are the Taylor factors of √·; ‖·‖_* is the nuclear norm,
    dual to the operator norm on Sym(3).
    """
    out = np.empty((len(system_l), n_derivatives + 1))
    for p, lp in enumerate(system_l):
        nuc = float(np.sum(np.abs(np.linalg.eigvalsh(lp))))
        g_min = float(np.trace(lp)) - r0 * nuc
        out[p, 0] = math.sqrt(float(np.trace(lp)) + r0 * nuc)
        c_n = 0.5
        for n in range(1, n_derivatives + 1):
            out[p, n] = abs(c_n) * nuc**n * g_min ** (0.5 - n)
            c_n *= 0.5 - n
    return out


def derivative_constant(system_l: np.ndarray, r0: float, n_derivatives: int, n_directions: int) -> float:
    """2|Λ|·max_p Σ_{n ≤ N} (order bound), the C^N norm of √g on the r0-ball."""
    return 2.0 * n_directions * float(np.max(np.sum(_order_bounds(system_l, r0, n_derivatives), axis=1)))


def sampled_derivative_constant(
    system_l: np.ndarray,
    r0: float,
    n_derivatives: int,
    n_directions: int,
    directions: np.ndarray,
    n_samples: int = 2048,
    seed: int = 20240611,
) -> float:
    """derivative_constant with the suprema taken over sampled points of the r0-ball and sampled directions.

    g is linear in R, so the n-th derivative of √g along H is c_n ℓ_p(H)^n g^{1/2−n} exactly.
    """
    rng = np.random.default_rng(seed)
    radii = r0 * rng.uniform(0.0, 1.0, n_samples)
    radii[0] = 0.0
    picks = rng.integers(0, len(directions), n_samples)
    points = np.concatenate([
        np.eye(3) + radii[:, None, None] * directions[picks],
        np.eye(3) + r0 * directions[: len(system_l)],
    ])
    g = np.einsum("pij,sij->sp", system_l, points)
    if np.min(g) <= 0:
        raise ValueError(f"g vanishes on the sampled r0-ball (min {np.min(g):.3g})")
    slope = np.max(np.abs(np.einsum("pij,dij->dp", system_l, directions)), axis=0)
    orders = [np.sqrt(np.max(g, axis=0))]
    c_n = 0.5
    for n in range(1, n_derivatives + 1):
        orders.append(abs(c_n) * slope**n * np.min(g, axis=0) ** (0.5 - n))
        c_n *= 0.5 - n
    return 2.0 * n_directions * float(np.max(np.sum(orders, axis=0)))


def amplitude_derivative_bounds(system: GammaSystem, n_derivatives: int | None = None) -> np.ndarray:
    """sup over the r0-ball of the n-th derivative of γ, per order n, worst pair."""
    n = system.n_derivatives if n_derivatives is None else n_derivatives
    return np.max(_order_bounds(system.functional_matrices(), system.r0, n), axis=0)


@lru_cache(maxsize=8)
def build_gamma_system(family: WaveFamily, n_derivatives: int = 9, margin: float = 1e-2) -> GammaSystem:
    inv = _exact_inverse(projector_rows(family))
    at_id = [sum(row[:3]) for row in inv]
    assert all(v == Fraction(1, 4) for v in at_id), f"g(Id) = {at_id}, expected 1/4"
    coef = np.array([[float(c) for c in row] for row in inv])
    lmat = _functional_matrices(coef)
    r0 = certify_r0(family, margin=margin)
    D = derivative_constant(lmat, r0, n_derivatives, family.size)
    directions = _test_directions(lmat, 4096, 20240611)
    D_sampled = sampled_derivative_constant(lmat, r0, n_derivatives, family.size, directions)
    logger.info(
        "Gamma system parity=%d: r0=%.6g D=%.6g (sampled %.6g, N0=%d)", family.parity, r0, D, D_sampled, n_derivatives,
    )
    return GammaSystem(
        parity=family.parity,
        family=family,
        inverse_exact=inv,
        r0=r0,
        D=D,
        D_sampled=D_sampled,
        margin=margin,
        n_derivatives=n_derivatives,
        directions=directions,
    )


def gamma(r: np.ndarray, system: GammaSystem, xi_index: int) -> float:
    """γ_ξ(R) for direction index ξ in 0..11; raises DomainError outside the r0-ball."""
    r = np.asarray(r, dtype=np.float64)
    dist = float(np.linalg.norm(r - np.eye(3), ord=2))
    if dist > system.r0:
        raise DomainError(dist, system.r0)
    return math.sqrt(float(system.g_values(r)[xi_index // 2]))
