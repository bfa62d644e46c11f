"""
Rational wave-vector families Λ₀, Λ₁ on the unit sphere and their frames.

Directions are integer triples over a common denominator, ordered so that
entries 2p and 2p+1 are the antipodal pair (ξ, −ξ).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np

logger = logging.getLogger(__name__)

# Pair representatives. Each family's six outer products ξ⊗ξ sum to 2·Id.
_LAMBDA0 = ((3, 4, 0), (3, -4, 0), (0, 3, 4), (0, 3, -4), (4, 0, 3), (-4, 0, 3))
_LAMBDA1 = {
    "five": ((4, 3, 0), (4, -3, 0), (0, 4, 3), (0, 4, -3), (3, 0, 4), (-3, 0, 4)),
    "thirteen": ((12, 5, 0), (12, -5, 0), (0, 12, 5), (0, 12, -5), (5, 0, 12), (-5, 0, 12)),
}
_DENOMINATORS = {"five": 5, "thirteen": 13}

_REFERENCE = np.array([0.0, 0.0, 1.0])
_FALLBACK = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class WaveFamily:
    parity: int
    denominator: int
    numerators: tuple[tuple[int, int, int], ...]   # 12 entries, antipodal pairs adjacent
    n0: int
    variant: str = "five"

    @property
    def size(self) -> int:
        return len(self.numerators)

    @property
    def n_pairs(self) -> int:
        return len(self.numerators) // 2

    def directions(self) -> np.ndarray:
        return np.array(self.numerators, dtype=np.float64) / self.denominator

    def representatives(self) -> np.ndarray:
        return self.directions()[0::2]

    def fractions(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        return [tuple(Fraction(c, self.denominator) for c in n) for n in self.numerators]

    def lattice_vectors(self, lam: int) -> np.ndarray:
        """λξ as integers; λ must be a multiple of n0."""
        if lam % self.n0:
            raise ValueError(f"λ={lam} is not a multiple of n0={self.n0}")
        return (np.array(self.numerators, dtype=np.int64) * lam) // self.denominator

    def frame_a(self) -> np.ndarray:
        """A_ξ: normalized projection of e₃ onto ξ^⊥ (e₁ when ξ ∥ e₃)."""
        out = []
        for xi in self.directions():
            ref = _REFERENCE if abs(abs(xi @ _REFERENCE) - 1.0) > 1e-12 else _FALLBACK
            a = ref - (ref @ xi) * xi
            out.append(a / np.linalg.norm(a))
        return np.array(out)

    def frame_b(self) -> np.ndarray:
        """B_ξ = (A_ξ + iξ×A_ξ)/√2."""
        a = self.frame_a()
        return (a + 1j * np.cross(self.directions(), a)) / math.sqrt(2.0)

    def to_json(self) -> dict:
        return {
            "parity": self.parity,
            "variant": self.variant,
            "denominator": self.denominator,
            "numerators": [list(n) for n in self.numerators],
            "n0": self.n0,
            "A": self.frame_a().tolist(),
            "B_real": self.frame_b().real.tolist(),
            "B_imag": self.frame_b().imag.tolist(),
        }


def _with_antipodes(reps) -> tuple[tuple[int, int, int], ...]:
    out = []
    for r in reps:
        out.append(tuple(r))
        out.append(tuple(-c for c in r))
    return tuple(out)


def _least_n0(numerators, denominator: int) -> int:
    dens = [Fraction(c, denominator).denominator for n in numerators for c in n]
    return reduce(lambda x, y: x * y // math.gcd(x, y), dens, 1)


def sym_vector(m) -> list:
    """Sym(3) coordinates (xx, yy, zz, xy, xz, yz)."""
    return [m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2]]


def exact_rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank, ncols = 0, len(m[0]) if m else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / m[rank][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def projector_rows(family: WaveFamily) -> list[list[Fraction]]:
    """Sym(3) coordinates of Id − ξ⊗ξ for each pair representative."""
    rows = []
    for xi in family.fractions()[0::2]:
        m = [[(1 if i == j else 0) - xi[i] * xi[j] for j in range(3)] for i in range(3)]
        rows.append(sym_vector(m))
    return rows


def _build(parity: int, reps, denominator: int, variant: str) -> WaveFamily:
    numerators = _with_antipodes(reps)
    for n in numerators:
        assert sum(c * c for c in n) == denominator**2, f"{n}/{denominator} not on the unit sphere"
    family = WaveFamily(parity, denominator, numerators, _least_n0(numerators, denominator), variant)
    rank = exact_rank(projector_rows(family))
    assert rank == 6, f"family {parity} spans only a {rank}-dimensional subspace of Sym(3)"
    return family


@lru_cache(maxsize=4)
def build_wave_families(variant: str = "five") -> tuple[WaveFamily, WaveFamily]:
    """Λ₀ from (3,4,0)/5-type points, Λ₁ from the chosen variant."""
    if variant not in _LAMBDA1:
        raise ValueError(f"unknown family variant '{variant}' (expected one of {sorted(_LAMBDA1)})")
    f0 = _build(0, _LAMBDA0, 5, "five")
    f1 = _build(1, _LAMBDA1[variant], _DENOMINATORS[variant], variant)
    s0 = {tuple(Fraction(c, f0.denominator) for c in n) for n in f0.numerators}
    s1 = {tuple(Fraction(c, f1.denominator) for c in n) for n in f1.numerators}
    assert not s0 & s1, "wave families overlap"
    logger.debug("Wave families built: n0=(%d, %d) variant=%s", f0.n0, f1.n0, variant)
    return f0, f1


def common_n0(families: tuple[WaveFamily, WaveFamily]) -> int:
    a, b = families[0].n0, families[1].n0
    return a * b // math.gcd(a, b)
