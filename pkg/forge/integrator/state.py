"""
Iteration state: (v_q, p_q, R̊_q) sampled on a padded uniform time grid.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import StageScales
from ..core.errors import InvariantError
from ..spectral.field import FourierField, Rank
from ..spectral.grid import TorusGrid
from ..spectral.norms import c0_norm, l2_norm
from ..spectral.operators import divergence_ratio, traceless

logger = logging.getLogger(__name__)

STRESS_COMPONENTS = ("transport", "oscillation", "corrector", "nash", "dissipation", "z_error", "commutator")


@dataclass(frozen=True)
class TimeGrid:
    """t_n = (n − history)·dt for n = 0..size−1; [0, horizon] is the requested window."""

    dt: float
    history: int
    steps: int
    post: int

    @property
    def size(self) -> int:
        return self.history + self.steps + 1 + self.post

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.size) - self.history) * self.dt

    @property
    def horizon(self) -> float:
        return self.steps * self.dt

    def index(self, t: float) -> int:
        return self.history + int(round(t / self.dt))

    @property
    def window(self) -> slice:
        return slice(self.history, self.history + self.steps + 1)


@dataclass(frozen=True)
class IterationState:
    stage: int
    grid: TorusGrid
    time_grid: TimeGrid
    L: float
    alpha: float
    v: FourierField           # vector series
    p: FourierField           # scalar series
    stress: FourierField      # matrix series, symmetric trace-free
    scales: Optional[StageScales] = None
    valid: slice = slice(None)                  # samples where the state is exact
    provenance: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.time_grid.times

    def energy_profile(self) -> np.ndarray:
        return energy_profile(self.times, self.L)

    def window_times(self) -> np.ndarray:
        return self.times[self.valid]

    def with_provenance(self, **items) -> "IterationState":
        return replace(self, provenance={**self.provenance, **items})


def hold_after(f: FourierField, index: int) -> FourierField:
    """Series held constant at sample index from there on."""
    c = np.array(f.coeffs)
    c[index + 1:] = c[index]
    return f.with_coeffs(c)


def hold_state(state: IterationState, index: int) -> IterationState:
    """Constant extension past sample index; the state is exact only up to it."""
    stop = state.valid.stop if state.valid.stop is not None else state.time_grid.size
    return replace(
        state,
        v=hold_after(state.v, index),
        p=hold_after(state.p, index),
        stress=hold_after(state.stress, index),
        valid=slice(state.valid.start, min(stop, index + 1)),
        provenance={**state.provenance, "held_after": float(state.times[index])},
    )


def energy_profile(t: np.ndarray, L: float) -> np.ndarray:
    """M(t) = L⁴e^{4Lt}."""
    return L**4 * np.exp(4.0 * L * np.asarray(t, dtype=np.float64))


def check_state(state: IterationState, tol: float = 1e-10) -> dict:
    """Divergence-free v and symmetric trace-free stress at every valid time."""
    v = state.v.at(state.valid)
    r = state.stress.at(state.valid)
    div_ratio = divergence_ratio(v)
    c = np.asarray(r.coeffs)
    scale = max(float(np.max(l2_norm(r))), 1e-300)
    asym = float(np.max(l2_norm(r.with_coeffs(c - np.swapaxes(c, -4, -5))))) / scale
    trace_part = float(np.max(l2_norm(r - traceless(r)))) / scale
    for name, value in (("v divergence", div_ratio), ("stress symmetry", asym), ("stress trace", trace_part)):
        if value > tol:
            raise InvariantError(f"stage {state.stage} {name}", value, tol)
    return {"divergence": div_ratio, "asymmetry": asym, "trace": trace_part}


@dataclass
class StressBreakdown:
    """Seven components of R̊_{q+1}; norms always kept, fields only when requested."""

    times: np.ndarray
    c0: dict[str, np.ndarray] = field(default_factory=dict)
    l2: dict[str, np.ndarray] = field(default_factory=dict)
    fields: dict[str, FourierField] = field(default_factory=dict)
    sum_mismatch: float = 0.0      # max |Σ components − R̊_{q+1}| relative, over kept times

    def record(self, name: str, component: FourierField, index: int):
        self.c0.setdefault(name, np.zeros(self.times.size))[index] = float(c0_norm(component))
        self.l2.setdefault(name, np.zeros(self.times.size))[index] = float(l2_norm(component))

    def rows(self, window: slice = slice(None)) -> list[list]:
        out = []
        for i in range(self.times.size)[window]:
            for name in STRESS_COMPONENTS:
                out.append([self.times[i], name, self.c0[name][i], self.l2[name][i]])
        return out

    def total_field(self) -> FourierField:
        parts = [self.fields[name] for name in STRESS_COMPONENTS]
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        return total


def stack_series(grid: TorusGrid, rank: Rank, slices: list[np.ndarray]) -> FourierField:
    return FourierField(grid, rank, np.stack(slices))
