"""
Transported phases: ∂_tΦ_j + (v_ℓ+z_ℓ)·∇Φ_j = 0, Φ_j(j/μ, x) = x.

Φ_j(t, x) is the anchor-time foot of the characteristic through (t, x): every grid
point is integrated with RK4 straight back to j/μ. The velocity is evaluated at the
departure points by exact summation of its Fourier series, and its time dependence
is cubic Lagrange between samples, applied to the coefficients. Only the periodic
part D = Φ − x is stored.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.fft import fftfreq

from .cutoffs import CutoffFamily
from ..spectral.field import FourierField, Rank, forward
from ..spectral.grid import TorusGrid
from ..spectral.norms import c0_norm, derivative_magnitude
from ..spectral.operators import grad

logger = logging.getLogger(__name__)

_CHUNK = 2048


class VelocitySampler:
    """Time-sampled vector field evaluated at arbitrary points through its Fourier series."""

    def __init__(self, grid: TorusGrid, coeffs: np.ndarray):
        n = grid.n
        coeffs = np.asarray(coeffs)                      # (n_t, 3, N, N, Nh)
        magnitude = np.abs(coeffs)
        live = magnitude > 1e-15 * max(float(magnitude.max(initial=0.0)), 1e-300)
        rows = [np.nonzero(np.any(live, axis=tuple(a for a in range(live.ndim) if a != axis)))[0] for axis in (2, 3, 4)]
        rows = [r if r.size else np.zeros(1, dtype=int) for r in rows]
        self.grid = grid
        self.coeffs = coeffs[np.ix_(np.arange(coeffs.shape[0]), np.arange(3), *rows)]
        full = fftfreq(n, 1.0 / n)
        self.k1 = full[rows[0]]
        self.k2 = full[rows[1]]
        self.k3 = np.arange(n // 2 + 1, dtype=np.float64)[rows[2]]
        weights = np.full(n // 2 + 1, 2.0)
        weights[0] = 1.0
        weights[-1] = 1.0
        self.w3 = weights[rows[2]]
        self.evaluations = 0

    @property
    def n_samples(self) -> int:
        return self.coeffs.shape[0]

    def coefficients_at(self, s: float) -> np.ndarray:
        """s in sample units; cubic Lagrange over the four nearest samples, held outside the window."""
        base = int(np.floor(s))
        if abs(s - base) < 1e-12:
            return self.coeffs[min(max(base, 0), self.n_samples - 1)]
        nodes = np.arange(base - 1, base + 3)
        out = np.zeros_like(self.coeffs[0])
        for node in nodes:
            w = np.prod([(s - other) / (node - other) for other in nodes if other != node])
            out += w * self.coeffs[min(max(int(node), 0), self.n_samples - 1)]
        return out

    def evaluate(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Σ_k ĉ_k e^{ik·y} at points (3, ...) for pruned half-spectrum coeffs (3, a1, a2, a3)."""
        self.evaluations += 1
        shape = points.shape[1:]
        y = points.reshape(3, -1)
        a1, a2, a3 = coeffs.shape[1:]
        flat = coeffs.reshape(3 * a1 * a2, a3).T
        out = np.empty((3, y.shape[1]))
        for lo in range(0, y.shape[1], _CHUNK):
            hi = min(lo + _CHUNK, y.shape[1])
            e3 = np.exp(1j * np.outer(y[2, lo:hi], self.k3)) * self.w3
            e2 = np.exp(1j * np.outer(y[1, lo:hi], self.k2))
            e1 = np.exp(1j * np.outer(y[0, lo:hi], self.k1))
            partial = (e3 @ flat).reshape(hi - lo, 3 * a1, a2)
            partial = np.matmul(partial, e2[:, :, None]).reshape(hi - lo, 3, a1)
            out[:, lo:hi] = np.matmul(partial, e1[:, :, None])[..., 0].real.T
        return out.reshape((3,) + shape)

    def at_time(self, s: float, points: np.ndarray) -> np.ndarray:
        return self.evaluate(self.coefficients_at(s), points)


@dataclass
class FlowMap:
    j: int
    grid: TorusGrid
    indices: np.ndarray            # sample indices in supp χ_j, increasing
    displacement: np.ndarray       # (n_s, 3, N, N, N): Φ_j − x
    anchor_index: int
    periodicity: float = 0.0       # worst |Φ(x+2πe_i) − Φ(x) − 2πe_i| on the faces of the end samples

    def position(self, i: int) -> np.ndarray:
        x = np.stack(np.broadcast_arrays(*self.grid.coordinates()))
        return x + self.displacement[i]

    def locate(self, n: int) -> int:
        hits = np.nonzero(self.indices == n)[0]
        if not hits.size:
            raise KeyError(f"Φ_{self.j} not stored at sample {n}")
        return int(hits[0])

    def jacobian(self, i: int) -> np.ndarray:
        """DΦ_j = Id + ∇D at stored position i; shape (3, 3, N, N, N)."""
        d = FourierField(self.grid, Rank.VECTOR, forward(self.displacement[i]))
        return np.eye(3).reshape(3, 3, 1, 1, 1) + grad(d).physical()

    def anchor_error(self) -> float:
        if self.anchor_index not in self.indices:
            return 0.0
        return float(np.max(np.abs(self.displacement[self.locate(self.anchor_index)])))


def trace_back(sampler: VelocitySampler, x: np.ndarray, s_from: float, s_to: float, steps: int, dt: float) -> np.ndarray:
    """RK4 for ẏ = u(s, y) from sample time s_from to s_to starting at y = x."""
    h = (s_to - s_from) / steps
    y = x
    s = s_from
    for _ in range(steps):
        k1 = sampler.at_time(s, y)
        k2 = sampler.at_time(s + h / 2, y + 0.5 * h * dt * k1)
        k3 = sampler.at_time(s + h / 2, y + 0.5 * h * dt * k2)
        k4 = sampler.at_time(s + h, y + h * dt * k3)
        y = y + h * dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        s = s + h
    return y


def _face_jump(sampler: VelocitySampler, grid: TorusGrid, start: int, anchor: int, steps: int, dt: float) -> float:
    x = np.stack(np.broadcast_arrays(*grid.coordinates())).astype(np.float64)
    worst = 0.0
    for axis in range(3):
        face = np.take(x, [0], axis=axis + 1)
        shifted = face.copy()
        shifted[axis] += 2.0 * np.pi
        jump = trace_back(sampler, shifted, start, anchor, steps, dt) - trace_back(sampler, face, start, anchor, steps, dt)
        jump[axis] -= 2.0 * np.pi
        worst = max(worst, float(np.max(np.abs(jump))))
    return worst


def _trace(sampler, grid, anchor, targets, substeps, dt) -> tuple[dict[int, np.ndarray], float]:
    """Displacements at each target sample, each integrated directly to the anchor."""
    x = np.stack(np.broadcast_arrays(*grid.coordinates())).astype(np.float64)
    out = {}
    for n in sorted(targets):
        if n == anchor:
            out[n] = np.zeros_like(x)
            continue
        out[n] = trace_back(sampler, x, n, anchor, substeps * abs(n - anchor), dt) - x
    periodicity = 0.0
    for end in {min(targets), max(targets)} - {anchor}:
        periodicity = max(periodicity, _face_jump(sampler, grid, end, anchor, substeps * abs(end - anchor), dt))
    return out, periodicity


def solve_flows(
    velocity: FourierField,
    cutoffs: CutoffFamily,
    dt: float,
    history: int,
    substeps: int = 4,
) -> list[FlowMap]:
    """One FlowMap per cutoff index, stored on supp χ_j."""
    grid = velocity.grid
    sampler = VelocitySampler(grid, np.asarray(velocity.coeffs))
    umax = float(np.max(c0_norm(velocity)))
    if umax * dt / substeps > grid.spacing:
        logger.warning(
            "flow CFL: |u|·dt/substeps = %.3g exceeds the cell size %.3g", umax * dt / substeps, grid.spacing,
        )
    flows = []
    for j in cutoffs.indices:
        indices = np.nonzero(cutoffs.support(j))[0]
        anchor = history + int(round(cutoffs.anchor(j) / dt))
        disp, periodicity = _trace(sampler, grid, anchor, set(int(i) for i in indices), substeps, dt)
        flows.append(FlowMap(
            j=j,
            grid=grid,
            indices=indices,
            displacement=np.stack([disp[int(i)] for i in indices]),
            anchor_index=anchor,
            periodicity=periodicity,
        ))
        logger.debug("Flow Φ_%d: %d samples, anchor %d, face jump %.2e", j, indices.size, anchor, periodicity)
    logger.info("Solved %d flow maps (substeps=%d, %d velocity evaluations)", len(flows), substeps, sampler.evaluations)
    return flows


def flow_ratios(flows: list[FlowMap], velocity: FourierField, mu: float) -> list[dict]:
    """Measured ‖DΦ_j − Id‖_{C⁰} against (‖Du‖/μ)·exp(‖Du‖/μ) on supp χ_j."""
    out = []
    for flow in flows:
        du = float(np.max(derivative_magnitude(velocity.at(flow.indices), 1)))
        bound = du / mu * np.exp(du / mu)
        dev = 0.0
        for i in range(flow.indices.size):
            jac = flow.jacobian(i) - np.eye(3).reshape(3, 3, 1, 1, 1)
            dev = max(dev, float(np.max(np.sqrt(np.sum(jac**2, axis=(0, 1))))))
        out.append({"j": flow.j, "deviation": dev, "bound": bound, "ratio": dev / bound if bound > 0 else 0.0})
    return out
