"""
New Reynolds stress R̊_{q+1} as the sum of its seven components, and p_{q+1}.

Components are written in divergence form, which equals the pointwise form
whenever the transported fields are divergence-free:
    transport   𝓡(∂_t w + div(w⊗u_ℓ))          u_ℓ = v_ℓ + z_ℓ
    nash        𝓡(div(u_ℓ⊗w))
    dissipation 𝓡((−Δ)^α w)
    oscillation 𝓡(div(w_p⊗w_p + R̊_ℓ) − ∇p_osc)
    corrector   w_p⊗̊w_c + w_c⊗̊w_p + w_c⊗̊w_c
    z_error     v_{q+1}⊗̊e + e⊗̊v_{q+1} + z⊗̊z − z_ℓ⊗̊z_ℓ,   e = z − z_ℓ
    commutator  R_com from mollification
"""

import logging
from typing import Optional

import numpy as np

from .config import StageScales
from .mollify import Mollified
from .perturbation import Perturbation
from .state import STRESS_COMPONENTS, IterationState, StressBreakdown
from ..spectral.field import FourierField, Rank
from ..spectral.norms import l2_norm, time_derivative
from ..spectral.operators import div, frac_laplacian, grad, inverse_divergence, tensor_product, trace, traceless

logger = logging.getLogger(__name__)


def _sym(m: FourierField) -> FourierField:
    return m + m.with_coeffs(np.swapaxes(m.coeffs, -4, -5))


def stress_components(
    n: int,
    moll: Mollified,
    pert: Perturbation,
    z: FourierField,
    dwdt: np.ndarray,
    alpha: float,
) -> tuple[dict[str, FourierField], FourierField]:
    """Components and the pressure increment p_osc + p_corr + p_z at sample n."""
    u_l = moll.v.at(n) + moll.z.at(n)
    w, w_p, w_c = pert.w.at(n), pert.w_p.at(n), pert.w_c.at(n)
    v_new = moll.v.at(n) + w
    e = z.at(n) - moll.z.at(n)
    p_osc = pert.p_osc.at(n)

    corr = _sym(tensor_product(w_p, w_c)) + tensor_product(w_c, w_c)
    zt = _sym(tensor_product(v_new, e)) + tensor_product(z.at(n), z.at(n)) - tensor_product(moll.z.at(n), moll.z.at(n))
    oscillation_source = div(tensor_product(w_p, w_p) + moll.stress.at(n)) - grad(p_osc)
    parts = {
        "transport": inverse_divergence(w.with_coeffs(dwdt[n]) + div(tensor_product(w, u_l))),
        "oscillation": inverse_divergence(oscillation_source),
        "corrector": traceless(corr),
        "nash": inverse_divergence(div(tensor_product(u_l, w))),
        "dissipation": inverse_divergence(frac_laplacian(w, alpha)),
        "z_error": traceless(zt),
        "commutator": moll.commutator.at(n),
    }
    pressure = p_osc + trace(corr) * (1.0 / 3.0) + trace(zt) * (1.0 / 3.0)
    return parts, pressure


def assemble_stress(
    state: IterationState,
    moll: Mollified,
    pert: Perturbation,
    z: FourierField,
    scales: StageScales,
    keep_fields: bool = False,
    drop_component: Optional[str] = None,
) -> tuple[IterationState, StressBreakdown]:
    """(v_{q+1}, p_{q+1}, R̊_{q+1}) with the breakdown of R̊_{q+1}."""
    if drop_component is not None and drop_component not in STRESS_COMPONENTS:
        raise ValueError(f"unknown stress component '{drop_component}'")
    grid = state.grid
    tg = state.time_grid
    n_t = tg.size
    dwdt = time_derivative(np.asarray(pert.w.coeffs), tg.dt)
    breakdown = StressBreakdown(times=tg.times)
    stress = np.zeros((n_t, 3, 3) + grid.spectral_shape, dtype=np.complex128)
    pressure = np.zeros((n_t,) + grid.spectral_shape, dtype=np.complex128)
    kept: dict[str, list] = {name: [] for name in STRESS_COMPONENTS}
    mismatch = 0.0

    for n in range(n_t):
        parts, p_inc = stress_components(n, moll, pert, z, dwdt, state.alpha)
        total = None
        for name in STRESS_COMPONENTS:
            comp = parts[name]
            breakdown.record(name, comp, n)
            if keep_fields:
                kept[name].append(comp.coeffs)
            if name == drop_component:
                continue
            total = comp if total is None else total + comp
        stress[n] = total.coeffs
        pressure[n] = (moll.p.at(n) - p_inc).coeffs
        if keep_fields and drop_component is None:
            check = parts[STRESS_COMPONENTS[0]]
            for name in STRESS_COMPONENTS[1:]:
                check = check + parts[name]
            scale = max(float(l2_norm(total)), 1e-300)
            mismatch = max(mismatch, float(l2_norm(check - total)) / scale)

    if keep_fields:
        breakdown.fields = {
            name: FourierField(grid, Rank.MATRIX, np.stack(kept[name])) for name in STRESS_COMPONENTS
        }
    breakdown.sum_mismatch = mismatch

    lag = moll.lag
    start = (state.valid.start or 0) + lag - 1
    stop = state.valid.stop if state.valid.stop is not None else n_t
    new_state = IterationState(
        stage=state.stage + 1,
        grid=grid,
        time_grid=tg,
        L=state.L,
        alpha=state.alpha,
        v=moll.v + pert.w,
        p=FourierField(grid, Rank.SCALAR, pressure),
        stress=FourierField(grid, Rank.MATRIX, stress),
        scales=scales,
        valid=slice(start, stop),
        provenance={**state.provenance, f"stage{state.stage + 1}": scales.model_dump()},
    )
    if drop_component:
        new_state = new_state.with_provenance(dropped_component=drop_component)
    logger.info(
        "Stage %d assembled: valid samples [%d, %d), max ‖R̊‖_C0 %.3g",
        new_state.stage, start, stop, max(float(np.max(v)) for v in breakdown.c0.values()),
    )
    return new_state, breakdown
