"""
`ou` — one noise path, its regularity norms and the stopping time T_L.
"""

import logging

import numpy as np

from .base import CommandResult
from .registry import command
from ..core.runconfig import RunConfig
from ..core.storage import StorageBackend
from ..spectral.grid import TorusGrid
from ..spectral.norms import l2_norm
from ..stochastic.functionals import SignConvention, conventions_disagree, functional_gap, m_process
from ..stochastic.ou import OUPath, simulate_ou
from ..stochastic.stopping import StoppingClock, path_holder_quotient, stopping_time_TL

logger = logging.getLogger(__name__)

OU_HEADER = ["t", "L2", "H_(3+sigma)/2", "H_(5+sigma)/2", "holder_quotient"]


def noise_path(config: RunConfig, grid: TorusGrid) -> OUPath:
    """Path on [0, max(L, horizon)] with the iteration step, so T_L is always decidable."""
    T = max(config.L, config.horizon)
    steps = max(1, round(T / config.dt))
    return simulate_ou(config.spectrum(), grid, config.dt, steps * config.dt, config.seed, alpha=config.alpha)


def ou_rows(path: OUPath, delta: float) -> list[list]:
    sigma = path.spectrum.sigma
    cols = (
        path.sobolev_norms(0.0),
        path.sobolev_norms((3 + sigma) / 2),
        path.sobolev_norms((5 + sigma) / 2),
        path_holder_quotient(path, delta),
    )
    return [[t, *vals] for t, *vals in zip(path.times, *cols)]


def martingale_checks(path: OUPath) -> dict:
    """M^z against the Wiener path carried by the simulation, and the sign-convention flag."""
    z, b = path.series(), path.wiener_series()
    gap = functional_gap(m_process(z, path.h, path.spectrum.alpha, SignConvention.MARTINGALE), b)
    scale = max(float(np.max(l2_norm(b))), 1e-300)
    return {"martingale_gap": gap / scale, "sign_flag": conventions_disagree(z, path.h, path.spectrum.alpha)}


def stopped_path(config: RunConfig, grid: TorusGrid) -> tuple[OUPath, StoppingClock]:
    path = noise_path(config, grid)
    clock = stopping_time_TL(path, config.L, config.delta)
    return path.with_stopping(clock.T_L), clock


@command(name="ou", help="Simulate the OU noise path and its stopping time T_L.")
def cmd_ou(config: RunConfig, store: StorageBackend) -> CommandResult:
    result = CommandResult("ou")
    path, clock = stopped_path(config, TorusGrid(n=config.n))
    result.wrote(store.write_csv("ou_norms.csv", OU_HEADER, ou_rows(path, config.delta)))
    payload = clock.to_json()
    payload.update(seed=config.seed, h=path.h, horizon=path.horizon, N=config.n)
    payload.update(martingale_checks(path))
    result.wrote(store.write_json("stopping.json", payload))
    result.summary.update(T_L=clock.T_L, reason=clock.reason)
    return result
