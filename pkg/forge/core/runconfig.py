"""
Run files: flat `key = value` text, `#` comments, comma-separated lists.

    N = 24
    lambda = 5, 10       # one entry per stage
    noise_support = 1:0:0, 0:1:1

Unknown keys are a ConfigError. Builders hand each module its own config model.
"""

import logging
import math
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError

logger = logging.getLogger(__name__)

_LIST_KEYS = {"lambda", "delta_amp", "ell", "mu", "noise_support"}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    # ── Grid and time ────────────────────────────────────────────────
    n: int = Field(default=24, alias="N")
    dt: float = Field(default=2.5e-3, gt=0.0)
    horizon: float = Field(default=0.05, ge=0.0)
    seed: int = Field(default=0, ge=0)

    # ── Noise ────────────────────────────────────────────────────────
    L: float = Field(default=2.0, gt=1.0)
    alpha: float = Field(default=0.25, gt=0.0, lt=0.5)
    sigma: float = Field(default=0.01, gt=0.0)
    delta: float = Field(default=0.01, gt=0.0, lt=0.25)
    rho: float = Field(default=4.5, gt=0.0)
    noise_amplitude: float = Field(default=1e-3, ge=0.0)
    noise_support: Optional[tuple[tuple[int, int, int], ...]] = None
    tau_n_max: int = Field(default=8, ge=1)

    # ── Iteration ────────────────────────────────────────────────────
    mode: str = "surrogate"
    stages: Optional[int] = Field(default=None, ge=0)
    lam: tuple[int, ...] = Field(default=(5,), alias="lambda")
    delta_amp: tuple[float, ...] = (100.0,)
    ell: tuple[float, ...] = (0.01,)
    mu: tuple[float, ...] = (40.0,)
    c_R: float = Field(default=1.0, gt=0.0)
    substeps: int = Field(default=4, ge=1)
    family1: str = "five"
    K: float = Field(default=4.0, gt=0.0)

    # ── Galerkin ─────────────────────────────────────────────────────
    galerkin_cutoff: int = Field(default=4, ge=1)
    galerkin_dt: float = Field(default=2.5e-3, gt=0.0)
    galerkin_T: Optional[float] = Field(default=None, ge=0.0)
    ensemble: int = Field(default=32, ge=1)
    x0_amplitude: float = 0.0
    x0_lambda: int = Field(default=5, ge=1)

    # ── Ledger ───────────────────────────────────────────────────────
    b: int = 6
    c: int = 15
    a: Optional[int] = Field(default=None, gt=0)
    epsilon: Optional[float] = Field(default=None, gt=0.0)
    margin: float = Field(default=1e3, gt=1.0)
    c0: float = Field(default=1e3, gt=0.0)
    q_max: int = Field(default=10, ge=0)
    L_policy: str = "minimal"

    @field_validator("mode")
    @classmethod
    def _known_mode(cls, v: str) -> str:
        if v not in ("surrogate", "ledger"):
            raise ValueError(f"mode must be 'surrogate' or 'ledger', got '{v}'")
        return v

    @field_validator("family1")
    @classmethod
    def _known_family(cls, v: str) -> str:
        if v not in ("five", "thirteen"):
            raise ValueError(f"family1 must be 'five' or 'thirteen', got '{v}'")
        return v

    @field_validator("L_policy")
    @classmethod
    def _known_policy(cls, v: str) -> str:
        if v not in ("minimal", "fixed"):
            raise ValueError(f"L_policy must be 'minimal' or 'fixed', got '{v}'")
        return v

    @field_validator("noise_support", mode="before")
    @classmethod
    def _parse_support(cls, v: Any) -> Any:
        if v is None or not isinstance(v, (list, tuple)):
            return v
        out = []
        for item in v:
            if isinstance(item, str):
                parts = item.split(":")
                if len(parts) != 3:
                    raise ValueError(f"support vector '{item}' is not of the form k1:k2:k3")
                item = tuple(int(p) for p in parts)
            out.append(tuple(item))
        return tuple(out)

    # ── Derived ──────────────────────────────────────────────────────

    @property
    def n_stages(self) -> int:
        lengths = {len(self.lam), len(self.delta_amp), len(self.ell), len(self.mu)} - {1}
        if len(lengths) > 1:
            raise ConfigError(f"stage lists disagree in length: {sorted(lengths)}")
        listed = lengths.pop() if lengths else 1
        return self.stages if self.stages is not None else listed

    @property
    def compare_T(self) -> float:
        return self.galerkin_T if self.galerkin_T is not None else self.horizon

    def stage_value(self, key: str, i: int):
        values = getattr(self, key)
        return values[0] if len(values) == 1 else values[i]

    def resolved_text(self) -> str:
        lines = ["# resolved run configuration"]
        for name, info in type(self).model_fields.items():
            value = getattr(self, name)
            if value is None:
                continue
            lines.append(f"{info.alias or name} = {_render(value)}")
        return "\n".join(lines) + "\n"

    # ── Builders ─────────────────────────────────────────────────────

    def spectrum(self):
        from ..stochastic.spectrum import NoiseSpectrum

        return _build(
            NoiseSpectrum,
            rho=self.rho, alpha=self.alpha, sigma=self.sigma,
            amplitude=self.noise_amplitude, support=self.noise_support,
        )

    def iteration_config(self):
        from ..integrator.config import IterationConfig, StageScales

        stages = tuple(
            _build(
                StageScales,
                lam=self.stage_value("lam", i), delta=self.stage_value("delta_amp", i),
                ell=self.stage_value("ell", i), mu=self.stage_value("mu", i),
            )
            for i in range(self.n_stages)
        )
        return _build(
            IterationConfig,
            n=self.n, dt=self.dt, horizon=self.horizon, L=self.L, alpha=self.alpha,
            c_R=self.c_R, stages=stages, substeps=self.substeps, family=self.family1,
            keep_breakdown=False,
        )

    def galerkin_config(self, x0=None, **overrides):
        from ..galerkin.config import GalerkinConfig

        fields = dict(
            cutoff=self.galerkin_cutoff, dt=self.galerkin_dt, T=max(self.compare_T, self.galerkin_dt),
            ensemble=self.ensemble, seed=self.seed, spectrum=self.spectrum(), x0=x0,
        )
        fields.update(overrides)
        return _build(GalerkinConfig, **fields)

    def parameter_set(self):
        from ..ledger.params import LPolicy, make_parameters

        overrides = dict(
            b=self.b, c=self.c, alpha=self.alpha, sigma=self.sigma, delta=self.delta,
            epsilon=self.epsilon, c0=self.c0, margin=self.margin,
        )
        if self.a is not None:
            overrides.update(a=self.a, log2_a=math.log2(self.a))
        if self.L_policy == "fixed":
            overrides["L"] = self.L
        try:
            return make_parameters(self.family1, LPolicy(self.L_policy), **overrides)
        except ValidationError as exc:
            raise ConfigError(f"ledger parameters: {_first_error(exc)}") from exc


def _build(model, **fields):
    try:
        return model(**fields)
    except ValidationError as exc:
        raise ConfigError(f"{model.__name__}: {_first_error(exc)}") from exc


def _first_error(exc: ValidationError) -> str:
    err = exc.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ())) or "value"
    return f"{where}: {err.get('msg', 'invalid')}"


def _render(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(":".join(str(c) for c in v) if isinstance(v, tuple) else _render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_run_text(text: str) -> dict[str, Any]:
    raw: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{line}'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        if key in _LIST_KEYS:
            raw[key] = [s.strip() for s in value.split(",") if s.strip()]
        else:
            raw[key] = value
    return raw


def load_run_config(path: Optional[str | Path] = None, **overrides) -> RunConfig:
    """Parse a run file (or defaults when path is None), then apply non-None overrides."""
    raw = parse_run_text(Path(path).read_text()) if path else {}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    known = {info.alias or name for name, info in RunConfig.model_fields.items()}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_first_error(exc)) from exc
    logger.info("Run config: %s", path or "defaults")
    return config
