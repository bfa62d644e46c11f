"""
Central feature flags.

Set via environment variables (prefix FF_) or .env file.
"""

from functools import lru_cache
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class FeatureFlags(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # ── Invariants ───────────────────────────────────────────────────
    strict_invariants: bool = Field(default=True, alias="FF_STRICT_INVARIANTS")
    # ON  → identity breaches raise InvariantError (exit 1).
    # OFF → breaches are logged and recorded in the report only.

    assert_z_bounds: bool = Field(default=True, alias="FF_ASSERT_Z_BOUNDS")
    # ON  → ‖z‖∞, ‖∇z‖∞ ≤ L^{1/4} checked on [0, T_L).

    # ── Numerics ─────────────────────────────────────────────────────
    dealias: bool = Field(default=True, alias="FF_DEALIAS")
    # ON  → 2/3-rule truncation on every quadratic product.
    # OFF → raw pseudo-spectral products (aliasing studies only).

    # ── Output ───────────────────────────────────────────────────────
    write_fields: bool = Field(default=True, alias="FF_WRITE_FIELDS")
    # ON  → iterate writes iterates/stage_q/*.f64 dumps + sidecars.
    # OFF → only CSV/JSON reports.


@lru_cache
def get_flags() -> FeatureFlags:
    return FeatureFlags()
