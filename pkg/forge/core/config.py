"""
Central configuration. Process-level settings in one place.
"""

from functools import lru_cache
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # --- Environment ---
    log_level: str = Field(default="info", alias="LOG_LEVEL")

    # --- Parallelism ---
    # Workers for scipy.fft and ensemble pools. Outputs do not depend on it.
    threads: int = Field(default=1, ge=1, alias="FORGE_THREADS")

    # --- Output ---
    out_dir: str = Field(default="./runs", alias="FORGE_OUT")


@lru_cache
def get_settings() -> Settings:
    return Settings()
