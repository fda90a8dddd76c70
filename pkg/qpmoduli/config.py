from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Annotated, Any

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict

ALL_CHECKS: tuple[str, ...] = (
    "quasi_poisson",
    "centrality",
    "leaves",
    "homology_crosscheck",
    "reduce",
    "momentmap",
    "appendix",
)

BUNDLED_CONFIGS = Path(__file__).resolve().parent / "configs"


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    default_seed: int = Field(default=20240611, alias="QP_DEFAULT_SEED")
    points_per_check: int = Field(default=5, ge=1, alias="QP_POINTS_PER_CHECK")
    shear_min: int = Field(default=4, ge=1, alias="QP_SHEAR_MIN")
    shear_max: int = Field(default=8, ge=1, alias="QP_SHEAR_MAX")
    shear_bound: int = Field(default=7, ge=1, alias="QP_SHEAR_BOUND")
    config_dir: Path = Field(default=BUNDLED_CONFIGS, alias="QP_CONFIG_DIR")
    appendix_instances: int = Field(default=100, ge=1, alias="QP_APPENDIX_INSTANCES")
    appendix_max_dim: int = Field(default=8, ge=2, alias="QP_APPENDIX_MAX_DIM")
    enabled_checks: Annotated[list[str], NoDecode] = Field(
        default_factory=lambda: list(ALL_CHECKS), alias="QP_ENABLED_CHECKS"
    )
    log_level: str = Field(default="INFO", alias="QP_LOG_LEVEL")

    @field_validator("enabled_checks", mode="before")
    @classmethod
    def parse_enabled_checks(cls, value: Any) -> list[str]:
        if value is None:
            return list(ALL_CHECKS)
        if isinstance(value, list):
            items = [str(item).strip() for item in value if str(item).strip()]
        else:
            raw = str(value).strip()
            if raw.startswith("[") and raw.endswith("]"):
                raw = raw[1:-1]
            items = [part.strip().strip("'\"") for part in raw.split(",") if part.strip()]
        if not items:
            return list(ALL_CHECKS)
        unknown = [item for item in items if item not in ALL_CHECKS]
        if unknown:
            raise ValueError(f"Unknown checks: {', '.join(unknown)}")
        return items


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
