from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(
        env_prefix="CROWDCONF_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Parallel worker processes for Monte-Carlo runs (0 = one per CPU)
    THREADS: int = Field(default=0, ge=0)

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None


# Global settings instance
settings = Settings()
