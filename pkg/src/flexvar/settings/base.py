from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

from flexvar.settings.consts import log_levels, server_types
from flexvar.utils import ENV_PREFIX


class Settings(BaseSettings):
    """Process-wide settings read from ``TVP_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_file=".env",
        extra="ignore",
    )

    ENV: server_types = server_types.PROD
    LOG_LEVEL: log_levels = log_levels.INFO
    LOG_DIR: Path | None = None
    THREADS: int = 1
