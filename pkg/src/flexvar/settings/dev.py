from pathlib import Path

from flexvar.settings.base import Settings as BaseSettings
from flexvar.settings.consts import LOG_DIR, log_levels


class Settings(BaseSettings):
    LOG_LEVEL: log_levels = log_levels.DEBUG
    LOG_DIR: Path | None = LOG_DIR
