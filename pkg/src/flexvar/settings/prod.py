from flexvar.settings.base import Settings as BaseSettings
from flexvar.settings.consts import log_levels


class Settings(BaseSettings):
    LOG_LEVEL: log_levels = log_levels.INFO
