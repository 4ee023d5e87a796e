from functools import lru_cache

from flexvar.settings.base import Settings
from flexvar.settings.consts import server_types
from flexvar.settings.dev import Settings as DevSettings
from flexvar.settings.prod import Settings as ProdSettings
from flexvar.utils import get_val


@lru_cache
def get_settings(server: server_types | str | None = None) -> Settings:
    """
    Settings for the current process. The server type falls back to
    ``TVP_ENV``; dev logs at debug level into the project log directory,
    prod logs at info level to stderr only.

    :param server: "dev" | "prod" | None
    :return: Settings
    """
    if server is None:
        server = get_val("TVP_ENV", default="prod")

    if server == "dev":
        return DevSettings()

    return ProdSettings()
