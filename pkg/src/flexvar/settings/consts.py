import enum
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent
PROJECT_DIR = BASE_DIR.parent.parent
LOG_DIR = PROJECT_DIR / "logs"

log_levels = enum.StrEnum(
    "LogLevel",
    {x.upper(): x for x in ("error", "info", "debug")},
)

server_types = enum.StrEnum(
    "ServerTypes",
    {x.upper(): x for x in ("dev", "prod")},
)
