import asyncio
import hashlib
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import simplejson as json
from decouple import config

T = TypeVar("T")


ENV_PREFIX = "TVP_"


def get_val(name: str, default: str | int | bool | None = None, **kwargs):
    """
    Look up a ``TVP_*`` setting in the process environment, then in a
    ``.env`` file (through decouple), then fall back to ``default``. A name
    given without the prefix is looked up as ``TVP_<name>``, so
    ``get_val("ENV")`` and ``get_val("TVP_ENV")`` read the same variable.

    :param name: variable name, with or without ``TVP_``
    :param default: returned when the variable is set nowhere
    :param kwargs: passed on to ``decouple.config`` (e.g. ``cast``)
    :raises ValueError: unset and no default
    """
    key = name if name.startswith(ENV_PREFIX) else ENV_PREFIX + name
    if os.environ.get(key) is not None:
        return os.environ[key]
    if config(key, None, **kwargs) is not None:
        return config(key, **kwargs)
    if default is not None:
        return default
    raise ValueError(f"{key} is set neither in the environment nor in .env")


def content_hash(payload: dict) -> str:
    """
    sha256 over a canonical JSON rendering of ``payload``.

    :param payload: dict
    :return: str
    """
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def stable_id(tag: str) -> int:
    """Order-independent integer id for a textual tag (seeds rng streams)."""
    return zlib.crc32(tag.encode("utf-8"))


def windows_sys_event_loop_check():
    """Selector event loop policy on Windows."""
    if sys.platform == "win32":
        asyncio.set_event_loop_policy(asyncio.WindowsSelectorEventLoopPolicy())


async def _gather_in_executor(jobs: Sequence[Callable[[], T]], threads: int):
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        tasks = [loop.run_in_executor(pool, job) for job in jobs]
        return await asyncio.gather(*tasks)


def run_in_threads(
    jobs: Sequence[Callable[[], T]],
    threads: int = 1,
) -> list[T]:
    """
    Run independent zero-argument jobs on a thread pool and return their
    results in submission order. ``threads <= 1`` runs them inline.

    :param jobs: callables
    :param threads: int
    :return: list of results
    """
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    windows_sys_event_loop_check()
    return list(asyncio.run(_gather_in_executor(jobs, threads)))
