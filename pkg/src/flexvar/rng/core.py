from dataclasses import dataclass

import numpy as np

from flexvar.utils import stable_id


def _key(value: int | str) -> int:
    if isinstance(value, str):
        return stable_id(value)
    if value < 0:
        raise ValueError("stream keys must be non-negative")
    return int(value)


@dataclass(frozen=True)
class RngStream:
    """
    A seed plus a stream id. Every ``generator(...)`` call with the same keys
    yields a fresh ``numpy.random.Generator`` reproducing the same sequence,
    independent of how many other streams were consumed before.

    Keys may be integers or text tags (hashed with ``stable_id``).
    """

    seed: int
    chain: tuple[int, ...] = ()

    def spawn(self, *keys: int | str) -> "RngStream":
        return RngStream(self.seed, self.chain + tuple(_key(k) for k in keys))

    def generator(self, *keys: int | str) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.seed,
            spawn_key=self.chain + tuple(_key(k) for k in keys),
        )
        return np.random.Generator(np.random.PCG64(seq))
