"""Deterministic random streams.

Every stochastic operator draws from a numpy ``Generator`` built from a
``(seed, stream_id)`` pair. Streams are named, so an experiment can hand
each trial and operator its own independent stream and results do not
depend on execution order.
"""

import hashlib
from typing import Union

import numpy as np
from pydantic import Field

from ..models import IASModel

U64_MAX = 2**64 - 1

RngLike = Union["RngStream", np.random.Generator]


def _stable_hash(parent: int, name: str) -> int:
    digest = hashlib.blake2b(f"{parent}/{name}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class RngStream(IASModel):
    """A named, reproducible random stream.

    Two streams with equal ``(seed, stream_id)`` produce identical draw
    sequences on every platform (PCG64 seeded through ``SeedSequence``).
    """

    seed: int = Field(default=0, ge=0, le=U64_MAX)
    stream_id: int = Field(default=0, ge=0, le=U64_MAX)

    def derive(self, *names: object) -> "RngStream":
        """Return the child stream identified by ``names``.

        Args:
            *names: Path components such as ``("trial", 3, "mutation")``

        Returns:
            A new stream with the same seed and a hashed stream id
        """
        stream_id = self.stream_id
        for name in names:
            stream_id = _stable_hash(stream_id, str(name))
        return RngStream(seed=self.seed, stream_id=stream_id)

    def generator(self) -> np.random.Generator:
        """Return a fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, self.stream_id])))


def as_generator(rng: RngLike) -> np.random.Generator:
    """Accept either an ``RngStream`` or an existing generator.

    Passing a generator continues its sequence; passing a stream starts
    the stream from the beginning.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
