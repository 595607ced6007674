"""Seed derivation and the splittable per-node random streams.

Two kinds of randomness are used throughout:

* numpy ``Generator`` streams for vectorised sampling (graph generators,
  epidemic marks).  Streams are keyed by a master seed plus string/int tags so
  that e.g. graph randomness and epidemic randomness never share a stream and
  the same graph can be replayed with fresh epidemics.
* SplitMix64 streams keyed by a 64-bit handle, used by the tree samplers and
  the lazy limit-tree kernel.  A node's handle is derived from its parent's
  handle and its child index, so the tree below any node is a deterministic
  function of the node handle.  Truncating the same seed at different depths
  therefore yields coupled trees.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

# Salts separating the structural and epidemic draws of a tree node.
STRUCT_SALT = 0x5354525543545F31
EPI_SALT = 0x4550494D41524B53
ROOT_SALT = 0x524F4F544E4F4445


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of ints/strings (order-sensitive)."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def spawn_rng(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def mix64(x: int) -> int:
    """SplitMix64 finaliser."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def child_handle(parent_handle: int, index: int) -> int:
    return mix64(parent_handle ^ ((index + 1) * 0xD1B54A32D192ED03 & MASK64))


def root_handle(run_seed: int) -> int:
    return mix64((run_seed & MASK64) ^ ROOT_SALT)


class SplitMix64:
    """Tiny counter-based stream; mirrored bit-for-bit by the C kernel."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def uniform(self) -> float:
        # in (0, 1]; never 0 so -log() is always finite
        return ((self.next_u64() >> 11) + 1) * (1.0 / 9007199254740992.0)

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform()) / rate

    def poisson(self, lam: float) -> int:
        # Knuth's product method; split large means to avoid exp() underflow.
        n = 0
        while lam > 32.0:
            n += self._poisson_small(32.0)
            lam -= 32.0
        return n + self._poisson_small(lam)

    def _poisson_small(self, lam: float) -> int:
        limit = math.exp(-lam)
        k = 0
        p = 1.0
        while True:
            p *= self.uniform()
            if p <= limit:
                return k
            k += 1

    def bernoulli(self, p: float) -> bool:
        return self.uniform() <= p


def struct_stream(handle: int) -> SplitMix64:
    return SplitMix64(mix64(handle ^ STRUCT_SALT))


def epi_stream(handle: int) -> SplitMix64:
    return SplitMix64(mix64(handle ^ EPI_SALT))
