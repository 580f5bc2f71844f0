"""Counter-based random streams.

Every Monte Carlo sample owns a Philox generator keyed by ``(seed, stream id)``
with the sample index placed in the counter.  Samples can therefore be drawn
in any order, by any number of workers, and still reproduce bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["SampleStream", "canonical_order", "half_lattice_order"]

_MASK64 = (1 << 64) - 1


def _label_words(label: str) -> tuple[int, ...]:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


@dataclass(frozen=True)
class SampleStream:
    """A family of independent per-sample generators."""

    seed: int
    label: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

    def child(self, label: str) -> "SampleStream":
        return SampleStream(self.seed, f"{self.label}/{label}" if self.label else label)

    @property
    def key(self) -> np.ndarray:
        return _key(int(self.seed), self.label)

    def generator(self, index: int) -> np.random.Generator:
        index = int(index)
        counter = [0, 0, index & _MASK64, index >> 64]
        return np.random.Generator(np.random.Philox(key=self.key, counter=counter))


@lru_cache(maxsize=1024)
def _key(seed: int, label: str) -> np.ndarray:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=_label_words(label))
    key = seq.generate_state(2, np.uint64)
    key.flags.writeable = False
    return key


@lru_cache(maxsize=64)
def canonical_order(d: int, modes: int) -> np.ndarray:
    """Flat indices (into the centred lattice) sorted by shell |n|_inf, then
    lexicographically in n.  The order of a smaller lattice is a prefix of the
    order of a larger one, so draws are nested across truncations."""
    axis = np.arange(-modes, modes + 1)
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    shell = np.max(np.abs(pts), axis=1)
    keys = [pts[:, j] for j in range(d - 1, -1, -1)] + [shell]
    order = np.lexsort(keys)
    order.flags.writeable = False
    return order


@lru_cache(maxsize=64)
def half_lattice_order(d: int, modes: int) -> tuple[np.ndarray, np.ndarray]:
    """Canonical order restricted to one representative of each pair {n, -n},
    n != 0 (first nonzero coordinate positive); returns (flat index, flat index
    of the partner -n)."""
    side = 2 * modes + 1
    order = canonical_order(d, modes)
    pts = np.stack(np.unravel_index(order, (side,) * d), axis=-1) - modes
    first = np.zeros(len(pts), dtype=int)
    for j in range(d - 1, -1, -1):
        first = np.where(pts[:, j] != 0, pts[:, j], first)
    keep = first > 0
    reps = order[keep]
    partner = np.ravel_multi_index(tuple((-pts[keep] + modes).T), (side,) * d)
    reps.flags.writeable = False
    partner.flags.writeable = False
    return reps, partner
