"""Counter-based, named random streams.

Every stream is a Philox generator keyed by ``(seed, name)``.  Draws are
addressed by an integer index rather than consumed sequentially, so any
party can read value ``i`` of its stream without disturbing any other
stream and a replay of trial ``n`` sees exactly the same numbers as the
original run.
"""

from __future__ import annotations

import hashlib

import numpy as np

_BLOCK = 1024
_CACHE_BLOCKS = 8


def derive_key(seed: int, *names: object) -> np.ndarray:
    """128-bit Philox key for a named substream of ``seed``."""
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(16, "little", signed=True))
    for name in names:
        h.update(b"\x00")
        h.update(str(name).encode())
    return np.frombuffer(h.digest(), dtype=np.uint64).copy()


def derive_seed(seed: int, *names: object) -> int:
    """A 64-bit child seed, for handing to code that wants a plain integer."""
    return int(derive_key(seed, "seed", *names)[0])


class RandomStream:
    """Random-access uniform doubles on [0, 1) for one named stream."""

    def __init__(self, seed: int, name: str):
        self.seed = int(seed)
        self.name = name
        self._key = derive_key(seed, name)
        self._cache: dict[int, list[float]] = {}

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, name={self.name!r})"

    def _generator(self, block: int) -> np.random.Generator:
        # counter word 1 selects the block; word 0 is advanced by Philox itself
        bitgen = np.random.Philox(key=self._key, counter=[0, block, 0, 0])
        return np.random.Generator(bitgen)

    def uniforms(self, start: int, count: int) -> np.ndarray:
        """Values ``start .. start+count-1`` as an array."""
        if start < 0 or count < 0:
            raise ValueError("start and count must be nonnegative")
        if count == 0:
            return np.empty(0)
        first, last = start // _BLOCK, (start + count - 1) // _BLOCK
        joined = np.concatenate([self._generator(k).random(_BLOCK) for k in range(first, last + 1)])
        off = start - first * _BLOCK
        return joined[off:off + count]

    def uniform(self, index: int) -> float:
        block, off = divmod(index, _BLOCK)
        values = self._cache.get(block)
        if values is None:
            if len(self._cache) >= _CACHE_BLOCKS:
                self._cache.pop(next(iter(self._cache)))
            values = self._generator(block).random(_BLOCK).tolist()
            self._cache[block] = values
        return values[off]

    def __getstate__(self):
        return {"seed": self.seed, "name": self.name}

    def __setstate__(self, state):
        self.__init__(state["seed"], state["name"])

    def __deepcopy__(self, memo):
        # streams are pure functions of (seed, name); sharing one is safe
        return self
