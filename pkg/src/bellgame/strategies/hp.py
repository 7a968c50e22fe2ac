"""A caricature of the Hess-Philipp model.

Settings are planar angles measured as fractions of a full turn, so they
live on the unit circle [0, 1) with endpoints identified.  All unit-interval
quantities are held as 64-bit fixed-point integers: ``v`` stands for
``v / 2**64``, and addition mod 1 is addition mod ``2**64``.  That makes the
setting reconstruction below exact rather than approximately right.

Given settings ``a`` and ``b`` and independent uniforms ``lam_star``,
``lam_star2`` and ``lam``::

    r1 = (lam_star2 + a) mod 1        a = (r1 - lam_star2) mod 1
    r2 = (lam_star  + b) mod 1        b = (r2 - lam_star)  mod 1

so a station holding ``r`` and either station variable recovers the far
setting, after which it can sample any joint law it likes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidHiddenState
from ..rng import derive_key
from .quantum import QuantumAngles

FRAC_BITS = 64
ONE = 1 << FRAC_BITS
MASK = ONE - 1

_M = [np.uint64(m) for m in (
    0x5555555555555555, 0x3333333333333333, 0x0F0F0F0F0F0F0F0F,
    0x00FF00FF00FF00FF, 0x0000FFFF0000FFFF, 0x00000000FFFFFFFF,
)]


def to_fixed(x: float) -> int:
    """Nearest 64-bit fixed-point fraction to ``x mod 1``."""
    return int(round(math.ldexp(x % 1.0, FRAC_BITS))) & MASK


def from_fixed(v: int) -> float:
    return int(v) / ONE


def setting_fraction(angle: float) -> int:
    """Angle in radians as a fixed-point fraction of a full turn."""
    return to_fixed(angle / (2 * math.pi))


def _even_bits(v: np.ndarray) -> np.ndarray:
    v = v & _M[0]
    v = (v | (v >> np.uint64(1))) & _M[1]
    v = (v | (v >> np.uint64(2))) & _M[2]
    v = (v | (v >> np.uint64(4))) & _M[3]
    v = (v | (v >> np.uint64(8))) & _M[4]
    v = (v | (v >> np.uint64(16))) & _M[5]
    return v


def split_uniforms(lam) -> tuple[np.ndarray, np.ndarray]:
    """De-interleave ``lam`` into two 32-bit uniforms: even bits, odd bits."""
    v = np.asarray(lam, dtype=np.uint64)
    u1 = _even_bits(v).astype(np.float64) / 2.0**32
    u2 = _even_bits(v >> np.uint64(1)).astype(np.float64) / 2.0**32
    return u1, u2


@dataclass(frozen=True)
class HPHiddenState:
    """Fixed-point hidden variables of one trial (see module docstring)."""

    lam_star: int
    lam_star2: int
    lam: int
    r1: int
    r2: int

    def as_floats(self) -> dict[str, float]:
        return {k: from_fixed(getattr(self, k)) for k in ("lam_star", "lam_star2", "lam", "r1", "r2")}


def hp_sample_fixed(a: int, b: int, u: Sequence[int]) -> HPHiddenState:
    lam_star, lam_star2, lam = (int(v) & MASK for v in u)
    return HPHiddenState(lam_star, lam_star2, lam, (lam_star2 + a) & MASK, (lam_star + b) & MASK)


def hp_sample(a: float, b: float, u: Sequence[float]) -> HPHiddenState:
    """Hidden state for settings ``a``, ``b`` (turn fractions) and three
    uniforms ``u = (lam_star, lam_star2, lam)``."""
    return hp_sample_fixed(to_fixed(a), to_fixed(b), [to_fixed(v) for v in u])


def hp_reconstruct_fixed(h: HPHiddenState) -> tuple[int, int]:
    return (h.r1 - h.lam_star2) & MASK, (h.r2 - h.lam_star) & MASK


def hp_reconstruct_settings(h: HPHiddenState) -> tuple[float, float]:
    a, b = hp_reconstruct_fixed(h)
    return from_fixed(a), from_fixed(b)


def _joint_outputs(fa, fb, lam):
    u1, u2 = split_uniforms(lam)
    turn = ((np.asarray(fa, dtype=np.uint64) - np.asarray(fb, dtype=np.uint64))).astype(np.float64) / 2.0**64
    p_equal = np.cos(2 * np.pi * turn) ** 2
    x = np.where(u1 < 0.5, 1, -1).astype(np.int8)
    y = np.where(u2 < p_equal, x, -x).astype(np.int8)
    return x, y


def station_a_output(lam_star: int, lam: int, r: tuple[int, int], a: int) -> int:
    """A(lam_star, lam, R, a): recovers ``b`` from ``r2 - lam_star``."""
    b = (r[1] - lam_star) & MASK
    return int(_joint_outputs(a, b, lam)[0])


def station_b_output(lam_star2: int, lam: int, r: tuple[int, int], b: int) -> int:
    """B(lam_star2, lam, R, b): recovers ``a`` from ``r1 - lam_star2``."""
    a = (r[0] - lam_star2) & MASK
    return int(_joint_outputs(a, b, lam)[1])


def hp_outputs(h: HPHiddenState, a: int, b: int, angles: QuantumAngles | None = None) -> tuple[int, int]:
    """Outcomes of both stations for setting labels ``a``, ``b`` (1 or 2)."""
    angles = angles or QuantumAngles()
    fa, fb = setting_fraction(angles.alpha(a)), setting_fraction(angles.beta(b))
    got_a, got_b = hp_reconstruct_fixed(h)
    if (got_a, got_b) != (fa, fb):
        raise InvalidHiddenState(
            f"hidden state encodes settings ({from_fixed(got_a)}, {from_fixed(got_b)}), "
            f"not ({from_fixed(fa)}, {from_fixed(fb)})"
        )
    r = (h.r1, h.r2)
    return station_a_output(h.lam_star, h.lam, r, fa), station_b_output(h.lam_star2, h.lam, r, fb)


@dataclass
class HPSamples:
    """Many HP trials as parallel arrays (fixed-point columns are uint64)."""

    a: np.ndarray
    b: np.ndarray
    fa: np.ndarray
    fb: np.ndarray
    lam_star: np.ndarray
    lam_star2: np.ndarray
    lam: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.a)

    def state(self, i: int) -> HPHiddenState:
        return HPHiddenState(int(self.lam_star[i]), int(self.lam_star2[i]), int(self.lam[i]),
                             int(self.r1[i]), int(self.r2[i]))


def hp_trials(count: int, seed: int = 0, angles: QuantumAngles | None = None,
              a: int | None = None, b: int | None = None) -> HPSamples:
    """Draw ``count`` HP trials.  Settings are fair coins unless fixed."""
    angles = angles or QuantumAngles()
    gen = np.random.Generator(np.random.Philox(key=derive_key(seed, "hp")))
    if a is None:
        a_lab = gen.integers(1, 3, size=count).astype(np.int8)
    else:
        a_lab = np.full(count, a, dtype=np.int8)
    if b is None:
        b_lab = gen.integers(1, 3, size=count).astype(np.int8)
    else:
        b_lab = np.full(count, b, dtype=np.int8)
    alpha_fx = np.array([setting_fraction(angles.alpha1), setting_fraction(angles.alpha2)], dtype=np.uint64)
    beta_fx = np.array([setting_fraction(angles.beta1), setting_fraction(angles.beta2)], dtype=np.uint64)
    fa = alpha_fx[a_lab - 1]
    fb = beta_fx[b_lab - 1]
    raw = gen.bit_generator.random_raw(3 * count).reshape(3, count).astype(np.uint64)
    lam_star, lam_star2, lam = raw
    r1 = lam_star2 + fa
    r2 = lam_star + fb
    # each station uses only its own arguments
    b_seen = r2 - lam_star
    a_seen = r1 - lam_star2
    x, _ = _joint_outputs(fa, b_seen, lam)
    _, y = _joint_outputs(a_seen, fb, lam)
    return HPSamples(a_lab, b_lab, fa, fb, lam_star, lam_star2, lam, r1, r2, x, y)
