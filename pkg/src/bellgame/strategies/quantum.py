"""Singlet-type correlations and the nonlocal model that produces them."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from ..protocol import Strategy

# sampling order for inverse-CDF draws
OUTCOME_ORDER = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class QuantumAngles:
    """Measurement angles (radians) for settings 1 and 2 in each wing.

    The defaults put the large equal-outcome probability on the (1, 2) pair
    and the small one on the other three, which is the sign convention the
    CHSH contrast ``rho12 - rho11 - rho21 - rho22`` expects.
    """

    alpha1: float = 3 * math.pi / 8
    alpha2: float = -3 * math.pi / 8
    beta1: float = 0.0
    beta2: float = math.pi / 4

    @classmethod
    def as_printed(cls) -> QuantumAngles:
        """A widely printed angle set with the opposite labelling.

        Here the large equality probability falls on (a, b) = (2, 1) rather
        than (1, 2).  Kept for comparison only.
        """
        return cls(-math.pi / 4 - math.pi / 8, -math.pi / 8, 0.0, math.pi / 4)

    def alpha(self, a: int) -> float:
        return self.alpha1 if a == 1 else self.alpha2

    def beta(self, b: int) -> float:
        return self.beta1 if b == 1 else self.beta2


@dataclass(frozen=True)
class JointOutcomeDistribution:
    pp: float
    pm: float
    mp: float
    mm: float

    def __iter__(self):
        return iter((self.pp, self.pm, self.mp, self.mm))

    def prob(self, x: int, y: int) -> float:
        return {(1, 1): self.pp, (1, -1): self.pm, (-1, 1): self.mp, (-1, -1): self.mm}[x, y]

    @property
    def equal(self) -> float:
        return self.pp + self.mm

    @property
    def marginal_x_plus(self) -> float:
        return self.pp + self.pm

    @property
    def marginal_y_plus(self) -> float:
        return self.pp + self.mp


def quantum_equal_prob(angles: QuantumAngles, a: int, b: int) -> float:
    return math.cos(angles.alpha(a) - angles.beta(b)) ** 2


def quantum_joint_distribution(angles: QuantumAngles, a: int, b: int) -> JointOutcomeDistribution:
    d = angles.alpha(a) - angles.beta(b)
    same = 0.5 * math.cos(d) ** 2
    diff = 0.5 * math.sin(d) ** 2
    return JointOutcomeDistribution(same, diff, diff, same)


def sample_joint(dist: JointOutcomeDistribution, u: float) -> tuple[int, int]:
    """Inverse-CDF draw from ``dist`` in the order ++, +-, -+, --."""
    acc = 0.0
    for outcome, p in zip(OUTCOME_ORDER, dist):
        acc += p
        if u < acc:
            return outcome
    return OUTCOME_ORDER[-1]


def quantum_oracle_sample(angles: QuantumAngles, a: int, b: int, u: float) -> tuple[int, int]:
    return sample_joint(quantum_joint_distribution(angles, a, b), u)


def quantum_oracle_batch(angles: QuantumAngles, a: np.ndarray, b: np.ndarray,
                         u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``quantum_oracle_sample`` for arrays of settings and uniforms."""
    alpha = np.where(a == 1, angles.alpha1, angles.alpha2)
    beta = np.where(b == 1, angles.beta1, angles.beta2)
    same = 0.5 * np.cos(alpha - beta) ** 2
    diff = 0.5 - same
    x = np.where(u < 0.5, 1, -1).astype(np.int8)
    # within the x=+1 half the CDF is (same, same+diff); mirrored for x=-1
    y_plus = np.where(u < 0.5, u < same, u < 0.5 + diff)
    y = np.where(y_plus, 1, -1).astype(np.int8)
    return x, y


class QuantumCheat(Strategy):
    """Reproduces the quantum law by breaking locality.

    The source sends the same uniform ``u`` to both stations.  Station X
    answers with the first coordinate of the inverse-CDF draw, which does
    not depend on either setting.  It also writes its setting onto a wire
    held by the strategy object; station Y reads the wire and answers with
    the second coordinate of ``quantum_oracle_sample(angles, a, b, u)``.
    The wire is the illegal channel: it is not node state and the engine
    never hands it to anyone.
    """

    name = "quantum-cheat"
    legal = False

    def __init__(self, seed: int = 0, angles: QuantumAngles | None = None):
        super().__init__(seed)
        self.angles = angles or QuantumAngles()
        self._wire: int | None = None

    def params(self):
        a = self.angles
        return {"angles": [a.alpha1, a.alpha2, a.beta1, a.beta2]}

    def initial_states(self):
        return (None, None, None)

    def source_emit(self, n, source_state):
        msg = struct.pack("<d", self.stream.uniform(n))
        return msg, msg

    def station_respond(self, wing, station_state, msg, setting):
        (u,) = struct.unpack("<d", msg)
        if wing == "X":
            self._wire = setting
            return 1 if u < 0.5 else -1
        return quantum_oracle_sample(self.angles, self._wire, setting, u)[1]

    def snapshot(self, states):
        return states


class QuantumOracle(QuantumCheat):
    """Same program as ``QuantumCheat``, registered as the reference model of
    what the quantum prediction looks like in a match."""

    name = "quantum-oracle"
