"""Local-realist adversaries.  All of them pass the information-flow check."""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import InvalidParameter
from ..protocol import History, Strategy
from ..rng import RandomStream

_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
_SIGN = {(1, 2): 1, (1, 1): -1, (2, 1): -1, (2, 2): -1}


def quadruple_value(x1: int, x2: int, y1: int, y2: int) -> int:
    return int(x1 == y2) - int(x1 == y1) - int(x2 == y1) - int(x2 == y2)


ALL_QUADRUPLES = tuple(itertools.product((1, -1), repeat=4))
# the eight tables whose increment has conditional mean 0 (the best a local
# adversary can do); each sacrifices exactly one setting pair
BEST_QUADRUPLES = tuple(q for q in ALL_QUADRUPLES if quadruple_value(*q) == 0)


def _sacrificed_pair(q: tuple[int, int, int, int]) -> tuple[int, int]:
    x1, x2, y1, y2 = q
    xs, ys = {1: x1, 2: x2}, {1: y1, 2: y2}
    for a, b in _PAIRS:
        equal = xs[a] == ys[b]
        if equal != (_SIGN[a, b] > 0):
            return a, b
    raise ValueError(f"{q} sacrifices no pair")


SACRIFICE = {}
for _q in BEST_QUADRUPLES:
    SACRIFICE.setdefault(_sacrificed_pair(_q), []).append(_q)


class _StoredTable:
    """A station's copy of the pre-stored answer table."""

    __slots__ = ("rows", "stream")

    def __init__(self, rows, stream: RandomStream):
        self.rows = rows
        self.stream = stream

    def __call__(self, n: int) -> tuple[int, int, int, int]:
        if self.rows is not None:
            return self.rows[(n - 1) % len(self.rows)]
        return BEST_QUADRUPLES[int(self.stream.uniform(n) * len(BEST_QUADRUPLES))]

    def __getstate__(self):
        return (self.rows, self.stream)

    def __setstate__(self, state):
        self.rows, self.stream = state


class DeterministicLHV(Strategy):
    """Stations read their answers from tables stored before the match.

    ``tables`` may be a single quadruple ``(x1, x2, y1, y2)`` used on every
    trial, a sequence of quadruples (one per trial, cycled), or ``None``
    for a pre-stored table of value-0 quadruples chosen at random per trial.
    """

    name = "deterministic-lhv"

    def __init__(self, seed: int = 0, tables=None):
        super().__init__(seed)
        if tables is None:
            self._tables = None
        else:
            arr = np.asarray(tables, dtype=int)
            if arr.ndim == 1:
                arr = arr.reshape(1, 4)
            if arr.ndim != 2 or arr.shape[1] != 4 or not np.isin(arr, (1, -1)).all():
                raise InvalidParameter("tables must be +/-1 quadruples (x1, x2, y1, y2)")
            self._tables = [tuple(int(v) for v in row) for row in arr]

    def params(self):
        return {"tables": None if self._tables is None else [list(t) for t in self._tables]}

    def initial_states(self):
        # both stations hold a copy of the same stored table
        table = _StoredTable(self._tables, self.stream)
        return (None, table, table)

    def source_emit(self, n, source_state):
        tag = n.to_bytes(8, "little")
        return tag, tag

    def station_respond(self, wing, station_state, msg, setting):
        n = int.from_bytes(msg, "little")
        x1, x2, y1, y2 = station_state(n)
        if wing == "X":
            return x1 if setting == 1 else x2
        return y1 if setting == 1 else y2

    def snapshot(self, states):
        return states


class MemoryLHV(Strategy):
    """Adapts to the whole past of the match.

    The source counts how often each setting pair has occurred and gives
    up the pair seen least often so far (ties and an ``explore`` fraction
    of trials are decided at random), sending each station its half of a
    value-0 table.  Each station keeps a parity bit of all past settings of
    both wings and flips its answer when it is odd, which changes no
    equality but makes the answers depend on the revealed history.
    """

    name = "memory-lhv"

    def __init__(self, seed: int = 0, explore: float = 0.1):
        super().__init__(seed)
        if not 0.0 <= explore <= 1.0:
            raise InvalidParameter(f"explore must lie in [0, 1], got {explore}")
        self.explore = float(explore)

    def params(self):
        return {"explore": self.explore}

    def initial_states(self):
        return ({"seen": [0, 0, 0, 0]}, {"parity": 0}, {"parity": 0})

    def source_emit(self, n, source_state):
        seen = source_state["seen"]
        u_explore = self.stream.uniform(3 * n)
        u_pick = self.stream.uniform(3 * n + 1)
        u_table = self.stream.uniform(3 * n + 2)
        if u_explore < self.explore:
            candidates = list(_PAIRS)
        else:
            low = min(seen)
            candidates = [p for p, c in zip(_PAIRS, seen) if c == low]
        pair = candidates[int(u_pick * len(candidates))]
        options = SACRIFICE[pair]
        x1, x2, y1, y2 = options[int(u_table * len(options))]
        return bytes([x1 & 3, x2 & 3]), bytes([y1 & 3, y2 & 3])

    def station_respond(self, wing, station_state, msg, setting):
        raw = msg[setting - 1]
        out = 1 if raw == 1 else -1
        return -out if station_state["parity"] else out

    def inter_trial_sync(self, n, states, history: History):
        source, sx, sy = states
        a, b = history.a[-1], history.b[-1]
        seen = list(source["seen"])
        seen[_PAIRS.index((a, b))] += 1
        parity = (sx["parity"] + a + b) & 1
        return ({"seen": seen}, {"parity": parity}, {"parity": parity})

    def snapshot(self, states):
        source, sx, sy = states
        return ({"seen": list(source["seen"])}, dict(sx), dict(sy))


class IIDRandom(Strategy):
    """Each station tosses its own fair coin and ignores its setting."""

    name = "iid-random"

    def initial_states(self):
        return (None, "X", "Y")

    def source_emit(self, n, source_state):
        tag = n.to_bytes(8, "little")
        return tag, tag

    def station_respond(self, wing, station_state, msg, setting):
        n = int.from_bytes(msg, "little")
        u = self.stream.uniform(2 * n + (wing == "Y"))
        return 1 if u < 0.5 else -1

    def snapshot(self, states):
        return states


def always_plus() -> DeterministicLHV:
    return DeterministicLHV(tables=(1, 1, 1, 1))
