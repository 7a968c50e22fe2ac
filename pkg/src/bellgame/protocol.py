"""The five-computer game: randomizers A and B, source O, stations X and Y.

One trial runs in a fixed order:

1. the source emits one opaque message per station,
2. the randomizers deliver setting labels read from their coin tapes,
3. station X answers from (its state, its message, a); station Y answers
   from (its state, its message, b),
4. the referee records (a, b, x, y),
5. the adversary's three nodes resynchronise; every past setting and
   outcome is visible to them from now on.

The engine owns the node states and hands each callback only what its node
may see.  Strategy *code* is trusted to stay inside those arguments;
:func:`check_information_flow` tests that it does.
"""

from __future__ import annotations

import copy
import hashlib
import pickle
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    BellGameError,
    EmptyMatch,
    InvalidParameter,
    ReplayMismatch,
    SnapshotUnsupported,
    StrategyError,
    TapeExhausted,
)
from .rng import RandomStream

DEFAULT_N = 15_000
WEIHS_BIASES = (0.48, 0.42)


class Setting(IntEnum):
    ONE = 1
    TWO = 2


class Outcome(IntEnum):
    PLUS = 1
    MINUS = -1


class TrialRecord(NamedTuple):
    n: int
    a: int
    b: int
    x: int
    y: int


# ---------------------------------------------------------------------------
# coin tapes

@dataclass(frozen=True, eq=False)
class CoinTape:
    """Pre-tossed coins for one randomizer.  Bit 1 has probability ``bias``."""

    bits: np.ndarray
    bias: float
    seed: int
    wing: str

    def __post_init__(self):
        self.bits.setflags(write=False)

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoinTape):
            return NotImplemented
        return (self.bias, self.seed, self.wing) == (other.bias, other.seed, other.wing) and np.array_equal(
            self.bits, other.bits
        )

    def settings(self, count: int | None = None) -> np.ndarray:
        """Setting labels (1 or 2) for the first ``count`` trials."""
        count = len(self) if count is None else count
        if count > len(self):
            raise TapeExhausted(f"tape {self.wing} holds {len(self)} bits, {count} requested")
        return self.bits[:count].astype(np.int8) + 1

    def flipped(self, index: int) -> CoinTape:
        """Copy with the 1-based bit ``index`` inverted (fault injection)."""
        bits = self.bits.copy()
        bits[index - 1] ^= 1
        return CoinTape(bits, self.bias, self.seed, self.wing)


def make_coin_tape(seed: int, length: int, bias: float = 0.5, wing: str = "A") -> CoinTape:
    if not 0.0 <= bias <= 1.0:
        raise InvalidParameter(f"bias must lie in [0, 1], got {bias}")
    if length < 1:
        raise InvalidParameter(f"tape length must be positive, got {length}")
    if wing not in ("A", "B"):
        raise InvalidParameter(f"wing must be 'A' or 'B', got {wing!r}")
    u = RandomStream(seed, f"referee/{wing}").uniforms(0, length)
    return CoinTape((u < bias).astype(np.uint8), float(bias), int(seed), wing)


def make_tapes(seed: int, length: int, biases: tuple[float, float] = (0.5, 0.5)) -> tuple[CoinTape, CoinTape]:
    return (
        make_coin_tape(seed, length, biases[0], "A"),
        make_coin_tape(seed, length, biases[1], "B"),
    )


def draw_setting(tape: CoinTape, index: int) -> Setting:
    """Setting delivered at 1-based trial ``index``: bit 0 -> 1, bit 1 -> 2."""
    if not 1 <= index <= len(tape):
        raise TapeExhausted(f"tape {tape.wing} has no bit {index} (length {len(tape)})")
    return Setting(int(tape.bits[index - 1]) + 1)


# ---------------------------------------------------------------------------
# transcripts

@dataclass(frozen=True, eq=False)
class Transcript:
    """The referee's record of a match: N quadruples plus a config echo."""

    a: np.ndarray
    b: np.ndarray
    x: np.ndarray
    y: np.ndarray
    config: dict[str, Any] = field(default_factory=dict)
    strategy: str = ""

    def __post_init__(self):
        lengths = {len(self.a), len(self.b), len(self.x), len(self.y)}
        if len(lengths) != 1:
            raise InvalidParameter("transcript columns differ in length")
        for col in (self.a, self.b, self.x, self.y):
            col.setflags(write=False)

    @classmethod
    def from_records(cls, records: Sequence[Sequence[int]], config: dict | None = None, strategy: str = "") -> Transcript:
        """Build from ``(a, b, x, y)`` tuples, or ``TrialRecord``s in index order."""
        rows = [tuple(r)[-4:] for r in records]
        arr = np.array(rows, dtype=np.int8).reshape(-1, 4)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 3].copy(), dict(config or {}), strategy)

    def __len__(self) -> int:
        return len(self.a)

    @property
    def N(self) -> int:
        return len(self.a)

    @property
    def records(self) -> Iterator[TrialRecord]:
        for i, (a, b, x, y) in enumerate(zip(self.a.tolist(), self.b.tolist(), self.x.tolist(), self.y.tolist())):
            yield TrialRecord(i + 1, a, b, x, y)

    def prefix(self, n: int) -> Transcript:
        return Transcript(self.a[:n].copy(), self.b[:n].copy(), self.x[:n].copy(), self.y[:n].copy(),
                          dict(self.config), self.strategy)

    def with_record(self, n: int, **changes: int) -> Transcript:
        """Copy with fields of 1-based record ``n`` replaced (fault injection)."""
        cols = {k: getattr(self, k).copy() for k in "abxy"}
        for k, v in changes.items():
            cols[k][n - 1] = v
        return Transcript(cols["a"], cols["b"], cols["x"], cols["y"], dict(self.config), self.strategy)


# ---------------------------------------------------------------------------
# strategies

class History:
    """Append-only record of everything revealed after each trial."""

    __slots__ = ("a", "b", "x", "y")

    def __init__(self):
        self.a: list[int] = []
        self.b: list[int] = []
        self.x: list[int] = []
        self.y: list[int] = []

    def __len__(self) -> int:
        return len(self.a)

    def append(self, a: int, b: int, x: int, y: int) -> None:
        self.a.append(a)
        self.b.append(b)
        self.x.append(x)
        self.y.append(y)

    def copy(self) -> History:
        h = History()
        h.a, h.b, h.x, h.y = self.a[:], self.b[:], self.x[:], self.y[:]
        return h


NodeStates = tuple[Any, Any, Any]


class Strategy(ABC):
    """An adversary: programs for the source and the two stations.

    Node state lives with the engine, not with the strategy object.  The
    callbacks below receive exactly what their node is allowed to see.
    Randomness must come from ``self.stream`` indexed by trial, so that a
    replay from a snapshot is exact.
    """

    name: str = "strategy"
    legal: bool = True
    supports_snapshot: bool = True

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.stream = RandomStream(self.seed, f"strategy/{self.name}")

    def params(self) -> dict[str, Any]:
        return {}

    def with_seed(self, seed: int) -> Strategy:
        """Same programs, fresh strategy randomness."""
        clone = copy.copy(self)
        clone.seed = int(seed)
        clone.stream = RandomStream(clone.seed, f"strategy/{self.name}")
        return clone

    @abstractmethod
    def initial_states(self) -> NodeStates:
        """States of (source, station X, station Y) before trial 1."""

    @abstractmethod
    def source_emit(self, n: int, source_state: Any) -> tuple[bytes, bytes]:
        ...

    @abstractmethod
    def station_respond(self, wing: str, station_state: Any, msg: bytes, setting: int) -> int:
        ...

    def inter_trial_sync(self, n: int, states: NodeStates, history: History) -> NodeStates:
        return states

    def snapshot(self, states: NodeStates) -> NodeStates:
        if not self.supports_snapshot:
            raise SnapshotUnsupported(f"strategy {self.name!r} cannot be cloned")
        return copy.deepcopy(states)


class Match:
    """A match in progress.  ``emit`` and ``respond`` may be split so that a
    cloned match can be frozen between source emission and setting delivery."""

    def __init__(self, strategy: Strategy):
        self.strategy = strategy
        self.states: NodeStates = strategy.initial_states()
        self.history = History()
        self.msgs: tuple[bytes, bytes] | None = None
        self.n = 1  # trial currently being played
        self._digest = hashlib.blake2b(digest_size=16)

    def emit(self) -> tuple[bytes, bytes]:
        n = self.n
        try:
            msg_x, msg_y = self.strategy.source_emit(n, self.states[0])
        except BellGameError:
            raise
        except Exception as exc:
            raise StrategyError(n, f"source_emit failed: {exc!r}") from exc
        if not isinstance(msg_x, (bytes, bytearray)) or not isinstance(msg_y, (bytes, bytearray)):
            raise StrategyError(n, "source messages must be bytes")
        self.msgs = (msg_x, msg_y)
        return self.msgs

    def respond(self, wing: str, setting: int) -> int:
        n = self.n
        if self.msgs is None:
            raise StrategyError(n, "station called before source emission")
        idx = 1 if wing == "X" else 2
        try:
            out = self.strategy.station_respond(wing, self.states[idx], self.msgs[idx - 1], setting)
        except BellGameError:
            raise
        except Exception as exc:
            raise StrategyError(n, f"station {wing} failed: {exc!r}") from exc
        if out != 1 and out != -1:
            raise StrategyError(n, f"station {wing} returned {out!r}, not +1 or -1")
        return int(out)

    def commit(self, a: int, b: int, x: int, y: int) -> None:
        """Referee records the trial; then the adversary's nodes resynchronise."""
        n = self.n
        if self._digest is None:
            raise StrategyError(n, "a probe-only fork cannot commit a trial")
        msg_x, msg_y = self.msgs
        self._digest.update(b"%d:%b:%d:%b" % (len(msg_x), msg_x, len(msg_y), msg_y))
        self.history.append(a, b, x, y)
        self.msgs = None
        self.n = n + 1
        try:
            self.states = self.strategy.inter_trial_sync(n, self.states, self.history)
        except BellGameError:
            raise
        except Exception as exc:
            raise StrategyError(n, f"inter_trial_sync failed: {exc!r}") from exc

    def step(self, a: int, b: int) -> tuple[int, int]:
        self.emit()
        x = self.respond("X", a)
        y = self.respond("Y", b)
        self.commit(a, b, x, y)
        return x, y

    def fork(self, full: bool = True, strategy: Strategy | None = None) -> Match:
        """Thought-experiment clone: identical state, independent future.

        With ``full=False`` the clone shares the (read-only) history and may
        only answer station queries for the current trial, not commit it.
        ``strategy`` swaps in the same programs with other randomness.
        """
        other = Match.__new__(Match)
        other.strategy = strategy or self.strategy
        other.states = self.strategy.snapshot(self.states)
        other.history = self.history.copy() if full else self.history
        other.msgs = self.msgs
        other.n = self.n
        other._digest = self._digest.copy() if full else None
        return other

    @property
    def message_digest(self) -> str:
        return self._digest.hexdigest()


def run_match(strategy: Strategy, tapes: tuple[CoinTape, CoinTape], N: int = DEFAULT_N) -> Transcript:
    if N < 1:
        raise EmptyMatch(f"a match needs at least one trial, got N={N}")
    tape_a, tape_b = tapes
    a_seq = tape_a.settings(N).tolist()
    b_seq = tape_b.settings(N).tolist()
    match = Match(strategy)
    xs = np.empty(N, dtype=np.int8)
    ys = np.empty(N, dtype=np.int8)
    step = match.step
    for i in range(N):
        xs[i], ys[i] = step(a_seq[i], b_seq[i])
    config = {
        "N": N,
        "strategy": strategy.name,
        "params": strategy.params(),
        "seeds": {"referee": [tape_a.seed, tape_b.seed], "strategy": strategy.seed},
        "biases": [tape_a.bias, tape_b.bias],
        "message_digest": match.message_digest,
    }
    return Transcript(np.array(a_seq, dtype=np.int8), np.array(b_seq, dtype=np.int8), xs, ys, config, strategy.name)


def replay(strategy: Strategy, transcript: Transcript, upto: int) -> Match:
    """Re-run the first ``upto`` trials of ``transcript`` with its settings.

    Returns the match positioned at trial ``upto + 1``.  Raises
    ``ReplayMismatch`` if the strategy does not reproduce the outcomes.
    """
    match = Match(strategy)
    for i, (a, b, x, y) in enumerate(zip(transcript.a[:upto].tolist(), transcript.b[:upto].tolist(),
                                          transcript.x[:upto].tolist(), transcript.y[:upto].tolist())):
        got = match.step(a, b)
        if got != (x, y):
            raise ReplayMismatch(f"trial {i + 1}: replay gave {got}, transcript has {(x, y)}")
    return match


# ---------------------------------------------------------------------------
# referee checks

@dataclass
class VerificationReport:
    labels_match: bool
    violations: list[tuple[int, str]]


def verify_transcript(transcript: Transcript, tapes: tuple[CoinTape, CoinTape]) -> VerificationReport:
    """Confirm every recorded label equals what the randomizers delivered."""
    violations: list[tuple[int, str]] = []
    N = len(transcript)
    for wing, col, tape in (("A", transcript.a, tapes[0]), ("B", transcript.b, tapes[1])):
        usable = min(N, len(tape))
        expected = tape.bits[:usable].astype(np.int8) + 1
        for i in np.flatnonzero(col[:usable] != expected):
            violations.append((int(i) + 1, wing))
        for n in range(usable + 1, N + 1):
            violations.append((n, wing))
    violations.sort()
    return VerificationReport(labels_match=not violations, violations=violations)


@dataclass
class FlowReport:
    """Result of the counterfactual information-flow check.

    ``inputs`` holds the spy's log: for each probed trial and wing, a digest
    of everything the station was handed.  A violation at ``(n, wing)``
    means that station's output changed when only the *other* wing's
    setting was changed, with its own inputs held fixed.
    """

    probed: int
    violations: list[tuple[int, str]]
    inputs: list[tuple[int, str, str]]

    @property
    def passed(self) -> bool:
        return not self.violations


class _Spy:
    """Wraps a strategy and logs a digest of each station's inputs."""

    def __init__(self, inner: Strategy):
        self.inner = inner
        self.log: list[tuple[str, str]] = []

    def __getattr__(self, item):
        return getattr(self.inner, item)

    def station_respond(self, wing, station_state, msg, setting):
        blob = pickle.dumps((station_state, bytes(msg), int(setting)))
        self.log.append((wing, hashlib.blake2b(blob, digest_size=8).hexdigest()))
        return self.inner.station_respond(wing, station_state, msg, setting)


def check_information_flow(strategy: Strategy, tapes: tuple[CoinTape, CoinTape], N: int,
                           probes: Sequence[int] | None = None) -> FlowReport:
    """Flip the far-side setting of a trial and see whether a station notices.

    At each probed trial the match is frozen after source emission and
    forked.  Station X's output is compared between the real branch and one
    where only ``b`` is flipped (station Y likewise with ``a``), each branch
    calling the stations in the engine's usual order.  A local strategy
    cannot tell the branches apart: its inputs are identical.
    """
    spy = _Spy(strategy)
    a_seq = tapes[0].settings(N).tolist()
    b_seq = tapes[1].settings(N).tolist()
    wanted = set(range(1, N + 1) if probes is None else probes)
    match = Match(spy)  # type: ignore[arg-type]
    violations: list[tuple[int, str]] = []
    inputs: list[tuple[int, str, str]] = []
    for i in range(N):
        n = i + 1
        a, b = a_seq[i], b_seq[i]
        match.emit()
        if n in wanted:
            outs = {}
            for fa, fb in ((a, b), (a, 3 - b), (3 - a, b)):
                branch = match.fork(full=False)
                start = len(spy.log)
                outs[fa, fb] = (branch.respond("X", fa), branch.respond("Y", fb))
                logged = spy.log[start:]
                del spy.log[start:]
                if (fa, fb) == (a, b):
                    inputs.extend((n, wing, digest) for wing, digest in logged)
            if outs[a, b][0] != outs[a, 3 - b][0]:
                violations.append((n, "X"))
            if outs[a, b][1] != outs[3 - a, b][1]:
                violations.append((n, "Y"))
        x = match.respond("X", a)
        y = match.respond("Y", b)
        del spy.log[:]
        match.commit(a, b, x, y)
    return FlowReport(probed=len(wanted), violations=violations, inputs=inputs)
