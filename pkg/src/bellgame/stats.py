"""Counts, correlations, the CHSH contrast, Z, and Hoeffding-type p-values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import EmptyInput, InconsistentInputs, InvalidParameter, UndefinedCorrelation
from .protocol import Transcript

PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
# sign of each pair in Z and in the contrast
SIGNS = {(1, 2): 1, (1, 1): -1, (2, 1): -1, (2, 2): -1}


@dataclass(frozen=True)
class CountsTable:
    """Equal/unequal outcome tallies per setting pair."""

    equal: Mapping[tuple[int, int], int]
    unequal: Mapping[tuple[int, int], int]

    def __post_init__(self):
        equal = {p: int(self.equal.get(p, 0)) for p in PAIRS}
        unequal = {p: int(self.unequal.get(p, 0)) for p in PAIRS}
        if min(equal.values()) < 0 or min(unequal.values()) < 0:
            raise InvalidParameter("counts must be nonnegative")
        object.__setattr__(self, "equal", equal)
        object.__setattr__(self, "unequal", unequal)

    def total(self, a: int, b: int) -> int:
        return self.equal[a, b] + self.unequal[a, b]

    @property
    def N(self) -> int:
        return sum(self.total(a, b) for a, b in PAIRS)

    @property
    def M(self) -> int:
        """Trials with a nonzero increment, i.e. with equal outcomes."""
        return sum(self.equal[p] for p in PAIRS)

    @classmethod
    def from_cells(cls, cells: Mapping[tuple[int, int, int, int], int]) -> CountsTable:
        """From the 16 counts of ``(a, b, x, y)``."""
        equal = {p: 0 for p in PAIRS}
        unequal = {p: 0 for p in PAIRS}
        for (a, b, x, y), count in cells.items():
            if (a, b) not in equal or x not in (1, -1) or y not in (1, -1):
                raise InvalidParameter(f"bad cell key {(a, b, x, y)}")
            if count < 0:
                raise InvalidParameter(f"negative count in cell {(a, b, x, y)}")
            (equal if x == y else unequal)[a, b] += int(count)
        return cls(equal, unequal)


def tally(t: Transcript) -> CountsTable:
    if len(t) == 0:
        raise EmptyInput("cannot tally an empty transcript")
    eq = t.x == t.y
    equal, unequal = {}, {}
    for a, b in PAIRS:
        sel = (t.a == a) & (t.b == b)
        equal[a, b] = int(np.count_nonzero(sel & eq))
        unequal[a, b] = int(np.count_nonzero(sel & ~eq))
    return CountsTable(equal, unequal)


def correlation(c: CountsTable, a: int, b: int) -> float:
    n = c.total(a, b)
    if n == 0:
        raise UndefinedCorrelation(a, b)
    return (c.equal[a, b] - c.unequal[a, b]) / n


def correlations(c: CountsTable) -> dict[tuple[int, int], float]:
    return {(a, b): correlation(c, a, b) for a, b in PAIRS}


def p_equal(c: CountsTable) -> dict[tuple[int, int], float]:
    out = {}
    for a, b in PAIRS:
        n = c.total(a, b)
        if n == 0:
            raise UndefinedCorrelation(a, b)
        out[a, b] = c.equal[a, b] / n
    return out


def chsh(rho12: float, rho11: float, rho21: float, rho22: float) -> float:
    return rho12 - rho11 - rho21 - rho22


def z_statistic(c: CountsTable) -> int:
    return sum(SIGNS[p] * c.equal[p] for p in PAIRS)


def increments(t: Transcript) -> np.ndarray:
    """Per-trial increments: +1 / -1 for equal outcomes at (1,2) / elsewhere, 0 if unequal."""
    sign = np.where((t.a == 1) & (t.b == 2), 1, -1)
    return np.where(t.x == t.y, sign, 0).astype(np.int64)


def increment_series(t: Transcript) -> tuple[np.ndarray, np.ndarray]:
    """Increments and partial sums; the partial sums start with Z(0) = 0."""
    delta = increments(t)
    partial = np.concatenate(([0], np.cumsum(delta)))
    return delta, partial


def hoeffding_tail(k: float) -> float:
    """Bound on P(max_n Z(n) >= k sqrt(N)) for a supermartingale with unit steps."""
    if k < 0:
        raise InvalidParameter(f"k must be nonnegative, got {k}")
    return math.exp(-0.5 * k * k)


def martingale_pvalue(Z: int, N: int) -> float:
    if N < 1:
        raise InvalidParameter(f"N must be positive, got {N}")
    if Z <= 0:
        return 1.0
    return min(1.0, math.exp(-Z * Z / (2.0 * N)))


def thinned_pvalue(Z: int, M: int) -> float:
    """p-value with time counted only at trials whose increment is nonzero."""
    if M < 0:
        raise InvalidParameter(f"M must be nonnegative, got {M}")
    if abs(Z) > M:
        raise InconsistentInputs(f"|Z| = {abs(Z)} exceeds the {M} nonzero increments")
    if Z <= 0:
        return 1.0
    return min(1.0, math.exp(-Z * Z / (2.0 * M)))


def thinning_multiplier(fraction: float) -> float:
    """Factor by which k grows when only ``fraction`` of the trials move Z."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidParameter(f"fraction must lie in (0, 1], got {fraction}")
    return 1.0 / math.sqrt(fraction)


@dataclass(frozen=True)
class BoundReport:
    k: float
    raw_pvalue: float
    thinned_pvalue: float
    effective_k: float


def bound_report(Z: int, N: int, M: int) -> BoundReport:
    k = Z / math.sqrt(N)
    eff = Z / math.sqrt(M) if M > 0 else 0.0
    return BoundReport(k, martingale_pvalue(Z, N), thinned_pvalue(Z, M), eff)


@dataclass(frozen=True)
class ChshSummary:
    counts: CountsTable
    rho: dict[tuple[int, int], float | None]
    p_equal: dict[tuple[int, int], float | None]
    S: float | None
    Z: int
    M: int
    bounds: BoundReport
    undefined: tuple[tuple[int, int], ...]

    @property
    def N(self) -> int:
        return self.counts.N

    @property
    def z_diagnostic(self) -> float | None:
        """N (S - 2) / 8, the quantity Z approximates when the four N_ab are near N/4."""
        return None if self.S is None else self.N * (self.S - 2.0) / 8.0

    def to_dict(self) -> dict:
        """JSON-ready summary.  Key order is fixed."""
        key = lambda p: f"{p[0]}{p[1]}"  # noqa: E731
        c = self.counts
        return {
            "N": self.N,
            "counts": {
                f"a{a}b{b}": {"equal": c.equal[a, b], "unequal": c.unequal[a, b], "total": c.total(a, b)}
                for a, b in PAIRS
            },
            "rho": {key(p): self.rho[p] for p in PAIRS},
            "p_equal": {key(p): self.p_equal[p] for p in PAIRS},
            "S": self.S,
            "Z": self.Z,
            "M": self.M,
            "z_diagnostic": self.z_diagnostic,
            "k": self.bounds.k,
            "raw_pvalue": self.bounds.raw_pvalue,
            "effective_k": self.bounds.effective_k,
            "thinned_pvalue": self.bounds.thinned_pvalue,
            "undefined_correlations": [key(p) for p in self.undefined],
        }


def summarize(c: CountsTable) -> ChshSummary:
    """Every statistic at once.  An empty setting pair leaves S undefined but not Z."""
    if c.N == 0:
        raise EmptyInput("counts table is empty")
    rho: dict[tuple[int, int], float | None] = {}
    peq: dict[tuple[int, int], float | None] = {}
    undefined = []
    for a, b in PAIRS:
        try:
            rho[a, b] = correlation(c, a, b)
            peq[a, b] = c.equal[a, b] / c.total(a, b)
        except UndefinedCorrelation:
            rho[a, b] = peq[a, b] = None
            undefined.append((a, b))
    S = None if undefined else chsh(rho[1, 2], rho[1, 1], rho[2, 1], rho[2, 2])
    Z = z_statistic(c)
    return ChshSummary(c, rho, peq, S, Z, c.M, bound_report(Z, c.N, c.M), tuple(undefined))
