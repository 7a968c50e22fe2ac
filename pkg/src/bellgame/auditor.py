"""Checks on the martingale argument itself.

The probes clone the adversary's computers right after source emission and
feed each clone both possible settings.  For a local strategy the four
answers ``(x1, x2, y1, y2)`` fix the increment for every setting pair, and
the expected increment under fair coins is a quarter of

    [x1 == y2] - [x1 == y1] - [x2 == y1] - [x2 == y2]

which is always 0 or -2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .errors import InsufficientData, InvalidParameter, ReplayMismatch, SnapshotUnsupported
from .protocol import Match, Strategy, Transcript, make_tapes, replay, run_match
from .rng import derive_seed
from .stats import hoeffding_tail, increment_series
from .strategies.hp import HPSamples
from .strategies.local import ALL_QUADRUPLES

_SIGN = {(1, 2): 1, (1, 1): -1, (2, 1): -1, (2, 2): -1}


@dataclass(frozen=True)
class CounterfactualQuadruple:
    x1: int
    x2: int
    y1: int
    y2: int

    def __iter__(self):
        return iter((self.x1, self.x2, self.y1, self.y2))

    def select(self, a: int, b: int) -> tuple[int, int]:
        return (self.x1 if a == 1 else self.x2), (self.y1 if b == 1 else self.y2)

    @property
    def product(self) -> int:
        return (self.x1 * self.y2) * (self.x1 * self.y1) * (self.x2 * self.y1) * (self.x2 * self.y2)


def increment_bound_value(q: Iterable[int]) -> int:
    x1, x2, y1, y2 = q
    return int(x1 == y2) - int(x1 == y1) - int(x2 == y1) - int(x2 == y2)


def lemma_table() -> list[tuple[tuple[int, int, int, int], int]]:
    """Every +/-1 quadruple with its increment value."""
    return [(q, increment_bound_value(q)) for q in ALL_QUADRUPLES]


def _probe_frozen(match: Match) -> CounterfactualQuadruple:
    """Quadruple for a match frozen after emission, one fresh clone per query."""
    x1 = match.fork(full=False).respond("X", 1)
    x2 = match.fork(full=False).respond("X", 2)
    y1 = match.fork(full=False).respond("Y", 1)
    y2 = match.fork(full=False).respond("Y", 2)
    return CounterfactualQuadruple(x1, x2, y1, y2)


def counterfactual_probe(strategy: Strategy, history: Transcript, n: int,
                         strict: bool = True) -> CounterfactualQuadruple:
    """Clone the stations at trial ``n`` of a recorded match and ask both settings.

    The first ``n - 1`` trials of ``history`` are replayed.  If ``history``
    also covers trial ``n`` and ``strict`` is set, the quadruple entry at
    the recorded settings must equal the recorded outcomes.
    """
    if not strategy.supports_snapshot:
        raise SnapshotUnsupported(f"strategy {strategy.name!r} cannot be cloned")
    if n < 1:
        raise InvalidParameter(f"trial index must be positive, got {n}")
    match = replay(strategy, history, n - 1)
    match.emit()
    q = _probe_frozen(match)
    if strict and len(history) >= n:
        a, b = int(history.a[n - 1]), int(history.b[n - 1])
        seen = (int(history.x[n - 1]), int(history.y[n - 1]))
        if q.select(a, b) != seen:
            raise ReplayMismatch(f"trial {n}: clones give {q.select(a, b)} at {(a, b)}, match had {seen}")
    return q


def _setting_weights(biases: tuple[float, float]) -> dict[tuple[int, int], float]:
    pa = {1: 1 - biases[0], 2: biases[0]}
    pb = {1: 1 - biases[1], 2: biases[1]}
    return {(a, b): pa[a] * pb[b] for a in (1, 2) for b in (1, 2)}


def conditional_drift(match: Match, biases: tuple[float, float] = (0.5, 0.5)) -> float:
    """Exact E[increment | everything up to emission] over the referee's coins.

    Each setting pair is played on its own clone, stations in engine order,
    so a strategy that leaks settings between wings is measured as it
    really behaves rather than through its counterfactual table.
    """
    total = 0.0
    for (a, b), w in _setting_weights(biases).items():
        branch = match.fork(full=False)
        x = branch.respond("X", a)
        y = branch.respond("Y", b)
        if x == y:
            total += w * _SIGN[a, b]
    return total


@dataclass
class AuditReport:
    strategy: str
    probes: int
    inner: int
    means: np.ndarray = field(repr=False)
    ses: np.ndarray = field(repr=False)
    flagged: list[int]
    lemma_violations: list[int]
    table_mismatches: int
    pooled_mean: float
    pooled_se: float
    max_partial_sum: int

    @property
    def pooled_z(self) -> float:
        if self.pooled_se == 0:
            return 0.0 if self.pooled_mean <= 0 else math.inf
        return self.pooled_mean / self.pooled_se

    @property
    def max_excess_se(self) -> float:
        """Largest per-history estimate in units of its own standard error."""
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.ses > 0, self.means / np.where(self.ses > 0, self.ses, 1.0),
                         np.where(self.means > 0, np.inf, 0.0))
        return float(z.max()) if z.size else 0.0

    @property
    def passed(self) -> bool:
        return not self.flagged and not self.lemma_violations and self.pooled_z <= 4.0

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "probes": self.probes,
            "inner": self.inner,
            "passed": self.passed,
            "flagged": len(self.flagged),
            "lemma_violations": len(self.lemma_violations),
            "table_mismatches": self.table_mismatches,
            "max_estimate": float(self.means.max()) if self.means.size else 0.0,
            "max_excess_se": self.max_excess_se,
            "pooled_mean": self.pooled_mean,
            "pooled_se": self.pooled_se,
            "pooled_z": self.pooled_z,
            "max_partial_sum": self.max_partial_sum,
        }


def supermartingale_mc(strategy: Strategy, N: int, reps: int, inner: int = 8, seed: int = 0,
                       biases: tuple[float, float] = (0.5, 0.5), z_flag: float = 4.0) -> AuditReport:
    """Estimate the conditional drift of Z at ``reps`` histories.

    Histories are the trials of ``ceil(reps / N)`` independent matches of
    length ``N``.  At each one the match is frozen just before trial ``n``,
    the trial's strategy randomness is redrawn ``inner`` times, and for each
    draw the drift is computed exactly over the referee's coins.  The
    estimate is the mean over draws; its standard error comes from their
    spread.
    """
    if not strategy.supports_snapshot:
        raise SnapshotUnsupported(f"strategy {strategy.name!r} cannot be cloned")
    if N < 1 or reps < 1 or inner < 1:
        raise InvalidParameter("N, reps and inner must be positive")
    fair = biases == (0.5, 0.5)
    means, ses = [], []
    flagged, lemma_bad = [], []
    mismatches = 0
    max_partial = 0
    n_matches = -(-reps // N)
    for m in range(n_matches):
        tapes = make_tapes(derive_seed(seed, "audit-tapes", m), N, biases)
        player = strategy.with_seed(derive_seed(seed, "audit-strategy", m))
        a_seq = tapes[0].settings(N).tolist()
        b_seq = tapes[1].settings(N).tolist()
        match = Match(player)
        z = 0
        for i in range(N):
            if len(means) == reps:
                break
            n = i + 1
            draws = np.empty(inner)
            for r in range(inner):
                replica = player.with_seed(derive_seed(seed, "audit-replica", m, n, r))
                branch = match.fork(full=False, strategy=replica)
                branch.emit()
                q = _probe_frozen(branch)
                value = increment_bound_value(q)
                if value not in (0, -2):
                    lemma_bad.append(len(means))
                draws[r] = conditional_drift(branch, biases)
                if fair and draws[r] != value / 4:
                    mismatches += 1
            mean = float(draws.mean())
            se = float(draws.std(ddof=1) / math.sqrt(inner)) if inner > 1 else 0.0
            if mean > z_flag * se + 1e-12:
                flagged.append(len(means))
            means.append(mean)
            ses.append(se)
            x, y = match.step(a_seq[i], b_seq[i])
            if x == y:
                z += _SIGN[a_seq[i], b_seq[i]]
                max_partial = max(max_partial, z)
    means_arr = np.array(means)
    pooled_se = float(means_arr.std(ddof=1) / math.sqrt(len(means_arr))) if len(means_arr) > 1 else 0.0
    return AuditReport(
        strategy=strategy.name,
        probes=len(means),
        inner=inner,
        means=means_arr,
        ses=np.array(ses),
        flagged=flagged,
        lemma_violations=lemma_bad,
        table_mismatches=mismatches,
        pooled_mean=float(means_arr.mean()),
        pooled_se=pooled_se,
        max_partial_sum=max_partial,
    )


@dataclass(frozen=True)
class TailRow:
    k: float
    bound: float
    exceed_max: int
    exceed_end: int
    reps: int

    @property
    def empirical(self) -> float:
        return self.exceed_max / self.reps

    @property
    def empirical_end(self) -> float:
        return self.exceed_end / self.reps

    @property
    def se(self) -> float:
        """Binomial standard error of a frequency whose true value equals the bound."""
        return math.sqrt(self.bound * (1 - self.bound) / self.reps)

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 4 * self.se


@dataclass
class TailReport:
    strategy: str
    N: int
    reps: int
    rows: list[TailRow]
    final_z: np.ndarray = field(repr=False)
    max_z: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "N": self.N,
            "reps": self.reps,
            "passed": self.passed,
            "rows": [
                {"k": r.k, "bound": r.bound, "empirical": r.empirical, "empirical_end": r.empirical_end,
                 "se": r.se, "passed": r.passed}
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "empirical", "bound"])
        for r in self.rows:
            w.writerow([r.k, r.empirical, r.bound])
        return buf.getvalue()


def tail_experiment(strategy: Strategy, N: int, reps: int, ks: Sequence[float], seed: int = 0,
                    biases: tuple[float, float] = (0.5, 0.5)) -> TailReport:
    """Frequency of ``max_n Z(n) >= k sqrt(N)`` over ``reps`` fresh matches."""
    if N < 1 or reps < 1:
        raise InvalidParameter("N and reps must be positive")
    final = np.empty(reps, dtype=np.int64)
    peak = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        tapes = make_tapes(derive_seed(seed, "tail-tapes", r), N, biases)
        t = run_match(strategy.with_seed(derive_seed(seed, "tail-strategy", r)), tapes, N)
        _, partial = increment_series(t)
        final[r] = partial[-1]
        peak[r] = partial.max()
    root = math.sqrt(N)
    rows = [
        TailRow(float(k), hoeffding_tail(k), int(np.count_nonzero(peak >= k * root)),
                int(np.count_nonzero(final >= k * root)), reps)
        for k in ks
    ]
    return TailReport(strategy.name, N, reps, rows, final, peak)


# ---------------------------------------------------------------------------
# HP caricature diagnostics

@dataclass
class IndependenceReport:
    tests: dict[str, dict[str, float]]
    reconstruction_rate: float
    alpha: float

    @property
    def reconstruction_ok(self) -> bool:
        return self.reconstruction_rate == 1.0

    @property
    def passed(self) -> bool:
        return self.reconstruction_ok and all(t["pvalue"] > self.alpha for t in self.tests.values())

    def to_dict(self) -> dict:
        return {"passed": self.passed, "alpha": self.alpha, "reconstruction_rate": self.reconstruction_rate,
                "tests": self.tests}


def _unit(v: np.ndarray) -> np.ndarray:
    return v.astype(np.float64) / 2.0**64


def _equal_bins(u: np.ndarray, bins: int) -> np.ndarray:
    return np.minimum((u * bins).astype(np.int64), bins - 1)


def _rank_bins(v: np.ndarray, bins: int) -> np.ndarray:
    ranks = np.argsort(np.argsort(v, kind="stable"), kind="stable")
    return (ranks * bins) // max(len(v), 1)


def _chi2(rows: np.ndarray, cols: np.ndarray, nr: int, nc: int) -> tuple[float, int]:
    table = np.zeros((nr, nc), dtype=np.int64)
    np.add.at(table, (rows, cols), 1)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return 0.0, 0
    stat, _, dof, _ = sps.chi2_contingency(table, correction=False)
    return float(stat), int(dof)


def hp_independence_suite(samples: HPSamples, bins: int = 10, r_cells: tuple[int, int] = (5, 4),
                          alpha: float = 0.001, min_samples: int = 10_000) -> IndependenceReport:
    """Independence properties the caricature satisfies, and the reconstruction it allows.

    Needs one fixed setting pair.  Runs chi-square tests of pairwise
    independence of the three uniforms on a ``bins`` x ``bins`` grid, and of
    (lam_star, lam_star2) versus lam within cells of R (stratified, statistics
    summed), then checks how often R and the station variables give back
    both settings exactly.
    """
    if len(samples) < min_samples:
        raise InsufficientData(f"need at least {min_samples} samples, got {len(samples)}")
    if len(np.unique(samples.fa)) != 1 or len(np.unique(samples.fb)) != 1:
        raise InvalidParameter("samples must share one setting pair")
    ls, ls2, lam = _unit(samples.lam_star), _unit(samples.lam_star2), _unit(samples.lam)
    tests: dict[str, dict[str, float]] = {}
    for name, u, v in (("lam_star~lam_star2", ls, ls2), ("lam_star~lam", ls, lam), ("lam_star2~lam", ls2, lam)):
        stat, dof = _chi2(_equal_bins(u, bins), _equal_bins(v, bins), bins, bins)
        tests[name] = {"statistic": stat, "dof": dof, "pvalue": float(sps.chi2.sf(stat, dof))}

    cell = _equal_bins(_unit(samples.r1), r_cells[0]) * r_cells[1] + _equal_bins(_unit(samples.r2), r_cells[1])
    lam_bins = _equal_bins(lam, bins)
    stat_sum, dof_sum = 0.0, 0
    for c in np.unique(cell):
        sel = cell == c
        pair = _rank_bins(ls[sel], 5) * 2 + _rank_bins(ls2[sel], 2)
        stat, dof = _chi2(pair, lam_bins[sel], 10, bins)
        stat_sum += stat
        dof_sum += dof
    tests["pair~lam|R"] = {"statistic": stat_sum, "dof": dof_sum,
                           "pvalue": float(sps.chi2.sf(stat_sum, dof_sum)) if dof_sum else 1.0}

    ok = ((samples.r1 - samples.lam_star2) == samples.fa) & ((samples.r2 - samples.lam_star) == samples.fb)
    return IndependenceReport(tests, float(np.count_nonzero(ok)) / len(samples), alpha)


def shuffled_reconstruction_rate(samples: HPSamples, seed: int = 0) -> float:
    """Share of ``b`` recovered after lam_star is shuffled across samples (control)."""
    rng = np.random.default_rng(seed)
    shuffled = samples.lam_star[rng.permutation(len(samples))]
    return float(np.count_nonzero((samples.r2 - shuffled) == samples.fb)) / len(samples)


def hp_transcript(samples: HPSamples) -> Transcript:
    return Transcript(samples.a.copy(), samples.b.copy(), samples.x.copy(), samples.y.copy(),
                      {"strategy": "hp-caricature", "N": len(samples)}, "hp-caricature")
