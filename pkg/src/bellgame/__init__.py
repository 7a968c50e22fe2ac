"""Referee, adversaries and statistics for a sequential CHSH game.

Two randomizers pick settings, a source and two stations play a strategy,
and the referee scores the outcome sequence with Z, the CHSH contrast and
martingale tail bounds.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BellGameError,
    EmptyInput,
    EmptyMatch,
    InconsistentInputs,
    InsufficientData,
    InvalidHiddenState,
    InvalidParameter,
    ReplayMismatch,
    SnapshotUnsupported,
    StrategyError,
    TapeExhausted,
    UndefinedCorrelation,
)
from .protocol import (  # noqa: E402
    DEFAULT_N,
    WEIHS_BIASES,
    CoinTape,
    Match,
    Strategy,
    Transcript,
    TrialRecord,
    check_information_flow,
    draw_setting,
    make_coin_tape,
    make_tapes,
    replay,
    run_match,
    verify_transcript,
)
from .stats import (  # noqa: E402
    CountsTable,
    bound_report,
    chsh,
    correlation,
    correlations,
    hoeffding_tail,
    increment_series,
    increments,
    martingale_pvalue,
    summarize,
    tally,
    thinned_pvalue,
    thinning_multiplier,
    z_statistic,
)
from .strategies import LEGAL_STRATEGIES, REGISTRY, make_strategy  # noqa: E402

__all__ = [
    "BellGameError", "CoinTape", "CountsTable", "DEFAULT_N", "EmptyInput", "EmptyMatch", "InconsistentInputs",
    "InsufficientData", "InvalidHiddenState", "InvalidParameter", "LEGAL_STRATEGIES", "Match", "REGISTRY",
    "ReplayMismatch", "SnapshotUnsupported", "Strategy", "StrategyError", "TapeExhausted", "Transcript",
    "TrialRecord", "UndefinedCorrelation", "WEIHS_BIASES", "bound_report", "check_information_flow", "chsh",
    "correlation", "correlations", "draw_setting", "hoeffding_tail", "increment_series", "increments",
    "make_coin_tape", "make_strategy", "make_tapes", "martingale_pvalue", "replay", "run_match", "summarize",
    "tally", "thinned_pvalue", "thinning_multiplier", "verify_transcript", "z_statistic",
]
