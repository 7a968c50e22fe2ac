"""Command-line front end.

    bellgame run --strategy quantum-oracle --n 100000 --seed 1 --out-dir out/
    bellgame analyze --dataset weihs
    bellgame analyze counts.json
    bellgame analyze --transcript out/transcript.jsonl
    bellgame audit lemma
    bellgame audit hp --samples 100000
    bellgame audit tail --strategy memory-lhv --reps 10000 --k 3
    bellgame audit supermartingale --strategy memory-lhv --reps 10000
    bellgame audit flow --strategy quantum-oracle
    bellgame bounds --k 0 4.29 12.25 --n 15000 --m-fraction 0.325

Exit codes: 0 ok, 1 a bound or locality violation was found, 2 bad usage or
input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .auditor import (
    hp_independence_suite,
    lemma_table,
    shuffled_reconstruction_rate,
    supermartingale_mc,
    tail_experiment,
)
from .datasets import DATASETS, load_dataset
from .errors import BellGameError
from .io import read_counts, read_transcript, write_tape, write_transcript
from .protocol import DEFAULT_N, WEIHS_BIASES, check_information_flow, make_tapes, run_match
from .rng import derive_seed
from .stats import hoeffding_tail, summarize, tally, thinning_multiplier
from .strategies import REGISTRY, hp_trials, make_strategy, quantum_equal_prob
from .strategies.quantum import QuantumAngles

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

PRESETS = {"fair": (0.5, 0.5), "weihs": WEIHS_BIASES}
TAIL_KS = (1.0, 2.0, 3.0)
BOUNDS_KS = (0.0, 1.0, 2.0, 3.0, 4.29, 12.25)


class UsageError(BellGameError):
    pass


@dataclass
class RunConfig:
    """Everything that determines a match.  Echoed verbatim into the transcript header."""

    strategy: str = "deterministic-lhv"
    N: int = DEFAULT_N
    params: dict[str, Any] = field(default_factory=dict)
    biases: tuple[float, float] = (0.5, 0.5)
    seed: int = 0
    strategy_seed: int | None = None
    out_dir: str | None = None
    transcript: str | None = None
    summary: str | None = None
    save_tapes: bool = False

    @classmethod
    def from_json(cls, path: str | Path) -> RunConfig:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"{path}: unknown config keys {sorted(unknown)}")
        if "biases" in raw:
            raw["biases"] = tuple(raw["biases"])
        return cls(**raw)

    def resolved_strategy_seed(self) -> int:
        return derive_seed(self.seed, "strategy") if self.strategy_seed is None else self.strategy_seed

    def paths(self) -> tuple[Path | None, Path | None]:
        transcript = Path(self.transcript) if self.transcript else None
        summary = Path(self.summary) if self.summary else None
        if self.out_dir:
            out = Path(self.out_dir)
            transcript = transcript or out / "transcript.jsonl"
            summary = summary or out / "summary.json"
        return transcript, summary


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _parse_param(text: str) -> tuple[str, Any]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise UsageError(f"--param expects key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def summary_document(summary, source: dict[str, Any]) -> dict[str, Any]:
    """Summary JSON: ``source`` first, then the statistics in fixed order."""
    return {"source": source, **summary.to_dict()}


def _biases_from_args(args: argparse.Namespace, base: tuple[float, float]) -> tuple[float, float]:
    biases = PRESETS[args.preset] if args.preset else base
    if args.bias_a is not None:
        biases = (args.bias_a, biases[1])
    if args.bias_b is not None:
        biases = (biases[0], args.bias_b)
    return tuple(float(p) for p in biases)  # type: ignore[return-value]


def build_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    overrides: dict[str, Any] = {}
    for name, attr in (("strategy", "strategy"), ("n", "N"), ("seed", "seed"), ("strategy_seed", "strategy_seed"),
                       ("out_dir", "out_dir"), ("transcript", "transcript"), ("summary", "summary")):
        value = getattr(args, name)
        if value is not None:
            overrides[attr] = value
    if args.save_tapes:
        overrides["save_tapes"] = True
    if args.param:
        overrides["params"] = {**cfg.params, **dict(_parse_param(p) for p in args.param)}
    overrides["biases"] = _biases_from_args(args, cfg.biases)
    return replace(cfg, **overrides)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    if cfg.strategy not in REGISTRY:
        raise UsageError(f"unknown strategy {cfg.strategy!r}; choose from {', '.join(REGISTRY)}")
    strategy = make_strategy(cfg.strategy, cfg.resolved_strategy_seed(), cfg.params)
    tapes = make_tapes(cfg.seed, max(cfg.N, 1), cfg.biases)
    t = run_match(strategy, tapes, cfg.N)
    t = replace(t, config={**t.config, "run": asdict(cfg)})
    doc = summary_document(summarize(tally(t)), t.config)
    transcript_path, summary_path = cfg.paths()
    if transcript_path:
        transcript_path.parent.mkdir(parents=True, exist_ok=True)
        write_transcript(transcript_path, t)
    if summary_path:
        _write_text(summary_path, _dump(doc) + "\n")
    if cfg.save_tapes:
        out = Path(cfg.out_dir or ".")
        out.mkdir(parents=True, exist_ok=True)
        for tape in tapes:
            write_tape(out / f"tape_{tape.wing}.bin", tape)
    print(_dump(doc))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    chosen = [s for s in (args.counts, args.dataset, args.transcript) if s]
    if len(chosen) != 1:
        raise UsageError("give exactly one of COUNTS, --dataset or --transcript")
    if args.dataset:
        counts, source = load_dataset(args.dataset), {"dataset": args.dataset}
    elif args.transcript:
        t = read_transcript(args.transcript)
        counts, source = tally(t), t.config
    else:
        counts, source = read_counts(args.counts), {"counts_file": str(args.counts)}
    doc = summary_document(summarize(counts), source)
    if args.output:
        _write_text(Path(args.output), _dump(doc) + "\n")
    print(_dump(doc))
    return EXIT_OK


def _audit_lemma(args: argparse.Namespace) -> tuple[dict, bool]:
    rows = lemma_table()
    ok = sum(1 for _, v in rows if v in (0, -2))
    doc = {
        "quadruples": [{"x1": q[0], "x2": q[1], "y1": q[2], "y2": q[3], "value": v} for q, v in rows],
        "in_range": ok,
        "total": len(rows),
        "passed": ok == len(rows),
    }
    return doc, doc["passed"]


def _audit_hp(args: argparse.Namespace) -> tuple[dict, bool]:
    angles = QuantumAngles()
    samples = hp_trials(args.samples, args.seed, angles, args.a, args.b)
    report = hp_independence_suite(samples, alpha=args.alpha)
    doc = report.to_dict()
    doc["setting_pair"] = [args.a, args.b]
    doc["p_equal"] = float((samples.x == samples.y).mean())
    doc["p_equal_target"] = quantum_equal_prob(angles, args.a, args.b)
    doc["shuffled_reconstruction_rate"] = shuffled_reconstruction_rate(samples, args.seed)
    return doc, report.passed


def _audit_tail(args: argparse.Namespace) -> tuple[dict, bool]:
    strategy = make_strategy(args.strategy, args.seed)
    report = tail_experiment(strategy, args.n, args.reps, args.k or TAIL_KS, args.seed)
    if args.csv:
        _write_text(Path(args.csv), report.to_csv())
    return report.to_dict(), report.passed


def _audit_supermartingale(args: argparse.Namespace) -> tuple[dict, bool]:
    strategy = make_strategy(args.strategy, args.seed)
    report = supermartingale_mc(strategy, args.n, args.reps, args.inner, args.seed)
    return report.to_dict(), report.passed


def _audit_flow(args: argparse.Namespace) -> tuple[dict, bool]:
    strategy = make_strategy(args.strategy, args.seed)
    tapes = make_tapes(derive_seed(args.seed, "flow"), args.n)
    report = check_information_flow(strategy, tapes, args.n)
    doc = {
        "strategy": strategy.name,
        "probed": report.probed,
        "violations": len(report.violations),
        "first_violations": [list(v) for v in report.violations[:10]],
        "passed": report.passed,
    }
    return doc, report.passed


AUDITS = {
    "lemma": _audit_lemma,
    "hp": _audit_hp,
    "tail": _audit_tail,
    "supermartingale": _audit_supermartingale,
    "flow": _audit_flow,
}


def cmd_audit(args: argparse.Namespace) -> int:
    doc, ok = AUDITS[args.audit](args)
    if args.output:
        _write_text(Path(args.output), _dump(doc) + "\n")
    print(_dump(doc))
    return EXIT_OK if ok else EXIT_VIOLATION


def bounds_rows(ks: Sequence[float], N: int, m_fraction: float) -> list[dict[str, float]]:
    mult = thinning_multiplier(m_fraction)
    return [
        {"k": k, "tail_bound": hoeffding_tail(k), "threshold_Z": k * math.sqrt(N), "multiplier": mult,
         "effective_k": k * mult, "effective_tail_bound": hoeffding_tail(k * mult)}
        for k in ks
    ]


def cmd_bounds(args: argparse.Namespace) -> int:
    N = args.n
    if N < 1:
        raise UsageError("--n must be positive")
    fraction = args.m / N if args.m is not None else args.m_fraction
    rows = bounds_rows(args.k or BOUNDS_KS, N, fraction)
    cols = list(rows[0])
    if args.csv:
        lines = [",".join(cols)] + [",".join(repr(r[c]) for c in cols) for r in rows]
        _write_text(Path(args.csv), "\n".join(lines) + "\n")
    print(f"N = {N}, M/N = {fraction:g}")
    print(f"{'k':>8} {'exp(-k^2/2)':>12} {'k*sqrt(N)':>11} {'multiplier':>10} {'eff. k':>8} {'eff. bound':>12}")
    for r in rows:
        print(f"{r['k']:8.3f} {r['tail_bound']:12.4g} {r['threshold_Z']:11.1f} {r['multiplier']:10.4f} "
              f"{r['effective_k']:8.3f} {r['effective_tail_bound']:12.4g}")
    return EXIT_OK


def _add_strategy(p: argparse.ArgumentParser, default: str | None = None) -> None:
    p.add_argument("--strategy", default=default, required=default is None, help=", ".join(REGISTRY))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellgame", description="Simulate and audit the CHSH game.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play one match and summarize it")
    run.add_argument("--strategy", help=", ".join(REGISTRY))
    run.add_argument("--n", type=int, help=f"number of trials (default {DEFAULT_N})")
    run.add_argument("--seed", type=int, help="referee seed (default 0)")
    run.add_argument("--strategy-seed", type=int, help="strategy seed (default: derived from --seed)")
    run.add_argument("--preset", choices=sorted(PRESETS), help="setting biases preset")
    run.add_argument("--bias-a", type=float, help="P(coin A shows 1), i.e. P(a = 2)")
    run.add_argument("--bias-b", type=float, help="P(coin B shows 1), i.e. P(b = 2)")
    run.add_argument("--param", action="append", metavar="KEY=VALUE", help="strategy parameter (JSON value)")
    run.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    run.add_argument("--out-dir", help="write transcript.jsonl and summary.json here")
    run.add_argument("--transcript", help="transcript path (JSON Lines)")
    run.add_argument("--summary", help="summary JSON path")
    run.add_argument("--save-tapes", action="store_true", help="also write the coin tapes to the output dir")
    run.set_defaults(func=cmd_run)

    an = sub.add_parser("analyze", help="statistics for a counts table, dataset or transcript")
    an.add_argument("counts", nargs="?", help="JSON counts file keyed like a1b2x+1y-1")
    an.add_argument("--dataset", choices=sorted(DATASETS))
    an.add_argument("--transcript", help="transcript written by `run`")
    an.add_argument("--output", help="also write the summary here")
    an.set_defaults(func=cmd_analyze)

    au = sub.add_parser("audit", help="check a bound or a locality property")
    au_sub = au.add_subparsers(dest="audit", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", help="also write the report here")
    au_sub.add_parser("lemma", parents=[common], help="enumerate the 16 counterfactual quadruples")
    hp = au_sub.add_parser("hp", parents=[common], help="independence and reconstruction checks of the HP model")
    hp.add_argument("--samples", type=int, default=100_000)
    hp.add_argument("--a", type=int, choices=(1, 2), default=1)
    hp.add_argument("--b", type=int, choices=(1, 2), default=2)
    hp.add_argument("--alpha", type=float, default=0.001)
    tail = au_sub.add_parser("tail", parents=[common], help="empirical tail of max Z against the bound")
    _add_strategy(tail)
    tail.add_argument("--n", type=int, default=1000)
    tail.add_argument("--reps", type=int, default=10_000)
    tail.add_argument("--k", type=float, action="extend", nargs="+")
    tail.add_argument("--csv", help="write k, empirical, bound as CSV")
    sm = au_sub.add_parser("supermartingale", parents=[common], help="conditional drift of Z at sampled histories")
    _add_strategy(sm)
    sm.add_argument("--n", type=int, default=1000)
    sm.add_argument("--reps", type=int, default=10_000)
    sm.add_argument("--inner", type=int, default=8)
    flow = au_sub.add_parser("flow", parents=[common], help="does a station react to the far setting?")
    _add_strategy(flow)
    flow.add_argument("--n", type=int, default=1000)
    au.set_defaults(func=cmd_audit)

    bd = sub.add_parser("bounds", help="tail bounds and thinning for a list of k")
    bd.add_argument("--k", type=float, action="extend", nargs="+")
    bd.add_argument("--n", type=int, default=DEFAULT_N)
    group = bd.add_mutually_exclusive_group()
    group.add_argument("--m-fraction", type=float, default=0.325, help="M/N (default 0.325)")
    group.add_argument("--m", type=int, help="M, the number of trials with equal outcomes")
    bd.add_argument("--csv", help="also write the table as CSV")
    bd.set_defaults(func=cmd_bounds)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except BellGameError as exc:
        print(f"bellgame: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        code = EXIT_IO if isinstance(exc, OSError) else EXIT_USAGE
        print(f"bellgame: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
