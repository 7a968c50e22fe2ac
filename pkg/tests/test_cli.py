from __future__ import annotations

import json
import subprocess
import sys

import pytest

from bellgame.cli import RunConfig, bounds_rows, main
from bellgame.datasets import WEIHS_CELLS
from bellgame.io import counts_to_json


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_writes_transcript_and_summary(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "run", "--strategy", "memory-lhv", "--n", "500", "--seed", "4",
                           "--out-dir", str(tmp_path))
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary == json.loads(out)
    assert summary["N"] == 500
    lines = (tmp_path / "transcript.jsonl").read_text().splitlines()
    assert len(lines) == 501
    header = json.loads(lines[0])["header"]
    assert header["run"]["seed"] == 4 and header["run"]["strategy"] == "memory-lhv"


def test_round_trip_summary(tmp_path, capsys):
    run_cli(capsys, "run", "--strategy", "iid-random", "--n", "300", "--out-dir", str(tmp_path))
    code, out, _ = run_cli(capsys, "analyze", "--transcript", str(tmp_path / "transcript.jsonl"))
    assert code == 0
    assert json.loads(out) == json.loads((tmp_path / "summary.json").read_text())


def test_determinism_byte_identical(tmp_path, monkeypatch, capsys):
    texts = []
    for d in ("one", "two"):
        (tmp_path / d).mkdir()
        monkeypatch.chdir(tmp_path / d)
        run_cli(capsys, "run", "--strategy", "quantum-oracle", "--n", "400", "--seed", "9", "--out-dir", "out")
        texts.append(((tmp_path / d / "out" / "summary.json").read_bytes(),
                      (tmp_path / d / "out" / "transcript.jsonl").read_bytes()))
    assert texts[0] == texts[1]


def test_run_quantum_contrast(capsys):
    code, out, _ = run_cli(capsys, "run", "--strategy", "quantum-oracle", "--n", "100000", "--seed", "1")
    assert code == 0
    assert 2.80 <= json.loads(out)["S"] <= 2.86


def test_run_deterministic_default_below_ceiling(capsys):
    code, out, _ = run_cli(capsys, "run", "--strategy", "deterministic-lhv", "--n", "15000")
    assert code == 0
    assert json.loads(out)["Z"] <= 12.25 * 15000**0.5


def test_run_empty_match(capsys):
    code, _, err = run_cli(capsys, "run", "--strategy", "iid-random", "--n", "0")
    assert code == 2 and "at least one trial" in err


def test_run_unknown_strategy(capsys):
    code, _, err = run_cli(capsys, "run", "--strategy", "telepathy")
    assert code == 2 and "unknown strategy" in err


def test_run_io_failure(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, _ = run_cli(capsys, "run", "--strategy", "iid-random", "--n", "10", "--out-dir", str(blocker / "sub"))
    assert code == 3


def test_run_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"strategy": "memory-lhv", "N": 60, "params": {"explore": 0.3}, "biases": [0.2, 0.9]}))
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--n", "70", "--param", "explore=0.5")
    src = json.loads(out)["source"]
    assert code == 0
    assert src["N"] == 70 and src["params"] == {"explore": 0.5} and src["biases"] == [0.2, 0.9]
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--preset", "weihs")
    assert json.loads(out)["source"]["biases"] == [0.48, 0.42]


def test_run_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"strategy": "memory-lhv", "colour": "red"}))
    code, _, err = run_cli(capsys, "run", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_run_saves_tapes(tmp_path, capsys):
    from bellgame.io import read_tape
    from bellgame.protocol import make_tapes
    run_cli(capsys, "run", "--strategy", "iid-random", "--n", "33", "--seed", "5", "--out-dir", str(tmp_path),
            "--save-tapes")
    assert read_tape(tmp_path / "tape_A.bin") == make_tapes(5, 33)[0]


def test_run_config_defaults():
    cfg = RunConfig()
    assert cfg.N == 15_000 and cfg.biases == (0.5, 0.5)
    assert cfg.resolved_strategy_seed() == RunConfig().resolved_strategy_seed()
    assert RunConfig(strategy_seed=7).resolved_strategy_seed() == 7


def test_analyze_weihs(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--dataset", "weihs")
    d = json.loads(out)
    assert code == 0
    assert d["S"] == pytest.approx(2.7276, abs=5e-4)
    assert (d["Z"], d["N"], d["M"]) == (911, 14_573, 4647)


def test_analyze_counts_file(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(counts_to_json(WEIHS_CELLS, with_totals=True)))
    code, out, _ = run_cli(capsys, "analyze", str(path))
    assert code == 0 and json.loads(out)["Z"] == 911


def test_analyze_degenerate_table(tmp_path, capsys):
    cells = {k: 0 for k in counts_to_json(WEIHS_CELLS)}
    cells["a1b2x+1y+1"] = 40
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cells))
    code, out, _ = run_cli(capsys, "analyze", str(path))
    d = json.loads(out)
    assert code == 0
    assert d["S"] is None and d["Z"] == 40 and d["rho"]["12"] == 1.0
    assert d["undefined_correlations"] == ["11", "21", "22"]


def test_analyze_inconsistent_totals(tmp_path, capsys):
    obj = counts_to_json(WEIHS_CELLS, with_totals=True)
    obj["a2b2"] += 1
    path = tmp_path / "c.json"
    path.write_text(json.dumps(obj))
    code, _, err = run_cli(capsys, "analyze", str(path))
    assert code == 2 and "pair (2,2)" in err


def test_analyze_malformed(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text("[")
    assert run_cli(capsys, "analyze", str(path))[0] == 2
    assert run_cli(capsys, "analyze", str(tmp_path / "missing.json"))[0] == 3
    assert run_cli(capsys, "analyze")[0] == 2
    assert run_cli(capsys, "analyze", "--dataset", "weihs", str(path))[0] == 2


def test_audit_lemma(capsys):
    code, out, _ = run_cli(capsys, "audit", "lemma")
    d = json.loads(out)
    assert code == 0 and d["in_range"] == 16 and d["total"] == 16


def test_audit_hp(capsys):
    code, out, _ = run_cli(capsys, "audit", "hp", "--samples", "100000")
    d = json.loads(out)
    assert code == 0 and d["reconstruction_rate"] == 1.0 and d["passed"]
    assert d["shuffled_reconstruction_rate"] < 0.001


def test_audit_tail_pass_and_csv(tmp_path, capsys):
    csv_path = tmp_path / "tail.csv"
    code, out, _ = run_cli(capsys, "audit", "tail", "--strategy", "memory-lhv", "--reps", "300", "--n", "200",
                           "--k", "3", "--csv", str(csv_path))
    assert code == 0 and json.loads(out)["passed"]
    assert csv_path.read_text().startswith("k,empirical,bound\n3.0,")


def test_audit_tail_cheat_exit_1(capsys):
    code, _, _ = run_cli(capsys, "audit", "tail", "--strategy", "quantum-cheat", "--reps", "10", "--n", "2000",
                         "--k", "3")
    assert code == 1


def test_audit_supermartingale(capsys):
    assert run_cli(capsys, "audit", "supermartingale", "--strategy", "memory-lhv", "--reps", "300",
                   "--n", "100")[0] == 0
    assert run_cli(capsys, "audit", "supermartingale", "--strategy", "quantum-cheat", "--reps", "300",
                   "--n", "100")[0] == 1


def test_audit_flow(capsys):
    assert run_cli(capsys, "audit", "flow", "--strategy", "memory-lhv", "--n", "100")[0] == 0
    code, out, _ = run_cli(capsys, "audit", "flow", "--strategy", "quantum-cheat", "--n", "100")
    assert code == 1 and json.loads(out)["violations"] > 0


def test_audit_unknown_strategy(capsys):
    assert run_cli(capsys, "audit", "flow", "--strategy", "nope")[0] == 2


def test_bounds_rows():
    rows = {r["k"]: r for r in bounds_rows([0, 12.25], 15_000, 0.325)}
    assert rows[0]["tail_bound"] == 1.0
    assert rows[12.25]["tail_bound"] <= 1e-32
    assert rows[12.25]["multiplier"] == pytest.approx(1.754, abs=5e-4)
    assert rows[12.25]["effective_k"] == pytest.approx(21.5, abs=0.05)


def test_bounds_command(tmp_path, capsys):
    csv_path = tmp_path / "b.csv"
    code, out, _ = run_cli(capsys, "bounds", "--k", "0", "12.25", "--csv", str(csv_path))
    assert code == 0
    assert "1.7541" in out and "21.488" in out
    assert csv_path.read_text().splitlines()[0].startswith("k,tail_bound")
    code, out, _ = run_cli(capsys, "bounds", "--k", "3", "--n", "14573", "--m", "4647")
    assert code == 0 and "M/N = 0.318" in out


def test_usage_errors(capsys):
    assert run_cli(capsys)[0] == 2
    assert run_cli(capsys, "frobnicate")[0] == 2
    assert run_cli(capsys, "bounds", "--n", "0")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bellgame", "bounds", "--k", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.6065" in proc.stdout
