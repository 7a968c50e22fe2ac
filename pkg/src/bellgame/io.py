"""File formats: transcripts (JSON Lines), coin tapes, count tables."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidParameter
from .protocol import CoinTape, Transcript
from .stats import PAIRS, CountsTable

_CELL_KEY = re.compile(r"^a([12])b([12])x([+-]1)y([+-]1)$")
_TOTAL_KEY = re.compile(r"^a([12])b([12])$")


def write_transcript(path: str | Path, t: Transcript) -> None:
    """Header line ``{"header": {...}}`` then one ``{"n","a","b","x","y"}`` object per trial."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"header": t.config}, separators=(",", ":")) + "\n")
        for r in t.records:
            fh.write(f'{{"n":{r.n},"a":{r.a},"b":{r.b},"x":{r.x},"y":{r.y}}}\n')


def read_transcript(path: str | Path) -> Transcript:
    rows = []
    config: dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidParameter(f"{path}:{lineno}: not JSON ({exc.msg})") from None
            if "header" in obj:
                config = obj["header"]
                continue
            try:
                rec = (obj["n"], obj["a"], obj["b"], obj["x"], obj["y"])
            except KeyError as exc:
                raise InvalidParameter(f"{path}:{lineno}: missing field {exc}") from None
            if rec[0] != len(rows) + 1:
                raise InvalidParameter(f"{path}:{lineno}: record index {rec[0]}, expected {len(rows) + 1}")
            if rec[1] not in (1, 2) or rec[2] not in (1, 2) or rec[3] not in (1, -1) or rec[4] not in (1, -1):
                raise InvalidParameter(f"{path}:{lineno}: values out of range")
            rows.append(rec[1:])
    return Transcript.from_records(rows, config, config.get("strategy", ""))


def write_tape(path: str | Path, tape: CoinTape) -> None:
    """JSON header line, then the bits packed little-endian within each byte."""
    header = {"seed": tape.seed, "bias": tape.bias, "length": len(tape), "wing": tape.wing}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
        fh.write(np.packbits(tape.bits, bitorder="little").tobytes())


def read_tape(path: str | Path) -> CoinTape:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        payload = fh.read()
    length = int(header["length"])
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
    if bits.size < length:
        raise InvalidParameter(f"{path}: header says {length} bits, file holds {bits.size}")
    return CoinTape(bits[:length].copy(), float(header["bias"]), int(header["seed"]), header.get("wing", "A"))


def cell_key(a: int, b: int, x: int, y: int) -> str:
    return f"a{a}b{b}x{x:+d}y{y:+d}"


def counts_from_json(obj: dict) -> CountsTable:
    """Parse a counts map.  Optional ``a<a>b<b>`` totals and ``N`` are checked."""
    if not isinstance(obj, dict):
        raise InvalidParameter("counts file must hold a JSON object")
    cells: dict[tuple[int, int, int, int], int] = {}
    totals: dict[tuple[int, int], int] = {}
    grand = None
    for key, value in obj.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise InvalidParameter(f"count for {key!r} must be a nonnegative integer")
        if m := _CELL_KEY.match(key):
            cells[int(m[1]), int(m[2]), int(m[3]), int(m[4])] = value
        elif m := _TOTAL_KEY.match(key):
            totals[int(m[1]), int(m[2])] = value
        elif key == "N":
            grand = value
        else:
            raise InvalidParameter(f"unknown key {key!r}")
    if len(cells) != 16:
        raise InvalidParameter(f"expected 16 cells keyed like 'a1b2x+1y-1', found {len(cells)}")
    table = CountsTable.from_cells(cells)
    for (a, b), total in totals.items():
        if table.total(a, b) != total:
            raise InvalidParameter(
                f"pair ({a},{b}): equal {table.equal[a, b]} + unequal {table.unequal[a, b]} != total {total}"
            )
    if grand is not None and grand != table.N:
        raise InvalidParameter(f"cells sum to {table.N}, file says N = {grand}")
    if table.N == 0:
        raise InvalidParameter("counts table is empty")
    return table


def read_counts(path: str | Path) -> CountsTable:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"{path}: not JSON ({exc.msg})") from None
    return counts_from_json(obj)


def counts_to_json(cells: dict[tuple[int, int, int, int], int], with_totals: bool = False) -> dict[str, int]:
    out = {cell_key(*k): int(v) for k, v in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1], -kv[0][2], -kv[0][3]))}
    if with_totals:
        for a, b in PAIRS:
            out[f"a{a}b{b}"] = sum(v for k, v in cells.items() if k[:2] == (a, b))
        out["N"] = sum(cells.values())
    return out
