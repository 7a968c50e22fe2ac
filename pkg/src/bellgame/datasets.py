"""Embedded count tables."""

from __future__ import annotations

from .stats import CountsTable

# Weihs et al. (1998) photon experiment with fast random setting switches:
# occurrences of each (a, b, x, y).  Grand total 14 573.
WEIHS_CELLS: dict[tuple[int, int, int, int], int] = {
    (1, 1, 1, 1): 313, (1, 1, 1, -1): 1728, (1, 2, 1, 1): 1636, (1, 2, 1, -1): 179,
    (1, 1, -1, 1): 1978, (1, 1, -1, -1): 351, (1, 2, -1, 1): 294, (1, 2, -1, -1): 1143,
    (2, 1, 1, 1): 418, (2, 1, 1, -1): 1683, (2, 2, 1, 1): 269, (2, 2, 1, -1): 1100,
    (2, 1, -1, 1): 1578, (2, 1, -1, -1): 361, (2, 2, -1, 1): 1386, (2, 2, -1, -1): 156,
}

DATASETS = {"weihs": WEIHS_CELLS}


def load_dataset(name: str) -> CountsTable:
    return CountsTable.from_cells(DATASETS[name])
