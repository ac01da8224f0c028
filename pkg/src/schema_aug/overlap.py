"""Domain/slot overlap tables and holdout-set suggestions."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, List, Tuple

from .schema_model import Schema


class OverlapError(ValueError):
    pass


@dataclass(frozen=True)
class SlotMatrix:
    """Boolean table, rows are slot base names and columns are domains (both sorted)."""

    rows: Tuple[str, ...]
    columns: Tuple[str, ...]
    cells: FrozenSet[Tuple[str, str]]

    def __getitem__(self, key: Tuple[str, str]) -> bool:
        return key in self.cells

    def to_lists(self) -> List[List[bool]]:
        return [[(r, c) in self.cells for c in self.columns] for r in self.rows]

    def to_text(self, mark: str = "x") -> str:
        width = max([len(r) for r in self.rows] + [0])
        head = " " * width + " | " + " | ".join(self.columns)
        lines = [head, "-" * len(head)]
        for r in self.rows:
            cells = [(mark if (r, c) in self.cells else "").center(len(c)) for c in self.columns]
            lines.append(r.ljust(width) + " | " + " | ".join(cells))
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", *self.columns])
        for r, row in zip(self.rows, self.to_lists()):
            w.writerow([r, *(int(v) for v in row)])
        return buf.getvalue()


def _owned(schema: Schema) -> Dict[str, set]:
    owned: Dict[str, set] = {d: set() for d in schema.domains}
    for s in schema:
        owned[s.domain].add(s.base_name)
    return owned


def slot_matrix(schema: Schema) -> SlotMatrix:
    cells = frozenset((s.base_name, s.domain) for s in schema)
    return SlotMatrix(
        tuple(sorted({s.base_name for s in schema})),
        tuple(sorted(schema.domains)),
        cells,
    )


def overlap_count(schema: Schema, d1: str, d2: str) -> int:
    owned = _owned(schema)
    for d in (d1, d2):
        if d not in owned:
            raise OverlapError(f"unknown domain {d!r}")
    return len(owned[d1] & owned[d2])


def external_overlap(schema: Schema, domains) -> int:
    """Number of base names owned both inside ``domains`` and outside it."""
    owned = _owned(schema)
    inside = set().union(*(owned[d] for d in domains)) if domains else set()
    outside = set().union(*(v for d, v in owned.items() if d not in domains)) if owned else set()
    return len(inside & outside)


def suggest_holdout(schema: Schema, k: int) -> List[Tuple[Tuple[str, ...], int]]:
    """Rank every k-subset of domains by external overlap, ascending.

    Ties are broken by the sorted domain names. Exhaustive, which is cheap
    for the handful of domains in DST corpora.
    """
    domains = sorted(schema.domains)
    if not 1 <= k <= len(domains):
        raise OverlapError(f"k must be between 1 and {len(domains)}, got {k}")
    ranked = [(combo, external_overlap(schema, set(combo))) for combo in combinations(domains, k)]
    ranked.sort(key=lambda item: (item[1], item[0]))
    return ranked


def suggestions_csv(ranked) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "domains", "external_overlap"])
    for i, (combo, score) in enumerate(ranked, 1):
        w.writerow([i, ",".join(combo), score])
    return buf.getvalue()
