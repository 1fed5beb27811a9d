"""Row label pattern mining and sequence correction.

Rows of gold labels are mined into a frequency bank.  A predicted row
is corrected by aligning it to the nearest bank pattern under
Levenshtein distance and applying only the substitution operations of
the alignment: insertions and deletions are ignored so the corrected
row keeps its original length.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

from .labels import CellLabel

RowPattern = tuple[CellLabel, ...]

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"


class EmptyPrediction(ValueError):
    """Raised when asked to correct an empty label sequence."""


@dataclass(frozen=True)
class EditOp:
    kind: str
    source: int | None
    target: int | None


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance between two sequences (two-row DP)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (x != y),
            ))
        prev = cur
    return prev[-1]


def backtrace(a: Sequence, b: Sequence) -> list[EditOp]:
    """One optimal alignment of ``a`` onto ``b``.

    Ties are broken deterministically: match/substitute is preferred
    over delete, delete over insert.
    """
    n, m = len(a), len(b)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            dist[i][j] = min(
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
                dist[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if (
            i > 0 and j > 0
            and dist[i][j] == dist[i - 1][j - 1] + (a[i - 1] != b[j - 1])
        ):
            kind = MATCH if a[i - 1] == b[j - 1] else SUBSTITUTE
            ops.append(EditOp(kind, i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(EditOp(DELETE, i - 1, None))
            i -= 1
        else:
            ops.append(EditOp(INSERT, None, j - 1))
            j -= 1
    ops.reverse()
    return ops


def _pattern_key(pattern: RowPattern) -> str:
    return ",".join(label.value for label in pattern)


def _pattern_from_key(key: str) -> RowPattern:
    return tuple(CellLabel.from_str(part) for part in key.split(","))


@dataclass(frozen=True)
class PatternBank:
    entries: dict[RowPattern, int]
    source_digest: str

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, pattern: RowPattern) -> bool:
        return pattern in self.entries

    def sorted_patterns(self) -> list[tuple[RowPattern, int]]:
        """Patterns by descending frequency, then canonical serialization."""
        return sorted(
            self.entries.items(), key=lambda kv: (-kv[1], _pattern_key(kv[0]))
        )


def build_pattern_bank(rows: Sequence[RowPattern]) -> PatternBank:
    """Count distinct row patterns; the digest fingerprints the input."""
    entries: dict[RowPattern, int] = {}
    hasher = hashlib.sha256()
    for row in rows:
        if not row:
            continue
        pattern = tuple(row)
        entries[pattern] = entries.get(pattern, 0) + 1
        hasher.update(_pattern_key(pattern).encode("utf-8"))
        hasher.update(b"\n")
    return PatternBank(entries=entries, source_digest=hasher.hexdigest())


def correct_row(predicted: RowPattern, bank: PatternBank) -> RowPattern:
    """Snap a predicted row toward its nearest bank pattern.

    Only substitutions from the optimal alignment are applied, so the
    output always has the same length as the input.  With an empty
    bank the row is returned unchanged.
    """
    if not predicted:
        raise EmptyPrediction("cannot correct an empty row")
    predicted = tuple(predicted)
    if not bank.entries:
        return predicted
    best = None
    for pattern, freq in bank.entries.items():
        dist = levenshtein(predicted, pattern)
        key = (dist, -freq, len(pattern), _pattern_key(pattern))
        if best is None or key < best[0]:
            best = (key, pattern)
    pattern = best[1]
    corrected = list(predicted)
    for op in backtrace(predicted, pattern):
        if op.kind == SUBSTITUTE:
            corrected[op.source] = pattern[op.target]
    return tuple(corrected)


def correct_table(
    rows: Sequence[RowPattern], bank: PatternBank
) -> list[RowPattern]:
    return [correct_row(row, bank) for row in rows]


def save_pattern_bank(bank: PatternBank, path) -> None:
    from .corpus import atomic_write_text

    payload = {
        "source_digest": bank.source_digest,
        "patterns": [
            {"labels": [label.value for label in pattern], "freq": freq}
            for pattern, freq in bank.sorted_patterns()
        ],
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def load_pattern_bank(path) -> PatternBank:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    entries: dict[RowPattern, int] = {}
    for item in payload["patterns"]:
        pattern = tuple(CellLabel.from_str(v) for v in item["labels"])
        entries[pattern] = int(item["freq"])
    return PatternBank(entries=entries, source_digest=payload["source_digest"])


class RowPatternCorrector:
    """Estimator-style wrapper: fit on gold rows, transform predictions."""

    def __init__(self) -> None:
        self.bank_: PatternBank | None = None

    def fit(self, rows: Sequence[RowPattern]) -> "RowPatternCorrector":
        self.bank_ = build_pattern_bank(rows)
        return self

    def transform(self, rows: Sequence[RowPattern]) -> list[RowPattern]:
        if self.bank_ is None:
            raise RuntimeError("RowPatternCorrector is not fitted")
        return correct_table(rows, self.bank_)

    def fit_transform(
        self, rows: Sequence[RowPattern], predictions: Sequence[RowPattern]
    ) -> list[RowPattern]:
        return self.fit(rows).transform(predictions)

    def get_params(self, deep: bool = True) -> dict:
        return {}

    def set_params(self, **params) -> "RowPatternCorrector":
        if params:
            raise ValueError(f"unknown parameters: {sorted(params)}")
        return self
