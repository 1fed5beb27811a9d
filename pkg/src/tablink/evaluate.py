"""Evaluation: per-table accuracy, link F1, baselines, statistics.

Table extraction is scored as macro accuracy: per-table accuracies
averaged without weighting, so small tables count as much as large
ones.  Linking is scored as micro precision/recall/F1 over
(document, description, cell) triples per role; "etc" assignments are
reported as counts but never enter F1.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .document import TableGrid
from .labels import CellLabel
from .serialize import SerializerConfig, tokenize

logger = logging.getLogger(__name__)

_TABLE_KEY_RE = re.compile(r"^(.*)-r\d+-c\d+$")


class EmptyGold(ValueError):
    """Raised when an evaluation is attempted against empty gold data."""


def table_key(cell_id: str) -> str:
    """The table part of a cell id ("t3-r1-c2" -> "t3")."""
    match = _TABLE_KEY_RE.match(cell_id)
    if not match:
        raise ValueError(f"malformed cell id: {cell_id!r}")
    return match.group(1)


# -- table decomposition scoring ---------------------------------------------

@dataclass(frozen=True)
class TdeScore:
    per_table: dict[str, float]
    macro_accuracy: float
    n_cells: int
    n_correct: int

    @property
    def micro_accuracy(self) -> float:
        return self.n_correct / self.n_cells if self.n_cells else 0.0


def eval_tde(
    predicted: Mapping[str, CellLabel], gold: Mapping[str, CellLabel]
) -> TdeScore:
    """Macro per-table accuracy of predicted labels against gold.

    Gold cells without a prediction count as wrong (with a warning);
    predictions outside the gold set are ignored.
    """
    if not gold:
        raise EmptyGold("gold label map is empty")
    totals: dict[str, int] = {}
    correct: dict[str, int] = {}
    missing = 0
    for cell_id, gold_label in gold.items():
        key = table_key(cell_id)
        totals[key] = totals.get(key, 0) + 1
        prediction = predicted.get(cell_id)
        if prediction is None:
            missing += 1
            continue
        if prediction == gold_label:
            correct[key] = correct.get(key, 0) + 1
    if missing:
        logger.warning("%d gold cells had no prediction; counted wrong", missing)
    per_table = {
        key: correct.get(key, 0) / totals[key] for key in sorted(totals)
    }
    macro = sum(per_table.values()) / len(per_table)
    return TdeScore(
        per_table=per_table,
        macro_accuracy=macro,
        n_cells=sum(totals.values()),
        n_correct=sum(correct.values()),
    )


# -- linking scoring -----------------------------------------------------------

@dataclass(frozen=True)
class RoleScore:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class TtreScore:
    name: RoleScore
    value: RoleScore
    total: float  # mean of the two F1 scores
    n_links_predicted: int
    n_links_gold: int
    n_etc_predicted: int
    n_etc_gold: int


def _link_triples(links: Iterable[dict], role: str) -> set[tuple]:
    triples = set()
    for link in links:
        doc = link.get("doc", "-")
        for cell_id in link.get(role, ()):
            triples.add((doc, link["desc_block"], cell_id))
    return triples


def _role_score(pred: set, gold: set) -> RoleScore:
    tp = len(pred & gold)
    fp = len(pred) - tp
    fn = len(gold) - tp
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(gold) if gold else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return RoleScore(precision, recall, f1, tp, fp, fn)


def eval_ttre(predicted: Sequence[dict], gold: Sequence[dict]) -> TtreScore:
    """Micro F1 per role over link dicts; total is the mean of the F1s.

    Triples are (doc, description block, cell id) per role.  The etc
    category never enters F1; it is reported as counts only.
    """
    if not gold:
        raise EmptyGold("gold link list is empty")
    name_score = _role_score(
        _link_triples(predicted, "names"), _link_triples(gold, "names")
    )
    value_score = _role_score(
        _link_triples(predicted, "values"), _link_triples(gold, "values")
    )
    return TtreScore(
        name=name_score,
        value=value_score,
        total=(name_score.f1 + value_score.f1) / 2,
        n_links_predicted=len(predicted),
        n_links_gold=len(gold),
        n_etc_predicted=sum(len(l.get("etc", ())) for l in predicted),
        n_etc_gold=sum(len(l.get("etc", ())) for l in gold),
    )


# -- random baseline -----------------------------------------------------------

class Lcg:
    """Pinned 64-bit linear congruential generator.

    Fixed constants keep the baseline reproducible across platforms
    and Python versions, independent of ``random`` module internals.
    """

    MULT = 6364136223846793005
    INC = 1442695040888963407
    _MASK = (1 << 64) - 1

    def __init__(self, seed: int) -> None:
        self.state = seed & self._MASK

    def next_index(self, n: int) -> int:
        """Next value in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        self.state = (self.state * self.MULT + self.INC) & self._MASK
        return (self.state >> 33) % n


def random_baseline(document, seed: int = 0) -> list[dict]:
    """Uniform random guessing: one Name, one Value per description.

    For every paragraph with a reachable table, one cell of that table
    is drawn as the Name and one as the Value.  Output is shaped like
    the link JSONL records (with doc "-"); bit-identical across runs
    for a fixed seed.
    """
    from .document import Paragraph

    rng = Lcg(seed)
    results = []
    for block in document.blocks:
        if not isinstance(block, Paragraph):
            continue
        table_index = document.nearest_preceding_table(block.block_index)
        if table_index is None:
            continue
        pool = [c.id for c in document.tables[table_index].origin_cells()]
        results.append({
            "doc": "-",
            "desc_block": block.block_index,
            "table": table_index,
            "names": [pool[rng.next_index(len(pool))]],
            "values": [pool[rng.next_index(len(pool))]],
            "etc": [],
        })
    return results


# -- corpus statistics ---------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    bins: dict[int, int]
    total_cells: int

    @property
    def mean(self) -> float:
        if not self.total_cells:
            return 0.0
        return sum(k * v for k, v in self.bins.items()) / self.total_cells


def histogram_of_texts(
    texts: Iterable[str], config: SerializerConfig = SerializerConfig()
) -> Histogram:
    """Distribution of token counts over the given texts."""
    bins: dict[int, int] = {}
    total = 0
    for text in texts:
        count = len(tokenize(text, config))
        bins[count] = bins.get(count, 0) + 1
        total += 1
    return Histogram(bins=bins, total_cells=total)


def token_histogram(
    grids: Iterable[TableGrid], config: SerializerConfig = SerializerConfig()
) -> Histogram:
    """Distribution of cell-text token counts over all origin cells."""
    return histogram_of_texts(
        (cell.text for grid in grids for cell in grid.origin_cells()), config
    )


def render_histogram(histogram: Histogram, width: int = 40) -> str:
    """Text bar chart, one line per bin, ascending by token count."""
    if not histogram.bins:
        return "(no cells)"
    peak = max(histogram.bins.values())
    key_width = len(str(max(histogram.bins)))
    lines = []
    for key in sorted(histogram.bins):
        count = histogram.bins[key]
        bar = "#" * max(1, round(width * count / peak))
        lines.append(f"{key:>{key_width}} | {bar} {count}")
    return "\n".join(lines)
