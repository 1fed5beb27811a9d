"""Rule-based linking of descriptive sentences to table cells.

Pipeline per description paragraph:

1. Segment the text into fragments: bracketed expressions become
   fragments of their own, the rest is split on particles.
2. A candidate-region cell (top ``header_rows`` rows or left
   ``header_cols`` columns) becomes a Name when its best edit
   similarity against any fragment exceeds the threshold.
3. Locate Value candidates.  With Names in both orientations, a
   candidate sits at the intersection of a row-key Name's row and a
   column-key Name's column.  With a single orientation, the Name's
   whole row or column is taken (single-name mode).
4. Candidates whose digit ratio clears the numeric threshold are
   Values; the rest fall into the "etc" category.
"""
from __future__ import annotations

from dataclasses import dataclass

from .document import Document, Paragraph, TableGrid
from .patterns import levenshtein

DEFAULT_PARTICLES: tuple[str, ...] = (
    "は", "が", "を", "に", "の", "で", "と", "へ", "から", "まで", "より",
)
DEFAULT_BRACKET_PAIRS: tuple[tuple[str, str], ...] = (
    ("（", "）"), ("(", ")"), ("「", "」"), ("『", "』"), ("［", "］"), ("[", "]"),
)


@dataclass(frozen=True)
class LinkerConfig:
    name_similarity_threshold: float = 0.70
    numeric_ratio_threshold: float = 0.50
    header_rows: int = 2
    header_cols: int = 2
    particles: tuple[str, ...] = DEFAULT_PARTICLES
    bracket_pairs: tuple[tuple[str, str], ...] = DEFAULT_BRACKET_PAIRS

    def __post_init__(self) -> None:
        if not (0.0 < self.name_similarity_threshold <= 1.0):
            raise ValueError("name_similarity_threshold must be in (0, 1]")
        if not (0.0 < self.numeric_ratio_threshold <= 1.0):
            raise ValueError("numeric_ratio_threshold must be in (0, 1]")
        if self.header_rows < 1 or self.header_cols < 1:
            raise ValueError("header_rows/header_cols must be >= 1")


@dataclass(frozen=True)
class Fragment:
    text: str
    start: int
    end: int
    bracketed: bool = False


@dataclass(frozen=True)
class NameMatch:
    cell_id: str
    fragment: Fragment
    similarity: float


@dataclass(frozen=True)
class LinkResult:
    desc_block: int
    table_index: int | None
    names: tuple[NameMatch, ...] = ()
    values: tuple[str, ...] = ()
    etc: tuple[str, ...] = ()
    single_name_mode: bool = False

    def name_ids(self) -> tuple[str, ...]:
        return tuple(match.cell_id for match in self.names)


def similarity(a: str, b: str) -> float:
    """Edit similarity: 1 - lev/max(len).  Two empty strings match."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def numeric_ratio(text: str) -> float:
    """Digits (ASCII and full-width) over non-whitespace characters."""
    chars = [ch for ch in text if not ch.isspace()]
    if not chars:
        return 0.0
    digits = sum(1 for ch in chars if "0" <= ch <= "9" or "０" <= ch <= "９")
    return digits / len(chars)


def _emit(pieces: list[Fragment], text: str, start: int, end: int,
          bracketed: bool) -> None:
    fragment = text[start:end]
    stripped = fragment.strip()
    if not stripped:
        return
    left = start + (len(fragment) - len(fragment.lstrip()))
    pieces.append(Fragment(stripped, left, left + len(stripped), bracketed))


def _split_particles(pieces: list[Fragment], text: str, start: int, end: int,
                     particles: tuple[str, ...]) -> None:
    ordered = sorted(particles, key=lambda p: (-len(p), p))
    pos = start
    piece_start = start
    while pos < end:
        hit = next(
            (p for p in ordered if text.startswith(p, pos) and pos + len(p) <= end),
            None,
        )
        if hit is None:
            pos += 1
            continue
        _emit(pieces, text, piece_start, pos, False)
        pos += len(hit)
        piece_start = pos
    _emit(pieces, text, piece_start, end, False)


def segment_description(
    text: str, config: LinkerConfig = LinkerConfig()
) -> list[Fragment]:
    """Fragments in source order: bracket contents, then particle splits.

    Brackets are not recursive: the innermost scan is a flat depth
    count per pair, and an unmatched opener is ordinary text.
    """
    opens = {open_ch: close_ch for open_ch, close_ch in config.bracket_pairs}
    fragments: list[Fragment] = []
    seg_start = 0
    pos = 0
    while pos < len(text):
        close_ch = opens.get(text[pos])
        if close_ch is None:
            pos += 1
            continue
        open_ch = text[pos]
        depth = 1
        scan = pos + 1
        while scan < len(text) and depth:
            if text[scan] == open_ch and open_ch != close_ch:
                depth += 1
            elif text[scan] == close_ch:
                depth -= 1
            scan += 1
        if depth:  # unmatched opener: plain text
            pos += 1
            continue
        _split_particles(fragments, text, seg_start, pos, config.particles)
        _emit(fragments, text, pos + 1, scan - 1, True)
        pos = scan
        seg_start = scan
    _split_particles(fragments, text, seg_start, len(text), config.particles)
    return fragments


def candidate_region(grid: TableGrid, config: LinkerConfig) -> list[str]:
    """Ids of cells whose rectangle touches the header band, origin order.

    A rectangle intersects the top band iff its origin row does, and
    likewise for the left band, since spans only grow down and right.
    """
    return [
        cell.id
        for cell in grid.origin_cells()
        if cell.origin_row < config.header_rows
        or cell.origin_col < config.header_cols
    ]


def find_names(
    grid: TableGrid, fragments: list[Fragment], config: LinkerConfig
) -> list[NameMatch]:
    """Candidate cells whose best fragment similarity clears the threshold.

    One match per Name cell, carrying the highest-scoring fragment
    (earliest fragment wins ties).  Empty-text cells never match.
    """
    matches: list[NameMatch] = []
    for cell_id in candidate_region(grid, config):
        cell = grid.cells[cell_id]
        if not cell.text:
            continue
        best: tuple[float, Fragment] | None = None
        for fragment in fragments:
            score = similarity(cell.text, fragment.text)
            if best is None or score > best[0]:
                best = (score, fragment)
        if best is not None and best[0] > config.name_similarity_threshold:
            matches.append(NameMatch(cell_id, best[1], best[0]))
    return matches


def find_values(
    grid: TableGrid, names: list[NameMatch], config: LinkerConfig
) -> tuple[list[str], bool]:
    """Cells located by Name coordinates, before the numeric filter.

    Row keys are Names in the left band, column keys Names in the top
    band (a corner Name is both).  Both orientations present: the
    intersections of every row-key row with every column-key column.
    One orientation: each Name's full row or column (single-name
    mode).  Candidate-region cells are never selected.
    """
    region = set(candidate_region(grid, config))
    row_keys: list[int] = []
    col_keys: list[int] = []
    for match in names:
        cell = grid.cells[match.cell_id]
        if cell.origin_col < config.header_cols:
            row_keys.append(cell.origin_row)
        if cell.origin_row < config.header_rows:
            col_keys.append(cell.origin_col)

    located: list[str] = []
    seen: set[str] = set()

    def take(cell_id: str) -> None:
        if cell_id not in region and cell_id not in seen:
            seen.add(cell_id)
            located.append(cell_id)

    single_name_mode = bool(row_keys) != bool(col_keys)
    if row_keys and col_keys:
        for row in row_keys:
            for col in col_keys:
                take(grid.occupancy[row][col])
    elif row_keys:
        for row in row_keys:
            for col in range(grid.n_cols):
                take(grid.occupancy[row][col])
    elif col_keys:
        for col in col_keys:
            for row in range(grid.n_rows):
                take(grid.occupancy[row][col])
    return located, single_name_mode


def filter_values(
    grid: TableGrid, candidates: list[str], config: LinkerConfig
) -> tuple[list[str], list[str]]:
    """Partition candidates into Values and etc by numeric ratio."""
    values: list[str] = []
    etc: list[str] = []
    for cell_id in candidates:
        text = grid.cells[cell_id].text
        if text and numeric_ratio(text) >= config.numeric_ratio_threshold:
            values.append(cell_id)
        else:
            etc.append(cell_id)
    return values, etc


def link_paragraph(
    document: Document, block_index: int, config: LinkerConfig = LinkerConfig()
) -> LinkResult | None:
    """Link one description paragraph to its nearest table, if any."""
    paragraph = document.paragraph_at(block_index)
    table_index = document.nearest_preceding_table(block_index)
    if table_index is None:
        return None
    grid = document.tables[table_index]
    fragments = segment_description(paragraph.text, config)
    names = find_names(grid, fragments, config)
    candidates, single_name_mode = find_values(grid, names, config)
    values, etc = filter_values(grid, candidates, config)
    return LinkResult(
        desc_block=block_index,
        table_index=table_index,
        names=tuple(names),
        values=tuple(values),
        etc=tuple(etc),
        single_name_mode=single_name_mode,
    )


def link_document(
    document: Document, config: LinkerConfig = LinkerConfig()
) -> list[LinkResult]:
    """Link every paragraph; paragraphs without a table are skipped."""
    results = []
    for block in document.blocks:
        if not isinstance(block, Paragraph):
            continue
        result = link_paragraph(document, block.block_index, config)
        if result is not None:
            results.append(result)
    return results
