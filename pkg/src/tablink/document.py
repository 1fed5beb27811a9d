"""HTML report parsing into an ordered block model.

A parsed document is a sequence of blocks (paragraphs and table
references, in source order) plus the tables themselves, normalized to
rectangular grids.  Grid normalization resolves ``rowspan``/``colspan``
into an occupancy matrix so that every (row, col) coordinate maps to
exactly one originating cell.

The parser is deliberately lenient: real-world filings omit closing
tags, nest tables, and mix encodings.  Recovery mirrors what browsers
do (start tags implying end tags, implied tbody, orphan text kept as
paragraph content) without attempting full tree construction.
"""
from __future__ import annotations

import html as _html
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser


class UnreadableInput(ValueError):
    """Raised when no candidate encoding can decode the input bytes."""


class BadBlockIndex(ValueError):
    """Raised when a block index is out of range or not a paragraph."""


# Tags that terminate a running paragraph when encountered outside a
# table.  Inline tags (span, b, a, ...) do not break text flow.
_BLOCK_TAGS = frozenset({
    "address", "article", "aside", "blockquote", "body", "caption",
    "col", "colgroup", "dd", "div", "dl", "dt", "fieldset", "figcaption",
    "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "head",
    "header", "hr", "html", "li", "main", "nav", "ol", "p", "pre",
    "section", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
})

# Content of these elements is never document text.
_SKIP_TAGS = frozenset({"script", "style", "title", "noscript", "template"})

_CHARSET_RE = re.compile(
    rb"""charset\s*=\s*["']?\s*([A-Za-z0-9_.:-]+)""", re.IGNORECASE
)

_BOMS = (
    (b"\xef\xbb\xbf", "utf-8-sig"),
    (b"\xff\xfe", "utf-16-le"),
    (b"\xfe\xff", "utf-16-be"),
)


def _clean_text(raw: str) -> str:
    """Collapse Unicode whitespace runs to single spaces and strip ends."""
    return " ".join(raw.split())


def decode_html(data: bytes, encoding_hint: str | None = None) -> str:
    """Decode HTML bytes, trying BOM, declared charset, hint, then UTF-8.

    Candidates are tried in that order with strict error handling; the
    first one that decodes wins.  Raises UnreadableInput when none do.
    """
    candidates: list[str] = []
    for bom, enc in _BOMS:
        if data.startswith(bom):
            candidates.append(enc)
            break
    match = _CHARSET_RE.search(data[:1024])
    if match:
        candidates.append(match.group(1).decode("ascii", "replace"))
    if encoding_hint:
        candidates.append(encoding_hint)
    candidates.append("utf-8")
    for enc in candidates:
        try:
            return data.decode(enc)
        except (UnicodeDecodeError, LookupError):
            continue
    raise UnreadableInput(f"no candidate encoding decodes input: {candidates}")


@dataclass
class RawCell:
    """A td/th as parsed, before span normalization."""

    text: str = ""
    rowspan: int = 1
    colspan: int = 1


@dataclass(frozen=True)
class Cell:
    """An originating cell of a normalized grid."""

    id: str
    origin_row: int
    origin_col: int
    rowspan: int
    colspan: int
    text: str


@dataclass(frozen=True)
class TableGrid:
    """Rectangular grid: every coordinate is owned by exactly one cell."""

    table_index: int
    n_rows: int
    n_cols: int
    occupancy: tuple[tuple[str, ...], ...]
    cells: dict[str, Cell]

    def cell_at(self, row: int, col: int) -> Cell:
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise IndexError(f"coordinate ({row}, {col}) outside grid")
        return self.cells[self.occupancy[row][col]]

    def origin_cells(self) -> list[Cell]:
        """All originating cells in row-major origin order."""
        return sorted(
            self.cells.values(), key=lambda c: (c.origin_row, c.origin_col)
        )

    def row_origin_cells(self, row: int) -> list[Cell]:
        """Cells whose origin lies in the given row, left to right."""
        return [c for c in self.origin_cells() if c.origin_row == row]

    def row_texts(self, row: int) -> list[str]:
        """Text at every coordinate of the row (spans repeat)."""
        return [self.cell_at(row, col).text for col in range(self.n_cols)]

    def to_span_free_html(self) -> str:
        """Render as HTML where every coordinate is its own 1x1 td."""
        lines = ["<table>"]
        for row in range(self.n_rows):
            tds = "".join(
                f"<td>{_html.escape(text)}</td>" for text in self.row_texts(row)
            )
            lines.append(f"<tr>{tds}</tr>")
        lines.append("</table>")
        return "\n".join(lines)

    @classmethod
    def from_rows(cls, rows: list[list[str]], table_index: int = 0) -> "TableGrid":
        """Build a grid from plain text rows (all cells 1x1)."""
        raw = [[RawCell(text=t) for t in row] for row in rows]
        return normalize_grid(raw, table_index)


def normalize_grid(rows: list[list[RawCell]], table_index: int = 0) -> TableGrid:
    """Resolve spans into a rectangular occupancy grid.

    Cells are placed left to right at the first free column of their
    row; a rowspan x colspan rectangle is then marked occupied.
    Rowspans overhanging the last row are clipped, and coordinates no
    cell covers are filled with synthetic empty 1x1 cells.
    """
    n_rows = len(rows)
    if n_rows == 0:
        raise ValueError("cannot normalize a table with no rows")
    # occupancy[r] maps col -> cell id, grown on demand.
    occupancy: list[dict[int, str]] = [{} for _ in range(n_rows)]
    placed: list[tuple[int, int, RawCell]] = []

    for r, row in enumerate(rows):
        col = 0
        for cell in row:
            width = max(1, cell.colspan)
            while any(c in occupancy[r] for c in range(col, col + width)):
                col += 1
            height = min(max(1, cell.rowspan), n_rows - r)
            cell_id = f"t{table_index}-r{r}-c{col}"
            for rr in range(r, r + height):
                for cc in range(col, col + width):
                    occupancy[rr][cc] = cell_id
            placed.append((r, col, RawCell(cell.text, height, width)))
            col += width

    n_cols = max((max(row) + 1 for row in occupancy if row), default=0)
    if n_cols == 0:
        raise ValueError("cannot normalize a table with no cells")

    cells: dict[str, Cell] = {}
    for r, c, raw in placed:
        cell_id = f"t{table_index}-r{r}-c{c}"
        cells[cell_id] = Cell(
            id=cell_id,
            origin_row=r,
            origin_col=c,
            rowspan=raw.rowspan,
            colspan=raw.colspan,
            text=_clean_text(raw.text),
        )
    grid_rows: list[tuple[str, ...]] = []
    for r in range(n_rows):
        row_ids = []
        for c in range(n_cols):
            cell_id = occupancy[r].get(c)
            if cell_id is None:
                cell_id = f"t{table_index}-r{r}-c{c}"
                cells[cell_id] = Cell(cell_id, r, c, 1, 1, "")
            row_ids.append(cell_id)
        grid_rows.append(tuple(row_ids))

    return TableGrid(
        table_index=table_index,
        n_rows=n_rows,
        n_cols=n_cols,
        occupancy=tuple(grid_rows),
        cells=cells,
    )


@dataclass(frozen=True)
class Paragraph:
    block_index: int
    text: str


@dataclass(frozen=True)
class TableRef:
    block_index: int
    table_index: int


Block = Paragraph | TableRef


@dataclass(frozen=True)
class Document:
    blocks: tuple[Block, ...]
    tables: tuple[TableGrid, ...]

    def paragraph_at(self, block_index: int) -> Paragraph:
        if not (0 <= block_index < len(self.blocks)):
            raise BadBlockIndex(f"block index {block_index} out of range")
        block = self.blocks[block_index]
        if not isinstance(block, Paragraph):
            raise BadBlockIndex(f"block {block_index} is a table reference")
        return block

    def nearest_preceding_table(self, block_index: int) -> int | None:
        """Table index of the closest TableRef before the paragraph.

        Descriptions usually follow the table they talk about.  When
        no table precedes, the closest following one is used instead;
        None when the document has no tables at all.
        """
        self.paragraph_at(block_index)
        for block in reversed(self.blocks[:block_index]):
            if isinstance(block, TableRef):
                return block.table_index
        for block in self.blocks[block_index + 1:]:
            if isinstance(block, TableRef):
                return block.table_index
        return None


@dataclass
class _TableBuilder:
    rows: list[list[RawCell]] = field(default_factory=list)
    cell_open: bool = False

    def start_row(self) -> None:
        self.cell_open = False
        self.rows.append([])

    def start_cell(self, attrs: list[tuple[str, str | None]]) -> None:
        if not self.rows:
            self.rows.append([])
        cell = RawCell()
        for name, value in attrs:
            if name in ("rowspan", "colspan") and value:
                try:
                    span = int(value.strip())
                except ValueError:
                    continue
                setattr(cell, name, max(1, span))
        self.rows[-1].append(cell)
        self.cell_open = True

    def end_cell(self) -> None:
        self.cell_open = False

    def add_text(self, data: str) -> None:
        if self.cell_open and self.rows and self.rows[-1]:
            self.rows[-1][-1].text += data


class _DocumentParser(HTMLParser):
    """Streaming builder for the block model.

    A stack of table builders routes character data: text inside the
    innermost open table goes to its current cell, text outside any
    table accumulates into the running paragraph.
    """

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self._blocks_raw: list[tuple[str, object]] = []
        self._tables_raw: list[_TableBuilder] = []
        self._stack: list[_TableBuilder] = []
        self._para_runs: list[str] = []
        self._skip_depth = 0

    def _flush_paragraph(self) -> None:
        text = _clean_text("".join(self._para_runs))
        self._para_runs.clear()
        if text:
            self._blocks_raw.append(("paragraph", text))

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if tag == "br":
            # Line break, not a block boundary: becomes whitespace.
            self.handle_data(" ")
            return
        if tag == "table":
            if not self._stack:
                self._flush_paragraph()
            builder = _TableBuilder()
            self._blocks_raw.append(("table", builder))
            self._tables_raw.append(builder)
            self._stack.append(builder)
        elif self._stack:
            builder = self._stack[-1]
            if tag == "tr":
                builder.start_row()
            elif tag in ("td", "th"):
                builder.start_cell(attrs)
        elif tag in _BLOCK_TAGS:
            self._flush_paragraph()

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if tag == "table":
            if self._stack:
                self._stack.pop()
        elif self._stack:
            if tag in ("td", "th", "tr"):
                self._stack[-1].end_cell()
        elif tag in _BLOCK_TAGS:
            self._flush_paragraph()

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._stack:
            self._stack[-1].add_text(data)
        else:
            self._para_runs.append(data)

    def finish(self) -> Document:
        self.close()
        self._stack.clear()
        self._flush_paragraph()

        # Drop tables that hold no cells, keeping indexes consecutive.
        kept: dict[int, int] = {}
        tables: list[TableGrid] = []
        for builder in self._tables_raw:
            if any(builder.rows):
                kept[id(builder)] = len(tables)
                tables.append(normalize_grid(builder.rows, len(tables)))

        blocks: list[Block] = []
        for kind, payload in self._blocks_raw:
            if kind == "paragraph":
                blocks.append(Paragraph(len(blocks), payload))
            else:
                index = kept.get(id(payload))
                if index is not None:
                    blocks.append(TableRef(len(blocks), index))
        return Document(blocks=tuple(blocks), tables=tuple(tables))


def parse_document(
    data: bytes | str, encoding_hint: str | None = None
) -> Document:
    """Parse HTML bytes (or text) into the ordered block model."""
    text = decode_html(data, encoding_hint) if isinstance(data, bytes) else data
    parser = _DocumentParser()
    parser.feed(text)
    return parser.finish()
