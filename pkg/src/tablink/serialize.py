"""Cell serialization: target text plus row context, length-capped.

A serialized cell is the target text followed by the text at every
coordinate of its row (spans repeat), joined with a separator token.
The result is truncated to at most ``max_tokens`` tokens; the separator
always counts as a single token no matter how it is spelled.
"""
from __future__ import annotations

from dataclasses import dataclass

from .document import TableGrid


class OutOfBounds(IndexError):
    """Raised when a serialization coordinate lies outside the grid."""


@dataclass(frozen=True)
class SerializerConfig:
    max_tokens: int = 128
    separator: str = "[SEP]"
    token_mode: str = "char"

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.token_mode not in ("char", "whitespace"):
            raise ValueError(f"unknown token_mode: {self.token_mode!r}")
        if not self.separator:
            raise ValueError("separator must be non-empty")


@dataclass(frozen=True)
class SerializedExample:
    cell_id: str
    text: str
    token_count: int
    truncated: bool


@dataclass(frozen=True)
class _Token:
    start: int
    end: int


def _scan(text: str, config: SerializerConfig) -> list[_Token]:
    """Token spans of ``text``: separator occurrences are atomic."""
    sep = config.separator
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        hit = text.find(sep, pos)
        segment_end = hit if hit >= 0 else len(text)
        if config.token_mode == "char":
            for i in range(pos, segment_end):
                if not text[i].isspace():
                    tokens.append(_Token(i, i + 1))
        else:
            i = pos
            while i < segment_end:
                if text[i].isspace():
                    i += 1
                    continue
                j = i
                while j < segment_end and not text[j].isspace():
                    j += 1
                tokens.append(_Token(i, j))
                i = j
        if hit < 0:
            break
        tokens.append(_Token(hit, hit + len(sep)))
        pos = hit + len(sep)
    return tokens


def tokenize(text: str, config: SerializerConfig) -> list[str]:
    """Tokens of ``text`` under the config's token mode."""
    return [text[t.start:t.end] for t in _scan(text, config)]


def count_tokens(text: str, config: SerializerConfig) -> int:
    return len(_scan(text, config))


def serialize_texts(
    cell_id: str,
    target_text: str,
    row_texts: list[str],
    config: SerializerConfig = SerializerConfig(),
) -> SerializedExample:
    """Assemble target + row context and truncate to the token cap.

    Truncation slices the assembled string at the end offset of the
    last kept token, so original spacing inside the kept prefix is
    preserved.
    """
    sep = f" {config.separator} "
    assembled = target_text + sep + sep.join(row_texts)
    tokens = _scan(assembled, config)
    if len(tokens) <= config.max_tokens:
        return SerializedExample(cell_id, assembled, len(tokens), False)
    cut = tokens[config.max_tokens - 1].end
    return SerializedExample(cell_id, assembled[:cut], config.max_tokens, True)


def serialize_cell(
    grid: TableGrid,
    row: int,
    col: int,
    config: SerializerConfig = SerializerConfig(),
) -> SerializedExample:
    """Serialize the cell owning coordinate (row, col) with its row."""
    if not (0 <= row < grid.n_rows and 0 <= col < grid.n_cols):
        raise OutOfBounds(
            f"({row}, {col}) outside {grid.n_rows}x{grid.n_cols} grid"
        )
    cell = grid.cell_at(row, col)
    return serialize_texts(cell.id, cell.text, grid.row_texts(row), config)


def serialize_table(
    grid: TableGrid, config: SerializerConfig = SerializerConfig()
) -> list[SerializedExample]:
    """One example per originating cell, row-major origin order."""
    return [
        serialize_texts(
            cell.id, cell.text, grid.row_texts(cell.origin_row), config
        )
        for cell in grid.origin_cells()
    ]
