"""Cell label set shared across the package.

Every table cell belongs to exactly one of four categories.  The enum
order below is the canonical order: it is used for deterministic
tie-breaking and for stable serialization of label sequences.
"""
from __future__ import annotations

import enum


class CellLabel(enum.Enum):
    METADATA = "metadata"
    HEADER = "header"
    ATTRIBUTE = "attribute"
    DATA = "data"

    def __lt__(self, other: "CellLabel") -> bool:
        if not isinstance(other, CellLabel):
            return NotImplemented
        return _ORDER[self] < _ORDER[other]

    @classmethod
    def from_str(cls, value: str) -> "CellLabel":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown cell label: {value!r}") from None


_ORDER = {label: i for i, label in enumerate(CellLabel)}

CANONICAL_ORDER: tuple[CellLabel, ...] = tuple(CellLabel)


def canonical_sort(labels: list[CellLabel]) -> list[CellLabel]:
    """Sort labels by canonical order (metadata, header, attribute, data)."""
    return sorted(labels, key=_ORDER.__getitem__)
