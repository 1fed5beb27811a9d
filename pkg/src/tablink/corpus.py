"""Corpus file formats and configuration.

Three JSONL record shapes flow between pipeline stages:

cells:        {"cell_id", "table_index", "origin_row", "origin_col",
               "text", "label"?}
predictions:  {"cell_id", "label", "scores"?}
links:        {"doc", "desc_block", "table", "names", "values", "etc"}

All writers go through an atomic temp-file-then-rename so a crashed
run never leaves a truncated artifact behind.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .adapter import AdapterSpec
from .classify import Prediction
from .document import Document, Paragraph
from .evaluate import table_key
from .labels import CellLabel
from .linker import LinkResult, LinkerConfig
from .serialize import SerializedExample, SerializerConfig, serialize_texts


class CorpusSchemaError(ValueError):
    """Raised when a corpus file does not match its record schema."""


class ConfigError(ValueError):
    """Raised when a configuration file is malformed."""


def atomic_write_text(path, text: str) -> None:
    """Write text via a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_jsonl(path, records: Iterable[dict]) -> None:
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) pairs; blank lines are skipped."""
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusSchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise CorpusSchemaError(f"{path}:{lineno}: expected an object")
            yield lineno, obj


# -- cell records ---------------------------------------------------------------

@dataclass(frozen=True)
class CellRecord:
    cell_id: str
    table_index: int
    origin_row: int
    origin_col: int
    text: str
    label: CellLabel | None = None

    def to_json(self) -> dict:
        record = {
            "cell_id": self.cell_id,
            "table_index": self.table_index,
            "origin_row": self.origin_row,
            "origin_col": self.origin_col,
            "text": self.text,
        }
        if self.label is not None:
            record["label"] = self.label.value
        return record


_CELL_FIELDS = {"cell_id", "table_index", "origin_row", "origin_col", "text", "label"}


def _cell_record_from_json(obj: dict, where: str) -> CellRecord:
    unknown = set(obj) - _CELL_FIELDS
    if unknown:
        raise CorpusSchemaError(f"{where}: unknown fields {sorted(unknown)}")
    try:
        label = obj.get("label")
        return CellRecord(
            cell_id=str(obj["cell_id"]),
            table_index=int(obj["table_index"]),
            origin_row=int(obj["origin_row"]),
            origin_col=int(obj["origin_col"]),
            text=str(obj["text"]),
            label=CellLabel.from_str(label) if label is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusSchemaError(f"{where}: {exc}") from None


def cell_records_from_document(
    document: Document, id_prefix: str = ""
) -> list[CellRecord]:
    """One unlabeled record per originating cell, document order."""
    records = []
    for grid in document.tables:
        for cell in grid.origin_cells():
            records.append(CellRecord(
                cell_id=id_prefix + cell.id,
                table_index=grid.table_index,
                origin_row=cell.origin_row,
                origin_col=cell.origin_col,
                text=cell.text,
            ))
    return records


def write_cell_records(path, records: Iterable[CellRecord]) -> None:
    write_jsonl(path, (r.to_json() for r in records))


def read_cell_records(path, require_labels: bool = False) -> list[CellRecord]:
    records = []
    for lineno, obj in read_jsonl(path):
        record = _cell_record_from_json(obj, f"{path}:{lineno}")
        if require_labels and record.label is None:
            raise CorpusSchemaError(f"{path}:{lineno}: record has no label")
        records.append(record)
    return records


def group_rows(records: Sequence[CellRecord]) -> list[list[CellRecord]]:
    """Group records into table rows, each sorted left to right.

    Rows are keyed by (table, origin_row) and returned in first-seen
    order, which for extractor output is document order.
    """
    groups: dict[tuple[str, int], list[CellRecord]] = {}
    for record in records:
        key = (table_key(record.cell_id), record.origin_row)
        groups.setdefault(key, []).append(record)
    return [
        sorted(group, key=lambda r: r.origin_col) for group in groups.values()
    ]


def serialize_records(
    records: Sequence[CellRecord],
    config: SerializerConfig = SerializerConfig(),
) -> list[SerializedExample]:
    """Serialize records with their row context, aligned with the input.

    Row context comes from sibling records of the same table row; span
    repetition is not reconstructed, so each originating cell appears
    once.
    """
    by_id: dict[str, SerializedExample] = {}
    for row in group_rows(records):
        texts = [record.text for record in row]
        for record in row:
            by_id[record.cell_id] = serialize_texts(
                record.cell_id, record.text, texts, config
            )
    return [by_id[record.cell_id] for record in records]


# -- predictions ------------------------------------------------------------------

def write_predictions(path, predictions: Iterable[Prediction]) -> None:
    write_jsonl(
        path,
        (
            {"cell_id": p.cell_id, "label": p.label.value, "scores": p.scores}
            for p in predictions
        ),
    )


def read_predictions(path) -> list[Prediction]:
    predictions = []
    for lineno, obj in read_jsonl(path):
        where = f"{path}:{lineno}"
        unknown = set(obj) - {"cell_id", "label", "scores"}
        if unknown:
            raise CorpusSchemaError(f"{where}: unknown fields {sorted(unknown)}")
        try:
            scores = obj.get("scores") or {}
            predictions.append(Prediction(
                cell_id=str(obj["cell_id"]),
                label=CellLabel.from_str(obj["label"]),
                scores={str(k): float(v) for k, v in scores.items()},
            ))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise CorpusSchemaError(f"{where}: {exc}") from None
    return predictions


# -- links ------------------------------------------------------------------------

def link_result_to_dict(result: LinkResult, doc: str = "-") -> dict:
    return {
        "doc": doc,
        "desc_block": result.desc_block,
        "table": result.table_index,
        "names": [match.cell_id for match in result.names],
        "values": list(result.values),
        "etc": list(result.etc),
    }


_LINK_FIELDS = {"doc", "desc_block", "table", "names", "values", "etc"}


def read_links(path) -> list[dict]:
    links = []
    for lineno, obj in read_jsonl(path):
        where = f"{path}:{lineno}"
        unknown = set(obj) - _LINK_FIELDS
        if unknown:
            raise CorpusSchemaError(f"{where}: unknown fields {sorted(unknown)}")
        if "desc_block" not in obj or "table" not in obj:
            raise CorpusSchemaError(f"{where}: missing desc_block/table")
        for role in ("names", "values", "etc"):
            if not isinstance(obj.get(role, []), list):
                raise CorpusSchemaError(f"{where}: {role} must be a list")
        links.append({
            "doc": str(obj.get("doc", "-")),
            "desc_block": int(obj["desc_block"]),
            "table": obj["table"] if obj["table"] is None else int(obj["table"]),
            "names": [str(c) for c in obj.get("names", [])],
            "values": [str(c) for c in obj.get("values", [])],
            "etc": [str(c) for c in obj.get("etc", [])],
        })
    return links


def write_links(path, links: Iterable[dict]) -> None:
    write_jsonl(path, links)


# -- document serialization ---------------------------------------------------------

def document_to_dict(document: Document) -> dict:
    """Full JSON form of a parsed document (blocks plus grids)."""
    blocks = []
    for block in document.blocks:
        if isinstance(block, Paragraph):
            blocks.append({
                "type": "paragraph",
                "block_index": block.block_index,
                "text": block.text,
            })
        else:
            blocks.append({
                "type": "table",
                "block_index": block.block_index,
                "table_index": block.table_index,
            })
    tables = []
    for grid in document.tables:
        tables.append({
            "table_index": grid.table_index,
            "n_rows": grid.n_rows,
            "n_cols": grid.n_cols,
            "occupancy": [list(row) for row in grid.occupancy],
            "cells": [
                {
                    "cell_id": cell.id,
                    "origin_row": cell.origin_row,
                    "origin_col": cell.origin_col,
                    "rowspan": cell.rowspan,
                    "colspan": cell.colspan,
                    "text": cell.text,
                }
                for cell in grid.origin_cells()
            ],
        })
    return {"blocks": blocks, "tables": tables}


# -- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class ClassifierConfig:
    mode: str = "baseline"  # "baseline" or "adapter"
    model_path: str | None = None
    ngram_orders: tuple[int, ...] = (1, 2, 3)
    alpha: float = 1.0
    adapter: AdapterSpec | None = None


@dataclass(frozen=True)
class PipelineConfig:
    serializer: SerializerConfig
    classifier: ClassifierConfig
    linker: LinkerConfig
    seed: int


def default_config() -> PipelineConfig:
    return PipelineConfig(
        serializer=SerializerConfig(),
        classifier=ClassifierConfig(),
        linker=LinkerConfig(),
        seed=0,
    )


def _take(section: dict, where: str, allowed: set[str]) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return section


def parse_config(payload: dict, where: str = "config") -> PipelineConfig:
    top = _take(payload, where, {"serializer", "classifier", "linker", "seed"})
    try:
        ser = _take(
            top.get("serializer", {}), f"{where}.serializer",
            {"max_tokens", "separator", "token_mode"},
        )
        serializer = SerializerConfig(
            max_tokens=int(ser.get("max_tokens", 128)),
            separator=str(ser.get("separator", "[SEP]")),
            token_mode=str(ser.get("token_mode", "char")),
        )
        clf = _take(
            top.get("classifier", {}), f"{where}.classifier",
            {"mode", "model_path", "ngram_orders", "alpha", "adapter"},
        )
        adapter = None
        if clf.get("adapter") is not None:
            ada = _take(
                clf["adapter"], f"{where}.classifier.adapter",
                {"transport", "target", "timeout_ms", "batch_size"},
            )
            adapter = AdapterSpec(
                transport=str(ada["transport"]),
                target=str(ada["target"]),
                timeout_ms=int(ada.get("timeout_ms", 10000)),
                batch_size=int(ada.get("batch_size", 32)),
            )
        mode = str(clf.get("mode", "baseline"))
        if mode not in ("baseline", "adapter"):
            raise ConfigError(f"{where}.classifier: unknown mode {mode!r}")
        if mode == "adapter" and adapter is None:
            raise ConfigError(
                f"{where}.classifier: mode adapter needs an adapter section"
            )
        model_path = clf.get("model_path")
        if model_path is not None and not Path(model_path).is_file():
            raise ConfigError(
                f"{where}.classifier: model_path does not exist: {model_path}"
            )
        classifier = ClassifierConfig(
            mode=mode,
            model_path=model_path,
            ngram_orders=tuple(int(n) for n in clf.get("ngram_orders", (1, 2, 3))),
            alpha=float(clf.get("alpha", 1.0)),
            adapter=adapter,
        )
        lnk = _take(
            top.get("linker", {}), f"{where}.linker",
            {
                "name_similarity_threshold", "numeric_ratio_threshold",
                "header_rows", "header_cols", "particles", "bracket_pairs",
            },
        )
        defaults = LinkerConfig()
        pairs = lnk.get("bracket_pairs")
        if pairs is not None:
            pairs = tuple(
                (str(open_ch), str(close_ch)) for open_ch, close_ch in pairs
            )
        linker = LinkerConfig(
            name_similarity_threshold=float(
                lnk.get(
                    "name_similarity_threshold",
                    defaults.name_similarity_threshold,
                )
            ),
            numeric_ratio_threshold=float(
                lnk.get(
                    "numeric_ratio_threshold", defaults.numeric_ratio_threshold
                )
            ),
            header_rows=int(lnk.get("header_rows", defaults.header_rows)),
            header_cols=int(lnk.get("header_cols", defaults.header_cols)),
            particles=tuple(
                str(p) for p in lnk.get("particles", defaults.particles)
            ),
            bracket_pairs=pairs if pairs is not None else defaults.bracket_pairs,
        )
        return PipelineConfig(
            serializer=serializer,
            classifier=classifier,
            linker=linker,
            seed=int(top.get("seed", 0)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return parse_config(payload, where=str(path))
