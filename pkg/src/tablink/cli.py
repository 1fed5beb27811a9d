"""Command line interface.

Subcommands mirror the pipeline stages: extract, train,
build-patterns, classify, correct, link, eval, stats and
random-baseline.  Results go to stdout unless --out is given, in
which case they are written atomically.

Exit codes: 0 success, 2 unreadable or missing input, 3 malformed
corpus data, 4 adapter failure, 5 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .adapter import AdapterClient, AdapterUnavailable, ProtocolViolation
from .classify import (
    EmptyCorpus,
    MissingClass,
    NaiveBayesCellClassifier,
    classify_batch,
    train_baseline,
)
from .corpus import (
    ConfigError,
    CorpusSchemaError,
    atomic_write_text,
    cell_records_from_document,
    default_config,
    document_to_dict,
    group_rows,
    link_result_to_dict,
    load_config,
    read_cell_records,
    read_links,
    read_predictions,
    serialize_records,
    write_cell_records,
    write_jsonl,
    write_links,
    write_predictions,
)
from .document import UnreadableInput, parse_document
from .evaluate import (
    EmptyGold,
    eval_tde,
    eval_ttre,
    histogram_of_texts,
    random_baseline,
    render_histogram,
)
from .linker import link_document
from .patterns import (
    EmptyPrediction,
    build_pattern_bank,
    correct_row,
    load_pattern_bank,
    save_pattern_bank,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CORPUS = 3
EXIT_ADAPTER = 4
EXIT_CONFIG = 5


def _collect_reports(paths: list[str]) -> list[tuple[str, Path, bool]]:
    """Resolve report arguments to (name, path, strict) triples.

    Directories contribute their HTML members in sorted order; a
    missing explicit path is an error, while a bad directory member
    only warns (strict=False).
    """
    files: list[tuple[str, Path, bool]] = []
    for arg in paths:
        path = Path(arg)
        if path.is_dir():
            members = sorted(
                p for p in path.iterdir()
                if p.suffix.lower() in (".html", ".htm") and p.is_file()
            )
            files.extend((p.stem, p, False) for p in members)
        elif path.is_file():
            files.append((path.stem, path, True))
        else:
            raise FileNotFoundError(f"no such report: {arg}")
    return files


def _parse_reports(ns) -> list[tuple[str, object]]:
    documents = []
    for name, path, strict in _collect_reports(ns.reports):
        try:
            doc = parse_document(
                path.read_bytes(), getattr(ns, "encoding", None)
            )
        except (UnreadableInput, OSError) as exc:
            if strict:
                raise
            logger.warning("skipping %s: %s", path, exc)
            continue
        documents.append((name, doc))
    return documents


def _emit_text(ns, text: str) -> None:
    if ns.out:
        atomic_write_text(ns.out, text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _emit_json(ns, obj) -> None:
    _emit_text(ns, json.dumps(obj, ensure_ascii=False, indent=2))


def _emit_jsonl(ns, records: list[dict]) -> None:
    if ns.out:
        write_jsonl(ns.out, records)
    else:
        for record in records:
            print(json.dumps(record, ensure_ascii=False))


# -- commands -------------------------------------------------------------------

def cmd_extract(ns, config) -> int:
    # The id shape must not depend on how many reports happened to
    # parse, only on how many were requested.
    multi = len(_collect_reports(ns.reports)) > 1
    documents = _parse_reports(ns)
    if ns.doc_out:
        docs = {name: document_to_dict(doc) for name, doc in documents}
        payload = docs[documents[0][0]] if documents and not multi else docs
        atomic_write_text(
            ns.doc_out, json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
        )
    records = []
    for name, doc in documents:
        records.extend(
            cell_records_from_document(doc, f"{name}:" if multi else "")
        )
    if ns.out:
        write_cell_records(ns.out, records)
    else:
        _emit_jsonl(ns, [r.to_json() for r in records])
    return EXIT_OK


def cmd_train(ns, config) -> int:
    records = read_cell_records(ns.cells, require_labels=True)
    examples = serialize_records(records, config.serializer)
    model = train_baseline(
        list(zip(examples, (r.label for r in records))),
        ngram_orders=config.classifier.ngram_orders,
        alpha=config.classifier.alpha,
    )
    if ns.out:
        model.save(ns.out)
    else:
        print(json.dumps(model.to_payload(), ensure_ascii=False))
    return EXIT_OK


def cmd_build_patterns(ns, config) -> int:
    records = read_cell_records(ns.cells, require_labels=True)
    rows = [
        tuple(record.label for record in row) for row in group_rows(records)
    ]
    bank = build_pattern_bank(rows)
    if ns.out:
        save_pattern_bank(bank, ns.out)
    else:
        payload = {
            "source_digest": bank.source_digest,
            "patterns": [
                {"labels": [l.value for l in p], "freq": f}
                for p, f in bank.sorted_patterns()
            ],
        }
        _emit_json(ns, payload)
    return EXIT_OK


def cmd_classify(ns, config) -> int:
    records = read_cell_records(ns.cells)
    examples = serialize_records(records, config.serializer)
    clf = config.classifier
    if clf.mode == "adapter":
        with AdapterClient(clf.adapter) as client:
            predictions = classify_batch(client, examples)
    else:
        model_path = ns.model or clf.model_path
        if not model_path:
            raise ConfigError(
                "classify needs --model or classifier.model_path in the config"
            )
        model = NaiveBayesCellClassifier.load(model_path)
        predictions = classify_batch(model, examples)
    if ns.out:
        write_predictions(ns.out, predictions)
    else:
        _emit_jsonl(ns, [
            {"cell_id": p.cell_id, "label": p.label.value, "scores": p.scores}
            for p in predictions
        ])
    return EXIT_OK


def cmd_correct(ns, config) -> int:
    records = read_cell_records(ns.cells)
    predictions = {p.cell_id: p for p in read_predictions(ns.predictions)}
    bank = load_pattern_bank(ns.patterns)
    out = []
    for row in group_rows(records):
        row_preds = [predictions.get(r.cell_id) for r in row]
        if any(p is None for p in row_preds):
            logger.warning(
                "row of %s has unclassified cells; left uncorrected",
                row[0].cell_id,
            )
            out.extend(p for p in row_preds if p is not None)
            continue
        corrected = correct_row(tuple(p.label for p in row_preds), bank)
        out.extend(
            dataclasses.replace(pred, label=label)
            for pred, label in zip(row_preds, corrected)
        )
    if ns.out:
        write_predictions(ns.out, out)
    else:
        _emit_jsonl(ns, [
            {"cell_id": p.cell_id, "label": p.label.value, "scores": p.scores}
            for p in out
        ])
    return EXIT_OK


def cmd_link(ns, config) -> int:
    links = []
    for name, doc in _parse_reports(ns):
        for result in link_document(doc, config.linker):
            links.append(link_result_to_dict(result, doc=name))
    if ns.out:
        write_links(ns.out, links)
    else:
        _emit_jsonl(ns, links)
    return EXIT_OK


def cmd_eval(ns, config) -> int:
    if ns.task == "tde":
        gold_records = read_cell_records(ns.gold, require_labels=True)
        gold = {r.cell_id: r.label for r in gold_records}
        predicted = {p.cell_id: p.label for p in read_predictions(ns.pred)}
        score = eval_tde(predicted, gold)
        _emit_json(ns, {"tde": {
            "macro_accuracy": score.macro_accuracy,
            "micro_accuracy": score.micro_accuracy,
            "n_cells": score.n_cells,
            "n_correct": score.n_correct,
            "per_table": score.per_table,
        }})
    else:
        gold = read_links(ns.gold)
        predicted = read_links(ns.pred)
        score = eval_ttre(predicted, gold)
        _emit_json(ns, {"ttre": {
            "name_f1": score.name.f1,
            "value_f1": score.value.f1,
            "total": score.total,
            "counts": {
                "name": {"tp": score.name.tp, "fp": score.name.fp, "fn": score.name.fn},
                "value": {"tp": score.value.tp, "fp": score.value.fp, "fn": score.value.fn},
                "links_predicted": score.n_links_predicted,
                "links_gold": score.n_links_gold,
                "etc_predicted": score.n_etc_predicted,
                "etc_gold": score.n_etc_gold,
            },
            "name_precision": score.name.precision,
            "name_recall": score.name.recall,
            "value_precision": score.value.precision,
            "value_recall": score.value.recall,
        }})
    return EXIT_OK


def cmd_stats(ns, config) -> int:
    records = read_cell_records(ns.cells)
    histogram = histogram_of_texts(
        (r.text for r in records), config.serializer
    )
    chart = render_histogram(histogram)
    summary = {
        "total_cells": histogram.total_cells,
        "mean_tokens": histogram.mean,
        "bins": {str(k): v for k, v in sorted(histogram.bins.items())},
    }
    if ns.out:
        _emit_json(ns, summary)
        if not ns.quiet:
            print(chart)
    else:
        print(chart)
        print(f"cells: {histogram.total_cells}  mean tokens: {histogram.mean:.2f}")
    return EXIT_OK


def cmd_random_baseline(ns, config) -> int:
    links = []
    for name, doc in _parse_reports(ns):
        for link in random_baseline(doc, seed=config.seed):
            link["doc"] = name
            links.append(link)
    if ns.out:
        write_links(ns.out, links)
    else:
        _emit_jsonl(ns, links)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("common options")
    group.add_argument(
        "--config", default=argparse.SUPPRESS, help="pipeline config JSON"
    )
    group.add_argument(
        "--out", default=argparse.SUPPRESS, help="output path (default stdout)"
    )
    group.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS,
        help="seed for randomized commands",
    )
    group.add_argument(
        "--quiet", action="store_true", default=argparse.SUPPRESS,
        help="suppress warnings",
    )

    parser = argparse.ArgumentParser(
        prog="tablink",
        description="Table extraction and text-to-table linking for HTML reports.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("extract", cmd_extract, "parse reports into cell records")
    p.add_argument("reports", nargs="+", help="HTML files or directories")
    p.add_argument("--encoding", help="encoding hint for undeclared inputs")
    p.add_argument(
        "--doc-out", help="also write the full block model JSON here"
    )

    p = add("train", cmd_train, "train the baseline classifier")
    p.add_argument("cells", help="labeled cell records JSONL")

    p = add("build-patterns", cmd_build_patterns, "mine row label patterns")
    p.add_argument("cells", help="labeled cell records JSONL")

    p = add("classify", cmd_classify, "classify cell records")
    p.add_argument("cells", help="cell records JSONL")
    p.add_argument("--model", help="baseline model JSON")

    p = add("correct", cmd_correct, "pattern-correct predicted labels")
    p.add_argument("predictions", help="predictions JSONL")
    p.add_argument("--cells", required=True, help="cell records JSONL")
    p.add_argument("--patterns", required=True, help="pattern bank JSON")

    p = add("link", cmd_link, "link descriptions to table cells")
    p.add_argument("reports", nargs="+", help="HTML files or directories")
    p.add_argument("--encoding", help="encoding hint for undeclared inputs")

    p = add("eval", cmd_eval, "score predictions against gold")
    p.add_argument("--task", required=True, choices=("tde", "ttre"))
    p.add_argument("--pred", required=True, help="predicted labels or links")
    p.add_argument("--gold", required=True, help="gold labels or links")

    p = add("stats", cmd_stats, "token length histogram over cell records")
    p.add_argument("cells", help="cell records JSONL")

    p = add("random-baseline", cmd_random_baseline, "random links for reports")
    p.add_argument("reports", nargs="+", help="HTML files or directories")

    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    for attr, default in (
        ("config", None), ("out", None), ("seed", None), ("quiet", False),
    ):
        if not hasattr(ns, attr):
            setattr(ns, attr, default)
    logging.basicConfig(
        level=logging.ERROR if ns.quiet else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_config(ns.config) if ns.config else default_config()
        if ns.seed is not None:
            config = dataclasses.replace(config, seed=ns.seed)
        return ns.func(ns, config)
    # AdapterUnavailable is an OSError subclass: it must be matched
    # before the generic input handler to keep its own exit code.
    except (AdapterUnavailable, ProtocolViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except (UnreadableInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (
        CorpusSchemaError, EmptyCorpus, MissingClass, EmptyPrediction,
        EmptyGold,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORPUS
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
