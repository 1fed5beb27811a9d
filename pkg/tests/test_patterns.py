"""Pattern bank mining, Levenshtein alignment, and row correction.

Expected distances and alignments were worked out by hand on paper;
digests were computed once from the documented "label,label\\n" hash
input and frozen here.
"""
from __future__ import annotations

import random

import pytest

from tablink.labels import CellLabel
from tablink.patterns import (
    DELETE,
    INSERT,
    MATCH,
    SUBSTITUTE,
    EditOp,
    EmptyPrediction,
    PatternBank,
    RowPatternCorrector,
    backtrace,
    build_pattern_bank,
    correct_row,
    correct_table,
    levenshtein,
    load_pattern_bank,
    save_pattern_bank,
)

M = CellLabel.METADATA
H = CellLabel.HEADER
A = CellLabel.ATTRIBUTE
D = CellLabel.DATA


class TestLevenshtein:
    def test_kitten_sitting(self):
        assert levenshtein("kitten", "sitting") == 3

    def test_empty_versus_nonempty(self):
        assert levenshtein("", "abc") == 3
        assert levenshtein("abc", "") == 3
        assert levenshtein("", "") == 0

    def test_identity_is_zero(self):
        assert levenshtein((H, D, D), (H, D, D)) == 0

    def test_symmetry(self):
        assert levenshtein("abcf", "azced") == levenshtein("azced", "abcf")

    def test_label_sequences(self):
        assert levenshtein((H, D, H, D), (H, D, D, D)) == 1
        assert levenshtein((M, H, H, H, H), (M, H, H, H)) == 1
        assert levenshtein((H, D, H, D), (A, D, D, D)) == 2


class TestBacktrace:
    def test_all_matches(self):
        assert backtrace((H, D), (H, D)) == [
            EditOp(MATCH, 0, 0),
            EditOp(MATCH, 1, 1),
        ]

    def test_single_substitution(self):
        assert backtrace((H, D), (H, A)) == [
            EditOp(MATCH, 0, 0),
            EditOp(SUBSTITUTE, 1, 1),
        ]

    def test_trailing_delete(self):
        assert backtrace("abc", "ab") == [
            EditOp(MATCH, 0, 0),
            EditOp(MATCH, 1, 1),
            EditOp(DELETE, 2, None),
        ]

    def test_inserts_from_empty(self):
        assert backtrace("", "ab") == [
            EditOp(INSERT, None, 0),
            EditOp(INSERT, None, 1),
        ]

    def test_deletes_to_empty(self):
        assert backtrace("ab", "") == [
            EditOp(DELETE, 0, None),
            EditOp(DELETE, 1, None),
        ]

    def test_diagonal_preferred_on_ties(self):
        # "aa" -> "a" admits both [match, delete] and [delete, match];
        # the backtrace prefers the diagonal step at the final cell, so
        # the delete must land on the *first* position.
        assert backtrace("aa", "a") == [
            EditOp(DELETE, 0, None),
            EditOp(MATCH, 1, 0),
        ]

    def test_op_count_matches_distance(self):
        rng = random.Random(5)
        alphabet = [M, H, A, D]
        for _ in range(200):
            a = tuple(rng.choice(alphabet) for _ in range(rng.randrange(8)))
            b = tuple(rng.choice(alphabet) for _ in range(rng.randrange(8)))
            ops = backtrace(a, b)
            cost = sum(op.kind != MATCH for op in ops)
            assert cost == levenshtein(a, b)
            # every op except delete emits one target symbol, so the
            # alignment replays a onto b
            out = [b[op.target] for op in ops if op.kind != DELETE]
            assert tuple(out) == b
            assert sum(op.kind in (MATCH, SUBSTITUTE, DELETE) for op in ops) == len(a)


class TestPatternBank:
    def test_counts_duplicate_rows(self):
        bank = build_pattern_bank([(H, D), (H, D), (A, D)])
        assert bank.entries == {(H, D): 2, (A, D): 1}
        assert len(bank) == 2
        assert (H, D) in bank and (M, M) not in bank

    def test_digest_is_pinned(self):
        bank = build_pattern_bank([(H, D), (H, D), (A, D)])
        assert bank.source_digest == (
            "9efe9ba06eb50954672c773404658f6ed816669d6f453decb9a4e15799710f83"
        )

    def test_empty_input_digest(self):
        bank = build_pattern_bank([])
        assert bank.entries == {}
        assert bank.source_digest == (
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        )

    def test_empty_rows_are_skipped(self):
        bank = build_pattern_bank([(), (H,), ()])
        assert bank.entries == {(H,): 1}
        assert bank.source_digest == (
            "565f129f4727ecb986814e0278dd2d0b21521159ac19a1292403826302d62462"
        )

    def test_digest_depends_on_order(self):
        ab = build_pattern_bank([(H, D), (A, D)])
        ba = build_pattern_bank([(A, D), (H, D)])
        assert ab.entries == ba.entries
        assert ab.source_digest != ba.source_digest

    def test_sorted_patterns(self):
        bank = build_pattern_bank([(H, D), (H, D), (A, D), (M, H)])
        assert bank.sorted_patterns() == [
            ((H, D), 2),
            ((A, D), 1),   # "attribute,data" sorts before "metadata,header"
            ((M, H), 1),
        ]


class TestCorrectRow:
    def test_single_flip_is_repaired(self):
        bank = build_pattern_bank([(H, D, D, D)] * 5 + [(A, D, D, D)] * 2)
        assert correct_row((H, D, H, D), bank) == (H, D, D, D)

    def test_length_mismatch_yields_no_substitutions(self):
        # nearest pattern is one shorter; the alignment is four matches
        # plus a delete, so nothing changes and length is preserved
        bank = build_pattern_bank([(M, H, H, H)] * 3)
        assert correct_row((M, H, H, H, H), bank) == (M, H, H, H, H)

    def test_exact_match_is_identity(self):
        bank = build_pattern_bank([(H, D, D), (A, D, D)])
        assert correct_row((A, D, D), bank) == (A, D, D)

    def test_empty_bank_is_identity(self):
        bank = build_pattern_bank([])
        assert correct_row((H, H, H), bank) == (H, H, H)

    def test_empty_prediction_rejected(self):
        bank = build_pattern_bank([(H, D)])
        with pytest.raises(EmptyPrediction):
            correct_row((), bank)

    def test_tie_on_distance_prefers_higher_frequency(self):
        bank = build_pattern_bank([(H, D)] * 1 + [(H, A)] * 5)
        assert correct_row((H, H), bank) == (H, A)

    def test_tie_on_frequency_prefers_shorter_pattern(self):
        # both patterns are at distance 1 with equal frequency; only the
        # shorter one aligns via a substitution, so the corrected output
        # reveals which pattern was chosen
        bank = build_pattern_bank([(H, A)] * 2 + [(H, A, D)] * 2)
        assert correct_row((H, D), bank) == (H, A)

    def test_tie_on_length_prefers_canonical_serialization(self):
        bank = build_pattern_bank([(M, A), (M, H)])
        assert correct_row((M, M), bank) == (M, A)

    def test_output_length_always_preserved(self):
        rng = random.Random(23)
        alphabet = [M, H, A, D]
        gold = [
            tuple(rng.choice(alphabet) for _ in range(rng.randrange(1, 7)))
            for _ in range(40)
        ]
        bank = build_pattern_bank(gold)
        for _ in range(300):
            row = tuple(rng.choice(alphabet) for _ in range(rng.randrange(1, 9)))
            corrected = correct_row(row, bank)
            assert len(corrected) == len(row)
            changed = sum(x != y for x, y in zip(row, corrected))
            nearest = min(levenshtein(row, p) for p in bank.entries)
            assert changed <= nearest

    def test_same_length_correction_is_idempotent(self):
        rng = random.Random(29)
        alphabet = [M, H, A, D]
        gold = [tuple(rng.choice(alphabet) for _ in range(4)) for _ in range(25)]
        bank = build_pattern_bank(gold)
        for _ in range(200):
            row = tuple(rng.choice(alphabet) for _ in range(4))
            once = correct_row(row, bank)
            assert correct_row(once, bank) == once

    def test_correct_table_maps_rows(self):
        bank = build_pattern_bank([(H, D, D, D)] * 5)
        rows = [(H, D, H, D), (H, D, D, D)]
        assert correct_table(rows, bank) == [(H, D, D, D), (H, D, D, D)]


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        bank = build_pattern_bank([(H, D), (H, D), (A, D), (M, H, A, D)])
        path = tmp_path / "bank.json"
        save_pattern_bank(bank, path)
        loaded = load_pattern_bank(path)
        assert loaded.entries == bank.entries
        assert loaded.source_digest == bank.source_digest

    def test_file_is_sorted_by_frequency(self, tmp_path):
        import json

        bank = build_pattern_bank([(A, D), (H, D), (H, D)])
        path = tmp_path / "bank.json"
        save_pattern_bank(bank, path)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert [p["labels"] for p in payload["patterns"]] == [
            ["header", "data"],
            ["attribute", "data"],
        ]
        assert [p["freq"] for p in payload["patterns"]] == [2, 1]


class TestRowPatternCorrector:
    def test_fit_transform(self):
        corrector = RowPatternCorrector()
        out = corrector.fit([(H, D, D)] * 3).transform([(H, D, H)])
        assert out == [(H, D, D)]
        assert isinstance(corrector.bank_, PatternBank)

    def test_transform_before_fit_raises(self):
        with pytest.raises(RuntimeError, match="not fitted"):
            RowPatternCorrector().transform([(H, D)])

    def test_fit_transform_shortcut(self):
        out = RowPatternCorrector().fit_transform([(H, D)] * 2, [(H, H)])
        assert out == [(H, D)]

    def test_params_protocol(self):
        corrector = RowPatternCorrector()
        assert corrector.get_params() == {}
        assert corrector.set_params() is corrector
        with pytest.raises(ValueError):
            corrector.set_params(alpha=1)
