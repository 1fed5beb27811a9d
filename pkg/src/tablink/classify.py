"""Cell label classification.

The built-in baseline is a multinomial naive Bayes over character
n-grams with add-alpha smoothing.  It is intentionally simple: a
deterministic, dependency-free reference model that external adapters
can be measured against.

Likelihoods use a reserved unknown slot: with vocabulary V,
P(f | label) = (count + alpha) / (total + alpha * (|V| + 1)), and a
feature never seen in training falls into the extra slot.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .labels import CANONICAL_ORDER, CellLabel


class EmptyCorpus(ValueError):
    """Raised when training is attempted on an empty corpus."""


class MissingClass(ValueError):
    """Raised when the training corpus has fewer than two labels."""


class NotFitted(RuntimeError):
    """Raised when predicting with an unfitted model."""


@dataclass(frozen=True)
class Prediction:
    cell_id: str
    label: CellLabel
    scores: dict[str, float]


def uniform_scores() -> dict[str, float]:
    """Flat score map over all four labels (the fallback posterior)."""
    return {label.value: 1.0 / len(CANONICAL_ORDER) for label in CANONICAL_ORDER}


class NaiveBayesCellClassifier:
    """Character n-gram naive Bayes with an sklearn-style surface."""

    def __init__(
        self, ngram_orders: tuple[int, ...] = (1, 2, 3), alpha: float = 1.0
    ) -> None:
        self.ngram_orders = ngram_orders
        self.alpha = alpha

    # -- estimator protocol -------------------------------------------------

    def get_params(self, deep: bool = True) -> dict:
        return {"ngram_orders": self.ngram_orders, "alpha": self.alpha}

    def set_params(self, **params) -> "NaiveBayesCellClassifier":
        valid = self.get_params()
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"unknown parameter: {key}")
            setattr(self, key, value)
        return self

    def fit(
        self, X: Sequence[str], y: Sequence[CellLabel]
    ) -> "NaiveBayesCellClassifier":
        if len(X) != len(y):
            raise ValueError(f"length mismatch: {len(X)} texts, {len(y)} labels")
        if not X:
            raise EmptyCorpus("training corpus is empty")
        orders = tuple(sorted(set(int(n) for n in self.ngram_orders)))
        if not orders or orders[0] < 1:
            raise ValueError(f"invalid ngram orders: {self.ngram_orders!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

        labels = set(y)
        if len(labels) < 2:
            raise MissingClass(
                f"need at least two distinct labels, got {sorted(l.value for l in labels)}"
            )
        self.classes_ = tuple(l for l in CANONICAL_ORDER if l in labels)
        self.class_counts_ = {label: 0 for label in self.classes_}
        self.feature_counts_ = {label: {} for label in self.classes_}
        self.feature_totals_ = {label: 0 for label in self.classes_}
        vocabulary: set[str] = set()
        for text, label in zip(X, y):
            self.class_counts_[label] += 1
            counts = self.feature_counts_[label]
            for feat in self._features(text, orders):
                counts[feat] = counts.get(feat, 0) + 1
                self.feature_totals_[label] += 1
                vocabulary.add(feat)
        self.vocabulary_size_ = len(vocabulary)
        self.n_examples_ = len(X)
        self._orders = orders
        return self

    # -- prediction ----------------------------------------------------------

    def predict_one(self, text: str) -> tuple[CellLabel, dict[str, float]]:
        """Best label and softmax-normalized posterior scores."""
        self._check_fitted()
        feats = list(self._features(text, self._orders))
        log_scores: dict[CellLabel, float] = {}
        for label in self.classes_:
            denom = self.feature_totals_[label] + self.alpha * (
                self.vocabulary_size_ + 1
            )
            counts = self.feature_counts_[label]
            score = math.log(self.class_counts_[label] / self.n_examples_)
            for feat in feats:
                score += math.log((counts.get(feat, 0) + self.alpha) / denom)
            log_scores[label] = score
        best = self.classes_[0]
        for label in self.classes_[1:]:
            if log_scores[label] > log_scores[best]:
                best = label
        top = log_scores[best]
        exps = {label: math.exp(s - top) for label, s in log_scores.items()}
        total = sum(exps.values())
        scores = {label.value: exps[label] / total for label in self.classes_}
        return best, scores

    def predict(self, X: Iterable[str]) -> list[CellLabel]:
        return [self.predict_one(text)[0] for text in X]

    def predict_proba(self, X: Iterable[str]) -> list[dict[str, float]]:
        return [self.predict_one(text)[1] for text in X]

    # -- persistence ---------------------------------------------------------

    def to_payload(self) -> dict:
        """JSON-serializable form of the fitted model."""
        self._check_fitted()
        return {
            "format": "tablink-nb",
            "ngram_orders": list(self._orders),
            "alpha": self.alpha,
            "n_examples": self.n_examples_,
            "vocabulary_size": self.vocabulary_size_,
            "classes": [label.value for label in self.classes_],
            "class_counts": {
                label.value: self.class_counts_[label] for label in self.classes_
            },
            "feature_totals": {
                label.value: self.feature_totals_[label] for label in self.classes_
            },
            "feature_counts": {
                label.value: self.feature_counts_[label] for label in self.classes_
            },
        }

    def save(self, path) -> None:
        from .corpus import atomic_write_text

        payload = self.to_payload()
        atomic_write_text(path, json.dumps(payload, ensure_ascii=False) + "\n")

    @classmethod
    def from_payload(cls, payload: dict) -> "NaiveBayesCellClassifier":
        if payload.get("format") != "tablink-nb":
            raise ValueError("not a classifier model payload")
        model = cls(
            ngram_orders=tuple(payload["ngram_orders"]),
            alpha=float(payload["alpha"]),
        )
        classes = tuple(CellLabel.from_str(v) for v in payload["classes"])
        model.classes_ = classes
        model.class_counts_ = {
            label: payload["class_counts"][label.value] for label in classes
        }
        model.feature_totals_ = {
            label: payload["feature_totals"][label.value] for label in classes
        }
        model.feature_counts_ = {
            label: dict(payload["feature_counts"][label.value])
            for label in classes
        }
        model.vocabulary_size_ = int(payload["vocabulary_size"])
        model.n_examples_ = int(payload["n_examples"])
        model._orders = tuple(payload["ngram_orders"])
        return model

    @classmethod
    def load(cls, path) -> "NaiveBayesCellClassifier":
        with open(path, encoding="utf-8") as handle:
            return cls.from_payload(json.load(handle))

    # -- internals -----------------------------------------------------------

    @staticmethod
    def _features(text: str, orders: tuple[int, ...]) -> Iterable[str]:
        for n in orders:
            for i in range(len(text) - n + 1):
                yield text[i:i + n]

    def _check_fitted(self) -> None:
        if not hasattr(self, "classes_"):
            raise NotFitted("classifier is not fitted; call fit() first")


def train_baseline(
    examples: Sequence[tuple],
    ngram_orders: tuple[int, ...] = (1, 2, 3),
    alpha: float = 1.0,
) -> NaiveBayesCellClassifier:
    """Fit the baseline on (text_or_example, label) pairs."""
    texts = [getattr(item, "text", item) for item, _ in examples]
    labels = [label for _, label in examples]
    return NaiveBayesCellClassifier(ngram_orders, alpha).fit(texts, labels)


def classify_batch(source, examples: Sequence) -> list[Prediction]:
    """Classify serialized examples with a model or an adapter client.

    Anything exposing ``classify(examples)`` is treated as an adapter;
    otherwise ``source`` must be a fitted baseline model.
    """
    if hasattr(source, "classify"):
        return list(source.classify(examples))
    predictions = []
    for example in examples:
        label, scores = source.predict_one(example.text)
        predictions.append(Prediction(example.cell_id, label, scores))
    return predictions
