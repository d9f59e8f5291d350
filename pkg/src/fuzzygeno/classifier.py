"""Nearest-prototype classification over fuzzy feature vectors."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .partitions import Chromosome, FuzzyParams, extract_batch, feature_dim


@dataclass
class ClassModel:
    class_id: int
    prototype: np.ndarray
    sample_count: int


@dataclass
class ModelSet:
    chromosome: Chromosome
    fuzzy_params: FuzzyParams
    models: dict[int, ClassModel] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted(self.models))

    def prototype_matrix(self, labels: Sequence[int]) -> np.ndarray:
        return np.stack([self.models[c].prototype for c in labels])

    def features(self, images: np.ndarray) -> np.ndarray:
        return extract_batch(images, self.chromosome, self.fuzzy_params)


@dataclass
class Prediction:
    label: int
    scores: dict[int, float]


def build_models(features: np.ndarray, labels: Sequence[int], ch: Chromosome, fp: FuzzyParams) -> ModelSet:
    """Class-mean prototypes of ``features`` (shape (n, dim))."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if len(features) == 0:
        raise ValueError("no samples to build models from")
    if features.ndim != 2 or features.shape[1] != feature_dim(ch) or len(labels) != len(features):
        raise ValueError(
            f"feature dimension mismatch: got {features.shape}, chromosome gives {feature_dim(ch)}")
    models = {}
    for c in np.unique(labels):
        rows = features[labels == c]
        models[int(c)] = ClassModel(int(c), rows.mean(axis=0), len(rows))
    return ModelSet(ch, fp, models)


def similarity_matrix(x: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    """1 - mean absolute difference, for every (sample, prototype) pair."""
    x = np.atleast_2d(x)
    if x.shape[1] != prototypes.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {prototypes.shape[1]}")
    return 1.0 - np.abs(x[:, None, :] - prototypes[None, :, :]).mean(axis=2)


def similarity(x, m: ClassModel) -> float:
    return float(similarity_matrix(np.asarray(x, dtype=np.float64), m.prototype[None])[0, 0])


def _allowed_labels(ms: ModelSet, allowed: Iterable[int] | None) -> list[int]:
    labels = ms.labels if allowed is None else sorted(set(int(a) for a in allowed))
    if not labels:
        raise ValueError("empty set of allowed classes")
    missing = [c for c in labels if c not in ms.models]
    if missing:
        raise ValueError(f"allowed classes without a model: {missing}")
    return labels


def classify_batch(features: np.ndarray, ms: ModelSet, allowed: Iterable[int] | None = None):
    """Top-choice labels and score matrix for a feature batch.

    Ties go to the smallest label: labels are sorted and argmax takes the first.
    """
    labels = _allowed_labels(ms, allowed)
    scores = similarity_matrix(features, ms.prototype_matrix(labels))
    return np.asarray(labels)[np.argmax(scores, axis=1)], scores, labels


def classify(x: np.ndarray, ms: ModelSet, allowed: Iterable[int] | None = None) -> Prediction:
    pred, scores, labels = classify_batch(np.asarray(x, dtype=np.float64)[None], ms, allowed)
    return Prediction(int(pred[0]), {c: float(s) for c, s in zip(labels, scores[0])})


@dataclass
class ConfusionMatrix:
    """counts[i][j] = samples of true class labels[i] predicted as labels[j]."""

    labels: tuple[int, ...]
    counts: np.ndarray

    def __post_init__(self):
        self.labels = tuple(int(c) for c in self.labels)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise ValueError(f"counts must be {n}x{n}, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("negative count")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def index(self, label: int) -> int:
        return self.labels.index(label)

    def to_tsv(self) -> str:
        lines = ["\t" + "\t".join(map(str, self.labels))]
        for lab, row in zip(self.labels, self.counts):
            lines.append(str(lab) + "\t" + "\t".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "ConfusionMatrix":
        rows = [line.split("\t") for line in text.strip("\n").splitlines()]
        labels = [int(t) for t in rows[0][1:]]
        counts = [[int(t) for t in r[1:]] for r in rows[1:]]
        if [int(r[0]) for r in rows[1:]] != labels:
            raise ValueError("row labels differ from column labels")
        return cls(tuple(labels), np.array(counts))


def confusion(pairs: Iterable[tuple[int, int]], labels: Sequence[int]) -> ConfusionMatrix:
    labels = tuple(sorted(int(c) for c in labels))
    pos = {c: i for i, c in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for true, pred in pairs:
        if true not in pos or pred not in pos:
            raise ValueError(f"unknown label in pair ({true}, {pred})")
        counts[pos[true], pos[pred]] += 1
    return ConfusionMatrix(labels, counts)


def accuracy(cm: ConfusionMatrix) -> Fraction:
    """Trace over total, as an exact fraction (``float()`` it for display)."""
    if cm.total == 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return Fraction(int(np.trace(cm.counts)), cm.total)


def per_class_counts(cm: ConfusionMatrix) -> Mapping[int, int]:
    return {c: int(n) for c, n in zip(cm.labels, cm.counts.sum(axis=1))}
