"""Feature normalization and Information Gain importance ranking."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import CATEGORICAL, NUMERIC, FeatureSchema, FeatureVector

__all__ = ["Normalizer", "information_gain", "rank_features", "FeatureRank"]


@dataclass
class Normalizer:
    """Per-slot z-score parameters learned from a training split.

    Population standard deviation; zero-variance slots scale to 0.
    Categorical slots pass through untouched.
    """

    numeric_indices: list[int]
    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def fit(cls, schema: FeatureSchema,
            vectors: Sequence[FeatureVector]) -> "Normalizer":
        if len(vectors) < 2:
            raise ValueError("need at least 2 training vectors to fit")
        idx = schema.numeric_indices()
        data = np.array([[v.values[i] for i in idx] for v in vectors],
                        dtype=np.float64)
        return cls(numeric_indices=idx, means=data.mean(axis=0),
                   stds=data.std(axis=0))

    def apply(self, vectors: Sequence[FeatureVector]) -> list[FeatureVector]:
        scaled = []
        for vec in vectors:
            values = list(vec.values)
            for j, i in enumerate(self.numeric_indices):
                std = self.stds[j]
                values[i] = (values[i] - self.means[j]) / std if std > 0 else 0.0
            scaled.append(FeatureVector(vec.story_id, values, vec.label))
        return scaled


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _equal_frequency_bins(values: np.ndarray, bins: int) -> np.ndarray:
    """Assign bin ids by rank quantiles; ties never straddle a bin.

    Boundaries are order statistics of the data, so any strictly
    monotone transform of the values yields the same assignment.
    """
    n = len(values)
    order = np.sort(values)
    cut_positions = [(n * j) // bins for j in range(1, bins)]
    boundaries = np.unique(order[cut_positions]) if cut_positions else np.array([])
    # side="left": a boundary order statistic stays with its lower bin
    return np.searchsorted(boundaries, values, side="left")


def information_gain(values, labels, bins: int = 10) -> float:
    """IG in bits: H(Y) - H(Y|X), numeric slots quantile-binned.

    Categorical inputs (non-numeric sequences) use their categories as
    bins directly.
    """
    labels = np.asarray(labels)
    if len(values) != len(labels):
        raise ValueError("values and labels must have the same length")
    if len(labels) < 2:
        raise ValueError("need at least 2 examples")

    arr = np.asarray(values)
    if arr.dtype.kind in "fiub":
        cells = _equal_frequency_bins(arr.astype(np.float64), bins)
    else:
        _, cells = np.unique(np.asarray([str(v) for v in values]), return_inverse=True)

    y_classes, y = np.unique(labels, return_inverse=True)
    h_y = _entropy(np.bincount(y))

    h_y_given_x = 0.0
    n = len(labels)
    for cell in np.unique(cells):
        mask = cells == cell
        weight = mask.sum() / n
        h_y_given_x += weight * _entropy(np.bincount(y[mask],
                                                     minlength=len(y_classes)))
    return max(0.0, h_y - h_y_given_x)


@dataclass(frozen=True)
class FeatureRank:
    name: str
    set_name: str
    ig: float
    percent: float  # IG x 100, comparable to published importance tables


def rank_features(schema: FeatureSchema, vectors: Sequence[FeatureVector],
                  bins: int = 10) -> list[FeatureRank]:
    """Features ordered by descending IG; ties keep manifest order."""
    labels = [v.label for v in vectors]
    ranks = []
    for i, slot in enumerate(schema):
        column = [v.values[i] for v in vectors]
        if slot.kind == CATEGORICAL:
            ig = information_gain([str(c) for c in column], labels, bins)
        else:
            ig = information_gain(np.array(column, dtype=np.float64), labels, bins)
        ranks.append((i, FeatureRank(slot.name, slot.set_name, ig, ig * 100.0)))
    ranks.sort(key=lambda pair: (-pair[1].ig, pair[0]))
    return [rank for _, rank in ranks]
