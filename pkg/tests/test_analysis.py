import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fakerank.analysis import (Normalizer, information_gain, rank_features)
from fakerank.features import FeatureVector


def vectors_from_matrix(schema, matrix, labels):
    numeric = schema.numeric_indices()
    cats = schema.categorical_indices()
    vectors = []
    for row, label in zip(matrix, labels):
        values = [0.0] * len(schema)
        for j, i in enumerate(numeric):
            values[i] = float(row[j])
        for i in cats:
            values[i] = "x"
        vectors.append(FeatureVector(f"{len(vectors):016x}", values, int(label)))
    return vectors


def test_zscore_hand_case(schema):
    numeric = schema.numeric_indices()
    rows = [[float(v)] * len(numeric) for v in (1, 2, 3)]
    vectors = vectors_from_matrix(schema, rows, [0, 1, 0])
    norm = Normalizer.fit(schema, vectors)
    scaled = norm.apply(vectors)
    col = [v.values[numeric[0]] for v in scaled]
    expected = [-1.2247, 0.0, 1.2247]  # population std
    assert col == pytest.approx(expected, abs=1e-4)


def test_zscore_constant_slot_maps_to_zero(schema):
    numeric = schema.numeric_indices()
    rows = [[5.0] * len(numeric)] * 3
    vectors = vectors_from_matrix(schema, rows, [0, 1, 0])
    scaled = Normalizer.fit(schema, vectors).apply(vectors)
    assert all(v.values[numeric[0]] == 0.0 for v in scaled)


def test_zscore_training_mean_zero_var_one(schema):
    rng = np.random.default_rng(0)
    numeric = schema.numeric_indices()
    rows = rng.normal(size=(20, len(numeric))) * 3 + 1
    vectors = vectors_from_matrix(schema, rows, [0, 1] * 10)
    scaled = Normalizer.fit(schema, vectors).apply(vectors)
    data = np.array([[v.values[i] for i in numeric] for v in scaled])
    assert np.abs(data.mean(axis=0)).max() < 1e-9
    assert np.abs(data.var(axis=0) - 1.0).max() < 1e-9


def test_zscore_requires_two_vectors(schema):
    numeric = schema.numeric_indices()
    vectors = vectors_from_matrix(schema, [[0.0] * len(numeric)], [0])
    with pytest.raises(ValueError):
        Normalizer.fit(schema, vectors)


def test_ig_perfect_binary_predictor():
    values = [0, 1] * 20
    labels = [0, 1] * 20
    assert information_gain(values, labels) == pytest.approx(1.0, abs=1e-9)


def test_ig_constant_feature_is_zero():
    assert information_gain([7.0] * 40, [0, 1] * 20) == 0.0


def test_ig_hand_contingency():
    # X=a: 3 zeros 1 one; X=b: 1 zero 3 ones
    values = ["a"] * 4 + ["b"] * 4
    labels = [0, 0, 0, 1, 0, 1, 1, 1]
    ig = information_gain(values, labels)
    assert ig == pytest.approx(0.1887, abs=1e-4)
    # H(Y) = 1, H(Y|X) = 0.8113
    assert ig == pytest.approx(1.0 - 0.8113, abs=1e-4)


def test_ig_mismatched_lengths():
    with pytest.raises(ValueError):
        information_gain([1, 2, 3], [0, 1])


def test_ig_monotone_transform_invariance():
    rng = np.random.default_rng(4)
    values = rng.normal(size=300)
    labels = (values + rng.normal(scale=0.8, size=300) > 0).astype(int)
    base = information_gain(values, labels)
    assert information_gain(np.exp(values), labels) == pytest.approx(base, abs=1e-12)
    assert information_gain(values * 1000 - 7, labels) == pytest.approx(base, abs=1e-12)


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.integers(0, 1)),
                min_size=2, max_size=120))
@settings(max_examples=150, deadline=None)
def test_ig_bounds(pairs):
    values = np.array([p[0] for p in pairs])
    labels = np.array([p[1] for p in pairs])
    ig = information_gain(values, labels)
    counts = np.bincount(labels, minlength=2)
    p = counts[counts > 0] / counts.sum()
    h_y = float(-(p * np.log2(p)).sum())
    assert -1e-12 <= ig <= h_y + 1e-12


def test_rank_features_planted_strongest(schema):
    """count_web_dissemination_urls planted as a perfect predictor over
    noise everywhere else ranks first."""
    rng = np.random.default_rng(9)
    numeric = schema.numeric_indices()
    n = 200
    labels = np.array([1] * 20 + [0] * 180)
    rows = rng.normal(size=(n, len(numeric)))
    target = schema.index("count_web_dissemination_urls")
    target_col = numeric.index(target)
    rows[:, target_col] = labels * 8 + rng.poisson(0.4, size=n)
    vectors = vectors_from_matrix(schema, rows, labels)
    ranking = rank_features(schema, vectors)
    assert ranking[0].name == "count_web_dissemination_urls"
    assert ranking[0].percent == pytest.approx(ranking[0].ig * 100)


def test_rank_features_all_constant_keeps_manifest_order(schema):
    numeric = schema.numeric_indices()
    rows = [[1.0] * len(numeric)] * 10
    vectors = vectors_from_matrix(schema, rows, [0, 1] * 5)
    ranking = rank_features(schema, vectors)
    assert all(r.ig == 0.0 for r in ranking)
    assert [r.name for r in ranking] == schema.names  # stable tie-break


def test_rank_features_descending(schema):
    rng = np.random.default_rng(2)
    numeric = schema.numeric_indices()
    labels = np.array([0, 1] * 50)
    rows = rng.normal(size=(100, len(numeric)))
    rows[:, 3] += labels * 2.0
    rows[:, 7] += labels * 0.5
    vectors = vectors_from_matrix(schema, rows, labels)
    ranking = rank_features(schema, vectors)
    igs = [r.ig for r in ranking]
    assert igs == sorted(igs, reverse=True)
