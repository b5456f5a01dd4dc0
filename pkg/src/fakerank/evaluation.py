"""Ranking evaluation protocol: stratified folds, stratified bootstraps,
Precision/Recall/NDCG at k, cost curves, and the full comparative report.

Reported numbers aggregate 50 bootstrap samples x 5 folds = 250 ranking
executions per method; confidence intervals use the normal approximation
and statistical ties come from a 2-sided Welch t-test at alpha = 0.05.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.stats

from .features import FeatureSchema, FeatureVector
from . import scoring

__all__ = [
    "FoldPlan",
    "FoldSplit",
    "stratified_folds",
    "bootstrap_samples",
    "precision_at_k",
    "recall_at_k",
    "ndcg_at_k",
    "cost_curve",
    "effort_to_recall",
    "welch_t_test",
    "run_experiment",
    "EvaluationReport",
]

DEFAULT_KS = (5, 10, 50, 100)
METRICS = ("precision", "recall", "ndcg")
ALPHA = 0.05
Z_95 = 1.96


# --------------------------------------------------------------------------
# metrics (top-k over a binary relevance ranking)

def _relevance(ranking: Sequence[str], fake: Iterable[str]) -> np.ndarray:
    fake_set = set(fake)
    return np.array([1.0 if item in fake_set else 0.0 for item in ranking])


def _precision_core(rel: np.ndarray, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(rel[:k].sum()) / k


def _recall_core(rel: np.ndarray, n_fake: int, k: int) -> float:
    if n_fake < 1:
        raise ValueError("no positives: recall undefined")
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(rel[:k].sum()) / n_fake


def _ndcg_core(rel: np.ndarray, n_fake: int, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_fake == 0:
        warnings.warn("NDCG undefined with no fake stories; returning 0")
        return 0.0
    top = rel[:k]
    dcg = float(sum(top[i] / math.log2(i + 2) for i in range(len(top))))
    ideal = sum(1.0 / math.log2(i + 2) for i in range(min(k, n_fake)))
    return dcg / ideal


def precision_at_k(ranking: Sequence[str], fake: Iterable[str], k: int) -> float:
    """Fraction of the first k positions that are fake.

    A ranking shorter than k keeps denominator k (short lists are
    penalized, never padded).
    """
    return _precision_core(_relevance(ranking, fake), k)


def recall_at_k(ranking: Sequence[str], fake: Iterable[str], k: int) -> float:
    """Fraction of all fakes retrieved within the first k positions."""
    fake_set = set(fake)
    return _recall_core(_relevance(ranking, fake_set), len(fake_set), k)


def ndcg_at_k(ranking: Sequence[str], fake: Iterable[str], k: int) -> float:
    """Discount-weighted top-k gain, normalized by the fakes-first ideal."""
    fake_set = set(fake)
    return _ndcg_core(_relevance(ranking, fake_set), len(fake_set), k)


def cost_curve(ranking: Sequence[str],
               fake: Iterable[str]) -> list[tuple[float, float]]:
    """Step curve: fraction of the ranking inspected vs fakes recovered."""
    rel = _relevance(ranking, fake)
    n_fake = int(rel.sum())
    if n_fake < 1:
        raise ValueError("no positives: cost curve undefined")
    n = len(rel)
    recovered = np.cumsum(rel) / n_fake
    curve = [(0.0, 0.0)]
    curve.extend(((i + 1) / n, float(recovered[i])) for i in range(n))
    return curve


def effort_to_recall(curve: Sequence[tuple[float, float]],
                     target: float) -> float:
    """Smallest inspected fraction reaching at least `target` recall."""
    if target > 1.0:
        raise ValueError("target recall cannot exceed 1.0")
    for inspected, recovered in curve:
        if recovered >= target:
            return inspected
    return 1.0


def welch_t_test(a, b) -> float:
    """2-sided Welch (unequal variance) t-test p-value."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("need at least 2 observations per sample")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    se2 = va / na + vb / nb
    if se2 == 0.0:
        return 1.0 if a.mean() == b.mean() else 0.0
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return float(min(1.0, 2.0 * scipy.stats.t.sf(abs(t), df)))


# --------------------------------------------------------------------------
# protocol: stratified folds and stratified bootstrap samples

@dataclass
class FoldSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


@dataclass
class FoldPlan:
    portions: list[np.ndarray]
    folds: list[FoldSplit]


def stratified_folds(labels, k: int = 5, seed: int = 0) -> FoldPlan:
    """Split into k portions preserving the class ratio, then rotate:
    fold i tests on portion i, validates on portion i+1, trains on the rest.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    portions: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        members = np.nonzero(labels == cls)[0]
        if len(members) < k:
            raise ValueError(
                f"class {cls!r} has {len(members)} members; needs >= {k}")
        rng.shuffle(members)
        for j, chunk in enumerate(np.array_split(members, k)):
            portions[j].extend(chunk.tolist())
    portion_arrays = [np.array(sorted(p)) for p in portions]

    folds = []
    for i in range(k):
        test = portion_arrays[i]
        validation = portion_arrays[(i + 1) % k]
        train = np.concatenate([portion_arrays[j] for j in range(k)
                                if j not in (i, (i + 1) % k)])
        folds.append(FoldSplit(train=np.sort(train), validation=validation,
                               test=test))
    return FoldPlan(portions=portion_arrays, folds=folds)


def bootstrap_samples(test_indices, labels, n: int = 50, size: int = 200,
                      seed: int = 0) -> list[np.ndarray]:
    """n with-replacement samples of `size`, class counts held at
    round(size * class ratio), round half up."""
    test_indices = np.asarray(test_indices)
    labels = np.asarray(labels)
    fakes = test_indices[labels[test_indices] == 1]
    unchecked = test_indices[labels[test_indices] == 0]
    if len(fakes) == 0 or len(unchecked) == 0:
        raise ValueError("test portion must contain both classes")
    ratio = len(fakes) / len(test_indices)
    n_fake = int(math.floor(size * ratio + 0.5))
    n_unchecked = size - n_fake
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n):
        pick_fake = rng.choice(fakes, size=n_fake, replace=True)
        pick_unch = rng.choice(unchecked, size=n_unchecked, replace=True)
        samples.append(np.concatenate([pick_fake, pick_unch]))
    return samples


# --------------------------------------------------------------------------
# full experiment

@dataclass
class MetricSummary:
    mean: float
    ci95: float
    bold: bool = False  # best or statistically tied with the best


@dataclass
class EvaluationReport:
    methods: list[str]
    ks: list[int]
    n_executions: int
    cells: dict[tuple[str, str, int], MetricSummary]
    curve_x: np.ndarray
    curves: dict[str, np.ndarray]  # mean recovered-fraction per prefix
    chosen_configs: list[scoring.TrainConfig] = field(default_factory=list)

    def effort(self, method: str, target: float = 0.8) -> float:
        curve = list(zip(self.curve_x.tolist(), self.curves[method].tolist()))
        return effort_to_recall([(0.0, 0.0)] + curve, target)

    def to_tsv(self) -> str:
        lines = ["metric\tk\tmethod\tmean\tci95\tbold"]
        for metric in METRICS:
            for k in self.ks:
                for method in self.methods:
                    cell = self.cells[(method, metric, k)]
                    lines.append(f"{metric}\t{k}\t{method}\t{cell.mean:.6f}"
                                 f"\t{cell.ci95:.6f}\t{int(cell.bold)}")
        return "\n".join(lines) + "\n"

    def curves_to_csv(self) -> str:
        lines = ["method,fraction_inspected,fraction_recovered"]
        for method in self.methods:
            for x, y in zip(self.curve_x, self.curves[method]):
                lines.append(f"{method},{x:.6f},{y:.6f}")
        return "\n".join(lines) + "\n"


def _rank_sample(sample: np.ndarray, keys: np.ndarray,
                 story_ids: list[str]) -> np.ndarray:
    """Order a bootstrap multiset by descending key, ties by story id."""
    ids = [story_ids[i] for i in sample]
    order = sorted(range(len(sample)),
                   key=lambda j: (-keys[sample[j]], ids[j]))
    return sample[np.array(order)]


def run_experiment(schema: FeatureSchema, vectors: Sequence[FeatureVector],
                   methods: Sequence[str], ks: Sequence[int] = DEFAULT_KS,
                   seed: int = 0,
                   grid: Sequence[scoring.TrainConfig] | None = None,
                   num_rounds: int | None = None,
                   n_bootstrap: int = 50, bootstrap_size: int = 200,
                   n_folds: int = 5) -> EvaluationReport:
    """The full protocol: stratified folds, per-fold grid search on the
    validation portion, bootstrap rankings of the test portion, metric
    means with 95% CIs and Welch-test tie flags against the best."""
    for method in methods:
        if method not in scoring.STRATEGIES:
            raise ValueError(f"unknown method {method!r}")
    labels = np.array([v.label for v in vectors])
    story_ids = [v.story_id for v in vectors]
    vec_list = list(vectors)

    plan = stratified_folds(labels, k=n_folds, seed=seed)
    values: dict[tuple[str, str, int], list[float]] = {
        (m, metric, k): [] for m in methods for metric in METRICS for k in ks}
    curve_sums = {m: np.zeros(bootstrap_size) for m in methods}
    n_curves = 0
    chosen = []

    static_keys = {}
    for method in methods:
        if method != "fakeness":
            slot = {"shares": "count_shares", "distinct_users": "count_users",
                    "distinct_groups": "count_groups"}[method]
            idx = schema.index(slot)
            static_keys[method] = np.array(
                [float(v.values[idx]) for v in vec_list])

    for fold_no, fold in enumerate(plan.folds):
        keys_by_method = dict(static_keys)
        if "fakeness" in methods:
            train = [vec_list[i] for i in fold.train]
            val = [vec_list[i] for i in fold.validation]
            config = scoring.grid_search(schema, train, val,
                                         grid or scoring.DEFAULT_GRID,
                                         num_rounds=num_rounds)
            chosen.append(config)
            if num_rounds is not None:
                config = scoring.TrainConfig(
                    config.max_depth, config.learning_rate, num_rounds,
                    config.min_leaf, config.seed)
            pipeline = scoring.fit_pipeline(schema, train, config)
            scores = np.full(len(vec_list), -1.0)
            test_vecs = [vec_list[i] for i in fold.test]
            scores[fold.test] = pipeline.score_vectors(schema, test_vecs)
            keys_by_method["fakeness"] = scores

        samples = bootstrap_samples(fold.test, labels, n=n_bootstrap,
                                    size=bootstrap_size,
                                    seed=seed * 1000 + fold_no)
        for sample in samples:
            sample_fake = int(labels[sample].sum())
            for method in methods:
                ranked = _rank_sample(sample, keys_by_method[method], story_ids)
                rel = labels[ranked].astype(np.float64)
                for k in ks:
                    values[(method, "precision", k)].append(_precision_core(rel, k))
                    values[(method, "recall", k)].append(
                        _recall_core(rel, sample_fake, k))
                    values[(method, "ndcg", k)].append(
                        _ndcg_core(rel, sample_fake, k))
                curve_sums[method] += np.cumsum(rel) / sample_fake
            n_curves += 1

    cells = {}
    for metric in METRICS:
        for k in ks:
            best_method = max(methods,
                              key=lambda m: np.mean(values[(m, metric, k)]))
            best_sample = values[(best_method, metric, k)]
            for method in methods:
                sample = values[(method, metric, k)]
                arr = np.asarray(sample)
                mean = float(arr.mean())
                ci = float(Z_95 * arr.std(ddof=1) / math.sqrt(len(arr)))
                if method == best_method:
                    bold = True
                elif len(methods) > 1:
                    bold = welch_t_test(best_sample, sample) >= ALPHA
                else:
                    bold = True
                cells[(method, metric, k)] = MetricSummary(mean, ci, bold)

    curve_x = (np.arange(bootstrap_size) + 1) / bootstrap_size
    curves = {m: curve_sums[m] / n_curves for m in methods}
    return EvaluationReport(methods=list(methods), ks=list(ks),
                            n_executions=n_curves, cells=cells,
                            curve_x=curve_x, curves=curves,
                            chosen_configs=chosen)
