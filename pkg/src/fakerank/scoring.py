"""Fakeness scoring: gradient-boosted trees, ranking strategies, model io.

The tree learner is exact greedy split search with second-order (Newton)
boosting on logistic loss: no row or column subsampling, deterministic
for a given seed. The split scan runs through a compiled kernel when the
extension built, otherwise through the numpy fallback; set
FAKERANK_KERNEL=python to force the fallback.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import ImageStory
from .features import FeatureSchema, FeatureVector
from .analysis import Normalizer

_forced = os.environ.get("FAKERANK_KERNEL", "").strip().lower()
if _forced == "python":
    from . import _split_kernel_py as _kernel
else:
    try:
        from . import _split_kernel as _kernel  # compiled extension
    except ImportError:
        from . import _split_kernel_py as _kernel

KERNEL_BACKEND = _kernel.backend_name()

LAMBDA = 1.0  # ridge term on leaf weights
PROB_EPS = 1e-12

STRATEGIES = ("fakeness", "shares", "distinct_groups", "distinct_users")

MODEL_MAGIC = b"FKRS"
MODEL_VERSION = 1


@dataclass
class TrainConfig:
    max_depth: int = 6
    learning_rate: float = 0.1
    num_rounds: int = 200
    min_leaf: int = 5
    seed: int = 0
    early_stop_patience: int = 20


# grid mirroring the published parameter sweep for the boosted trees
DEFAULT_GRID = tuple(
    TrainConfig(max_depth=d, learning_rate=lr)
    for d in (6, 10, 15) for lr in (0.001, 0.01, 0.1, 1.0)
)


@dataclass
class Tree:
    feature: np.ndarray   # int32, -1 for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray      # int32
    right: np.ndarray     # int32
    value: np.ndarray     # float64, leaf weight

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int32)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            goes_left = x[rows, feat[rows]] < self.threshold[node[rows]]
            node[rows] = np.where(goes_left, self.left[node[rows]],
                                  self.right[node[rows]])
        return self.value[node]

    def __len__(self) -> int:
        return len(self.feature)


class _TreeBuilder:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def done(self) -> Tree:
        return Tree(np.array(self.feature, np.int32),
                    np.array(self.threshold, np.float64),
                    np.array(self.left, np.int32),
                    np.array(self.right, np.int32),
                    np.array(self.value, np.float64))


def _fit_tree(xt, root_sidx, g, h, config: TrainConfig, n_rows: int,
              kernel) -> Tree:
    builder = _TreeBuilder()

    def grow(sidx, depth) -> int:
        node = builder.add()
        rows = sidx[0]
        if depth < config.max_depth and sidx.shape[1] >= 2 * config.min_leaf:
            feat, pos, gain, thresh = kernel.best_split(
                xt, sidx, g, h, config.min_leaf, LAMBDA)
            if feat >= 0:
                mask = np.zeros(n_rows, dtype=bool)
                mask[sidx[feat, :pos + 1]] = True
                left_sidx, right_sidx = kernel.partition(sidx, mask, pos + 1)
                builder.feature[node] = feat
                builder.threshold[node] = thresh
                builder.left[node] = grow(left_sidx, depth + 1)
                builder.right[node] = grow(right_sidx, depth + 1)
                return node
        gsum = float(np.sum(g[rows]))
        hsum = float(np.sum(h[rows]))
        builder.value[node] = -gsum / (hsum + LAMBDA)
        return node

    grow(root_sidx, 0)
    return builder.done()


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass
class GBDTModel:
    """Boosted regression trees behind a logistic link."""

    trees: list[Tree]
    base_score: float
    learning_rate: float
    n_features: int
    manifest_checksum: str = ""
    train_loss: list[float] = field(default_factory=list)

    def predict_margin(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        total = np.zeros(len(x))
        for tree in self.trees:
            total += tree.predict(x)
        return self.base_score + self.learning_rate * total

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        p = _sigmoid(self.predict_margin(x))
        return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def train_gbdt(x: np.ndarray, y, config: TrainConfig | None = None,
               val_x: np.ndarray | None = None, val_y=None,
               kernel=None) -> GBDTModel:
    """Fit the boosted ensemble; deterministic given the config seed.

    With a validation split, stops early after `early_stop_patience`
    rounds without validation-loss improvement and keeps the best prefix.
    """
    config = config or TrainConfig()
    kernel = kernel or _kernel
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("x must be (n, f) with matching labels")
    if len(y) < 2:
        raise ValueError("need at least 2 examples")
    if len(np.unique(y)) < 2:
        raise ValueError("degenerate labels: single class")

    n, f = x.shape
    xt = np.ascontiguousarray(x.T)
    base_order = np.ascontiguousarray(
        np.argsort(xt, axis=1, kind="stable").astype(np.int64))

    mean = float(np.clip(y.mean(), 1e-6, 1.0 - 1e-6))
    base = float(np.log(mean / (1.0 - mean)))
    margin = np.full(n, base)
    val_margin = None
    if val_x is not None:
        val_x = np.ascontiguousarray(val_x, dtype=np.float64)
        val_y = np.asarray(val_y, dtype=np.float64)
        val_margin = np.full(len(val_x), base)

    model = GBDTModel(trees=[], base_score=base,
                      learning_rate=config.learning_rate, n_features=f)
    best_val = np.inf
    best_round = 0
    for _ in range(config.num_rounds):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        tree = _fit_tree(xt, base_order, g, h, config, n, kernel)
        model.trees.append(tree)
        margin = margin + config.learning_rate * tree.predict(x)
        model.train_loss.append(log_loss(y, _sigmoid(margin)))
        if val_margin is not None:
            val_margin = val_margin + config.learning_rate * tree.predict(val_x)
            val_loss = log_loss(val_y, _sigmoid(val_margin))
            if val_loss < best_val - 1e-12:
                best_val = val_loss
                best_round = len(model.trees)
            elif len(model.trees) - best_round >= config.early_stop_patience:
                break
    if val_margin is not None and best_round:
        model.trees = model.trees[:best_round]
        model.train_loss = model.train_loss[:best_round]
    return model


# --------------------------------------------------------------------------
# categorical encoding

MAX_CATEGORIES = 32


@dataclass
class CategoricalEncoder:
    """Frequency-capped indicator encoding; the mapping ships with the model."""

    categories: dict[int, list[str]]  # slot index -> kept categories

    @classmethod
    def fit(cls, schema: FeatureSchema, vectors: Sequence[FeatureVector],
            max_categories: int = MAX_CATEGORIES) -> "CategoricalEncoder":
        mapping = {}
        for i in schema.categorical_indices():
            counts: dict[str, int] = {}
            for vec in vectors:
                value = str(vec.values[i])
                counts[value] = counts.get(value, 0) + 1
            kept = sorted(counts, key=lambda c: (-counts[c], c))[:max_categories]
            mapping[i] = kept
        return cls(categories=mapping)

    def encoded_names(self, schema: FeatureSchema) -> list[str]:
        names = [schema.slots[i].name for i in schema.numeric_indices()]
        for i in sorted(self.categories):
            slot = schema.slots[i].name
            names.extend(f"{slot}={cat}" for cat in self.categories[i])
            names.append(f"{slot}=<other>")
        return names

    def transform(self, schema: FeatureSchema,
                  vectors: Sequence[FeatureVector]) -> np.ndarray:
        numeric_idx = schema.numeric_indices()
        cat_idx = sorted(self.categories)
        width = len(numeric_idx) + sum(len(self.categories[i]) + 1
                                       for i in cat_idx)
        out = np.zeros((len(vectors), width))
        for row, vec in enumerate(vectors):
            col = 0
            for i in numeric_idx:
                out[row, col] = vec.values[i]
                col += 1
            for i in cat_idx:
                kept = self.categories[i]
                value = str(vec.values[i])
                try:
                    out[row, col + kept.index(value)] = 1.0
                except ValueError:
                    out[row, col + len(kept)] = 1.0  # unseen -> other
                col += len(kept) + 1
        return out


def encode_categoricals(schema: FeatureSchema,
                        vectors: Sequence[FeatureVector],
                        encoder: CategoricalEncoder | None = None,
                        ) -> tuple[np.ndarray, CategoricalEncoder]:
    """Numeric-only matrix; fits the encoder on `vectors` unless given."""
    encoder = encoder or CategoricalEncoder.fit(schema, vectors)
    return encoder.transform(schema, vectors), encoder


# --------------------------------------------------------------------------
# scorer interface (the boosted model is the only implemented scorer)

class FakenessScorer:
    """Contract shared by scoring backends: fit on vectors, emit fakeness."""

    def fit(self, x: np.ndarray, y) -> "FakenessScorer":
        raise NotImplementedError

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class SvmScorer(FakenessScorer):
    """Placeholder; kept so alternative learners can slot in later."""

    def fit(self, x, y):
        raise NotImplementedError("SVM scorer is not implemented; "
                                  "use the boosted-tree scorer")

    predict_proba = fit


class MlpScorer(FakenessScorer):
    """Placeholder; kept so alternative learners can slot in later."""

    def fit(self, x, y):
        raise NotImplementedError("MLP scorer is not implemented; "
                                  "use the boosted-tree scorer")

    predict_proba = fit


# --------------------------------------------------------------------------
# deployable pipeline artifact

@dataclass
class ScoringPipeline:
    """Normalizer + encoder + boosted model, bound to one feature manifest."""

    manifest_checksum: str
    normalizer: Normalizer
    encoder: CategoricalEncoder
    model: GBDTModel
    trained_at: float = 0.0

    def prepare(self, schema: FeatureSchema,
                vectors: Sequence[FeatureVector]) -> np.ndarray:
        if schema.checksum != self.manifest_checksum:
            raise ValueError("feature manifest checksum mismatch")
        return self.encoder.transform(schema, self.normalizer.apply(vectors))

    def score_vectors(self, schema: FeatureSchema,
                      vectors: Sequence[FeatureVector]) -> np.ndarray:
        return self.model.predict_proba(self.prepare(schema, vectors))


def fit_pipeline(schema: FeatureSchema, vectors: Sequence[FeatureVector],
                 config: TrainConfig | None = None,
                 val_vectors: Sequence[FeatureVector] | None = None,
                 ) -> ScoringPipeline:
    normalizer = Normalizer.fit(schema, vectors)
    scaled = normalizer.apply(vectors)
    encoder = CategoricalEncoder.fit(schema, scaled)
    x = encoder.transform(schema, scaled)
    y = np.array([v.label for v in vectors])
    val_x = val_y = None
    if val_vectors:
        val_x = encoder.transform(schema, normalizer.apply(val_vectors))
        val_y = np.array([v.label for v in val_vectors])
    model = train_gbdt(x, y, config, val_x, val_y)
    model.manifest_checksum = schema.checksum
    return ScoringPipeline(manifest_checksum=schema.checksum,
                           normalizer=normalizer, encoder=encoder,
                           model=model, trained_at=time.time())


def predict_score(pipeline: ScoringPipeline, schema: FeatureSchema,
                  vector: FeatureVector) -> float:
    """Fakeness probability for a single story vector."""
    return float(pipeline.score_vectors(schema, [vector])[0])


def grid_search(schema: FeatureSchema, train: Sequence[FeatureVector],
                validation: Sequence[FeatureVector],
                grid: Sequence[TrainConfig] = DEFAULT_GRID,
                num_rounds: int | None = None) -> TrainConfig:
    """Pick the grid point with the best NDCG@10 on the validation split.

    Ties break toward smaller depth, then smaller learning rate.
    """
    from .evaluation import ndcg_at_k

    if not grid:
        raise ValueError("empty grid")
    fake_ids = {v.story_id for v in validation if v.label == 1}
    best: tuple[float, int, float] | None = None
    best_config = None
    for config in grid:
        if num_rounds is not None:
            config = TrainConfig(config.max_depth, config.learning_rate,
                                 num_rounds, config.min_leaf, config.seed)
        pipeline = fit_pipeline(schema, train, config)
        scores = pipeline.score_vectors(schema, validation)
        order = sorted(range(len(validation)),
                       key=lambda i: (-scores[i], validation[i].story_id))
        ranking = [validation[i].story_id for i in order]
        ndcg = ndcg_at_k(ranking, fake_ids, 10)
        key = (-ndcg, config.max_depth, config.learning_rate)
        if best is None or key < best:
            best = key
            best_config = config
    return best_config


# --------------------------------------------------------------------------
# ranking strategies

@dataclass
class RankedList:
    strategy: str
    entries: list[tuple[str, float]]  # (story_id, score), non-increasing

    @property
    def story_ids(self) -> list[str]:
        return [sid for sid, _ in self.entries]


def rank_stories(stories: Sequence[ImageStory],
                 vectors: Sequence[FeatureVector] | None = None,
                 pipeline: ScoringPipeline | None = None,
                 schema: FeatureSchema | None = None,
                 strategy: str = "fakeness") -> RankedList:
    """Rank stories under one of the four strategies, ties by story_id."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "fakeness":
        if pipeline is None or vectors is None or schema is None:
            raise ValueError("fakeness strategy requires a trained model")
        scores = pipeline.score_vectors(schema, vectors)
        keyed = [(vec.story_id, float(s)) for vec, s in zip(vectors, scores)]
    else:
        keyfn = {
            "shares": ImageStory.share_count,
            "distinct_users": ImageStory.distinct_users,
            "distinct_groups": ImageStory.distinct_groups,
        }[strategy]
        keyed = [(story.story_id, float(keyfn(story))) for story in stories]
    keyed.sort(key=lambda pair: (-pair[1], pair[0]))
    return RankedList(strategy=strategy, entries=keyed)


# --------------------------------------------------------------------------
# serialization: versioned binary container plus a JSON debug dump

def _pack_tree(tree: Tree) -> bytes:
    n = len(tree)
    return (struct.pack("<I", n)
            + tree.feature.astype("<i4").tobytes()
            + tree.threshold.astype("<f8").tobytes()
            + tree.left.astype("<i4").tobytes()
            + tree.right.astype("<i4").tobytes()
            + tree.value.astype("<f8").tobytes())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise ValueError("truncated model file")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def array(self, dtype: str, count: int) -> np.ndarray:
        width = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(width * count), dtype=dtype).copy()


def save_model(pipeline: ScoringPipeline, path: str | Path) -> None:
    """Write the binary container and a sibling .json debug dump."""
    model = pipeline.model
    blob = bytearray()
    blob += MODEL_MAGIC
    blob += struct.pack("<H", MODEL_VERSION)
    checksum = pipeline.manifest_checksum.encode("ascii")
    if len(checksum) != 64:
        raise ValueError("manifest checksum must be 64 hex chars")
    blob += checksum
    blob += struct.pack("<d", pipeline.trained_at)
    blob += struct.pack("<d", model.base_score)
    blob += struct.pack("<d", model.learning_rate)
    blob += struct.pack("<I", model.n_features)
    blob += struct.pack("<I", len(model.trees))
    for tree in model.trees:
        blob += _pack_tree(tree)
    norm = pipeline.normalizer
    blob += struct.pack("<I", len(norm.numeric_indices))
    blob += np.asarray(norm.numeric_indices, "<i4").tobytes()
    blob += norm.means.astype("<f8").tobytes()
    blob += norm.stds.astype("<f8").tobytes()
    enc_json = json.dumps(
        {str(i): cats for i, cats in pipeline.encoder.categories.items()},
        ensure_ascii=False).encode("utf-8")
    blob += struct.pack("<I", len(enc_json))
    blob += enc_json
    Path(path).write_bytes(bytes(blob))
    Path(str(path) + ".json").write_text(
        json.dumps(debug_dump(pipeline), indent=2), encoding="utf-8")


def load_model(path: str | Path,
               expected_checksum: str | None = None) -> ScoringPipeline:
    data = Path(path).read_bytes()
    reader = _Reader(data)
    if reader.take(4) != MODEL_MAGIC:
        raise ValueError("not a fakerank model file")
    version = reader.u16()
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}")
    checksum = reader.take(64).decode("ascii")
    if expected_checksum is not None and checksum != expected_checksum:
        raise ValueError("feature manifest checksum mismatch")
    trained_at = reader.f64()
    base = reader.f64()
    lr = reader.f64()
    n_features = reader.u32()
    n_trees = reader.u32()
    trees = []
    for _ in range(n_trees):
        n = reader.u32()
        trees.append(Tree(reader.array("<i4", n).astype(np.int32),
                          reader.array("<f8", n),
                          reader.array("<i4", n).astype(np.int32),
                          reader.array("<i4", n).astype(np.int32),
                          reader.array("<f8", n)))
    k = reader.u32()
    indices = reader.array("<i4", k).astype(int).tolist()
    means = reader.array("<f8", k)
    stds = reader.array("<f8", k)
    enc_len = reader.u32()
    enc = json.loads(reader.take(enc_len).decode("utf-8"))
    model = GBDTModel(trees=trees, base_score=base, learning_rate=lr,
                      n_features=n_features, manifest_checksum=checksum)
    return ScoringPipeline(
        manifest_checksum=checksum,
        normalizer=Normalizer(indices, means, stds),
        encoder=CategoricalEncoder({int(i): cats for i, cats in enc.items()}),
        model=model, trained_at=trained_at)


def debug_dump(pipeline: ScoringPipeline) -> dict:
    model = pipeline.model
    return {
        "format": "fakerank-model-debug",
        "version": MODEL_VERSION,
        "manifest_checksum": pipeline.manifest_checksum,
        "trained_at": pipeline.trained_at,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "n_features": model.n_features,
        "n_trees": len(model.trees),
        "tree_sizes": [len(t) for t in model.trees],
        "categorical_slots": {str(i): len(c)
                              for i, c in pipeline.encoder.categories.items()},
    }
