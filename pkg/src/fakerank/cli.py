"""One executable for the whole pipeline.

Stages communicate only through documented files: JSONL records and
labels, the story index, the feature matrix TSV, the binary model
container, and TSV/CSV reports. Every subcommand that draws randomness
takes --seed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, scoring, synth
from .corpus import (CorpusStore, assemble_stories, attach_labels,
                     ingest_messages, parse_verdict_lines)
from .analysis import rank_features
from .features import FeatureSchema, build_matrix, load_matrix, save_matrix
from .lexicon import LexiconConfig


def _fail(message: str) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return 2


def _lexicons(args) -> LexiconConfig:
    if getattr(args, "config", None):
        return LexiconConfig.from_toml(args.config)
    return LexiconConfig.default()


def cmd_synth(args) -> int:
    spec = synth.SyntheticSpec(
        stories=args.stories, fake_fraction=args.fake_fraction,
        content_strength=args.content_strength if args.content_strength is not None else args.strength,
        source_strength=args.source_strength if args.source_strength is not None else args.strength,
        environment_strength=args.environment_strength if args.environment_strength is not None else args.strength,
        seed=args.seed)
    n_records, n_labels = synth.write_synthetic(spec, args.out, args.labels)
    print(json.dumps({"records": n_records, "labels": n_labels,
                      "stories": spec.stories}))
    return 0


def cmd_ingest(args) -> int:
    store = CorpusStore(args.corpus)
    summary = ingest_messages(args.input, store)
    result = {"accepted": summary.accepted, "rejected": summary.rejected,
              "duplicates": summary.duplicates,
              "reasons": summary.reasons[:50]}
    if args.labels:
        attach = attach_labels(store, parse_verdict_lines(args.labels))
        result["labels_matched"] = attach.matched
        result["labels_unmatched"] = attach.unmatched
        result["label_conflicts"] = attach.conflicts
    print(json.dumps(result))
    return 0


def cmd_dedup(args) -> int:
    store = CorpusStore(args.corpus)
    assembly = assemble_stories(store, mode=args.mode, distance=args.distance)
    out = Path(args.out) if args.out else Path(args.corpus) / "stories.jsonl"
    with out.open("w", encoding="utf-8") as fh:
        for story_id, story in sorted(assembly.stories.items()):
            fh.write(json.dumps({
                "story_id": story_id,
                "share_count": story.share_count(),
                "distinct_users": story.distinct_users(),
                "distinct_groups": story.distinct_groups(),
                "verdict": story.verdict.verdict,
                "first_share_ts": story.first_share.timestamp,
            }, ensure_ascii=False) + "\n")
    print(json.dumps({"stories": len(assembly.stories),
                      "excluded": len(assembly.excluded)}))
    return 0


def cmd_extract(args) -> int:
    store = CorpusStore(args.corpus)
    assembly = assemble_stories(store)
    schema, vectors = build_matrix(assembly.stories.values(), _lexicons(args))
    save_matrix(schema, vectors, args.out)
    print(json.dumps({"vectors": len(vectors), "slots": len(schema),
                      "fake": sum(v.label for v in vectors)}))
    return 0


def cmd_analyze(args) -> int:
    schema, vectors = load_matrix(args.features)
    report = rank_features(schema, vectors)[:args.top]
    lines = ["name\tset\tig\tpercent"]
    lines += [f"{r.name}\t{r.set_name}\t{r.ig:.6f}\t{r.percent:.4f}"
              for r in report]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args) -> int:
    schema, vectors = load_matrix(args.features)
    config = scoring.TrainConfig(max_depth=args.max_depth,
                                 learning_rate=args.learning_rate,
                                 num_rounds=args.rounds,
                                 min_leaf=args.min_leaf, seed=args.seed)
    if args.grid_search:
        labels = [v.label for v in vectors]
        plan = evaluation.stratified_folds(labels, k=5, seed=args.seed)
        fold = plan.folds[0]
        train = [vectors[i] for i in fold.train] + [vectors[i] for i in fold.test]
        val = [vectors[i] for i in fold.validation]
        config = scoring.grid_search(schema, train, val,
                                     num_rounds=args.rounds)
        print(json.dumps({"grid_choice": {
            "max_depth": config.max_depth,
            "learning_rate": config.learning_rate}}))
        vectors_train = train
        val_vectors = val
    else:
        vectors_train = vectors
        val_vectors = None
    pipeline = scoring.fit_pipeline(schema, vectors_train, config,
                                    val_vectors=val_vectors)
    scoring.save_model(pipeline, args.out)
    print(json.dumps({"model": str(args.out),
                      "trees": len(pipeline.model.trees),
                      "manifest_checksum": pipeline.manifest_checksum}))
    return 0


def cmd_score(args) -> int:
    schema, vectors = load_matrix(args.features)
    pipeline = scoring.load_model(args.model)
    scores = pipeline.score_vectors(schema, vectors)
    lines = ["story_id\tfakeness_score"]
    lines += [f"{v.story_id}\t{s:.6f}" for v, s in zip(vectors, scores)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_rank(args) -> int:
    schema, vectors = load_matrix(args.features)
    if args.strategy == "fakeness":
        if not args.model:
            return _fail("fakeness strategy requires --model")
        pipeline = scoring.load_model(args.model)
        scores = pipeline.score_vectors(schema, vectors)
        keyed = [(v.story_id, float(s)) for v, s in zip(vectors, scores)]
    else:
        slot = {"shares": "count_shares", "distinct_users": "count_users",
                "distinct_groups": "count_groups"}.get(args.strategy)
        if slot is None:
            return _fail(f"unknown strategy {args.strategy!r}")
        idx = schema.index(slot)
        keyed = [(v.story_id, float(v.values[idx])) for v in vectors]
    keyed.sort(key=lambda pair: (-pair[1], pair[0]))
    lines = ["story_id\tscore"]
    lines += [f"{sid}\t{score:.6f}" for sid, score in keyed[:args.k]]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args) -> int:
    schema, vectors = load_matrix(args.features)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    grid = None
    if args.grid == "small":
        grid = [scoring.TrainConfig(max_depth=6, learning_rate=0.1),
                scoring.TrainConfig(max_depth=10, learning_rate=0.1)]
    report = evaluation.run_experiment(
        schema, vectors, methods=methods, seed=args.seed, grid=grid,
        num_rounds=args.rounds)
    Path(args.out).write_text(report.to_tsv(), encoding="utf-8")
    if args.curves:
        Path(args.curves).write_text(report.curves_to_csv(), encoding="utf-8")
    summary = {"executions": report.n_executions,
               "methods": report.methods,
               "effort_to_recall_0.8": {m: report.effort(m, 0.8)
                                        for m in report.methods}}
    print(json.dumps(summary))
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig(corpus_path=args.corpus, model_path=args.model,
                           tokens=args.token, host=args.host, port=args.port,
                           page_size=args.page_size,
                           images_dir=args.images_dir,
                           lexicon_path=args.config)
    serve(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fakerank",
        description="Triage image stories by fakeness score")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--stories", type=int, default=1000)
    p.add_argument("--fake-fraction", type=float, default=0.03)
    p.add_argument("--strength", type=float, default=1.0)
    p.add_argument("--content-strength", type=float, default=None)
    p.add_argument("--source-strength", type=float, default=None)
    p.add_argument("--environment-strength", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="ingest JSONL records into a corpus store")
    p.add_argument("--corpus", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--labels", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("dedup", help="group records into stories by hash")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("exact", "near"), default="exact")
    p.add_argument("--distance", type=int, default=4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("extract", help="build the feature matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="lexicon TOML path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("analyze", help="rank features by information gain")
    p.add_argument("--features", required=True)
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train the fakeness model")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-search", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="emit fakeness scores, matrix order")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rank", help="rank stories under a strategy")
    p.add_argument("--features", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--strategy", default="fakeness",
                   choices=scoring.STRATEGIES)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="run the comparative protocol")
    p.add_argument("--features", required=True)
    p.add_argument("--methods", default="shares,fakeness")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--curves", default=None)
    p.add_argument("--grid", choices=("paper", "small"), default="paper")
    p.add_argument("--rounds", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the monitor HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--token", action="append", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--page-size", type=int, default=50)
    p.add_argument("--images-dir", default=None)
    p.add_argument("--config", default=None, help="lexicon TOML path")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
