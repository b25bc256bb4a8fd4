"""Command-line interface.

Subcommands cover the whole workflow: generate a synthetic corpus, build the
cheap index, build the reference system, answer queries, train the candidate
filter, and run the evaluation studies. Every subcommand accepts ``--config``
(YAML or JSON, see config.py) and the eval subcommands write machine-readable
JSON plus a plain-text table into the results directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, load_run_config
from .corpus import gen_synthetic, load_manifest, save_manifest
from .engine import Engine
from .evaluation import (
    BaselineSystem,
    build_query_stream,
    context_clip_sets,
    filtering_tradeoff,
    latency_series,
    recall_at_k,
    render_table,
    synthesize_queries,
    train_filter_knn,
)
from .extractor import fraction_extracted
from .models import build_synthetic_registry
from .planner import KnnModel, PlannerConfig
from .vectorstore import ImageDB, TextDB

TEXT_DB_FILE = "text.db"
IMAGE_DB_FILE = "image.db"
BASELINE_DB_FILE = "baseline.db"
MANIFEST_FILE = "manifest.jsonl"


def _registry_for(manifest, cfg: RunConfig):
    vocab = manifest.vocabulary()
    if not vocab.objects:
        vocab = cfg.world.vocabulary()
    return build_synthetic_registry(vocab, cfg.embedding, cfg.costs)


def _write_report(results_dir: Path, name: str, record: dict, table: str) -> None:
    results_dir.mkdir(parents=True, exist_ok=True)
    (results_dir / f"{name}.json").write_text(
        json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (results_dir / f"{name}.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    print(f"wrote {results_dir / name}.json")


def _load_engine(args, cfg: RunConfig) -> Engine:
    manifest = load_manifest(args.manifest)
    registry = _registry_for(manifest, cfg)
    store_dir = Path(args.store_dir)
    text_db = TextDB.restore(store_dir / TEXT_DB_FILE)
    image_path = store_dir / IMAGE_DB_FILE
    image_db = ImageDB.restore(image_path) if image_path.exists() else None
    knn = None
    if getattr(args, "knn", None):
        knn = KnnModel.load(args.knn)
    planner_cfg = cfg.planner
    if knn is not None:
        planner_cfg = PlannerConfig(
            top_n=planner_cfg.top_n,
            top_f=planner_cfg.top_f,
            k=planner_cfg.k,
            knn_neighbors=planner_cfg.knn_neighbors,
            knn_accept_threshold=planner_cfg.knn_accept_threshold,
            filtering_enabled=True,
            fallback_unfiltered=planner_cfg.fallback_unfiltered,
        )
    return Engine(
        manifest,
        registry,
        emb_cfg=cfg.embedding,
        planner_cfg=planner_cfg,
        engine_cfg=cfg.engine,
        knn=knn,
        text_db=text_db,
        image_db=image_db,
    )


def cmd_gen(args) -> int:
    cfg = load_run_config(args.config)
    w = cfg.world
    manifest = gen_synthetic(
        seed=args.seed if args.seed is not None else w.seed,
        n_clips=args.n_clips if args.n_clips is not None else w.n_clips,
        vocab=w.vocabulary(),
        clip_duration=w.clip_duration,
        keyframe_rate=w.keyframe_rate,
        label_rate=w.label_rate,
        max_extra_objects=w.max_extra_objects,
    )
    save_manifest(manifest, args.out)
    print(f"wrote {args.out}: {len(manifest)} clips, {manifest.total_keyframes()} keyframes")
    return 0


def cmd_preprocess(args) -> int:
    cfg = load_run_config(args.config)
    manifest = load_manifest(args.manifest)
    registry = _registry_for(manifest, cfg)
    engine = Engine(manifest, registry, emb_cfg=cfg.embedding, planner_cfg=cfg.planner)
    report = engine.preprocess()
    store_dir = Path(args.store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    engine.text_db.persist(store_dir / TEXT_DB_FILE)
    engine.image_db.persist(store_dir / IMAGE_DB_FILE)
    save_manifest(manifest, store_dir / MANIFEST_FILE)
    print(
        f"indexed {report.clips_processed} clips: {report.chunks_added} chunks, "
        f"{report.frames_embedded} frame vectors, simulated cost {report.simulated_cost:g}"
    )
    return 0


def cmd_baseline(args) -> int:
    cfg = load_run_config(args.config)
    manifest = load_manifest(args.manifest)
    registry = _registry_for(manifest, cfg)
    system = BaselineSystem(manifest, registry, cfg.embedding)
    cost = system.preprocess()
    store_dir = Path(args.store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    system.text_db.persist(store_dir / BASELINE_DB_FILE)
    print(f"baseline extracted {len(system.text_db)} chunks, simulated cost {cost:g}")
    return 0


def cmd_query(args) -> int:
    cfg = load_run_config(args.config)
    engine = _load_engine(args, cfg)
    result = engine.answer_query(args.query, k=args.k)
    print(json.dumps(result.to_record(), indent=2, sort_keys=True))
    # persist extraction side effects so later queries start warm
    store_dir = Path(args.store_dir)
    engine.text_db.persist(store_dir / TEXT_DB_FILE)
    save_manifest(engine.corpus, store_dir / MANIFEST_FILE)
    return 0


def cmd_train_knn(args) -> int:
    cfg = load_run_config(args.config)
    manifest = load_manifest(args.manifest)
    registry = _registry_for(manifest, cfg)
    llm = registry.by_role("llm")[0]
    queries = [q.text for q in synthesize_queries(manifest, llm, args.n_queries)]
    knn = train_filter_knn(
        manifest,
        registry,
        queries,
        emb_cfg=cfg.embedding,
        candidate_pool=cfg.planner.top_n,
        baseline_k=cfg.planner.k,
    )
    knn.save(args.out)
    print(f"trained filter on {len(queries)} queries, {len(knn)} points -> {args.out}")
    return 0


def cmd_eval_recall(args) -> int:
    cfg = load_run_config(args.config)
    manifest = load_manifest(args.manifest)
    registry = _registry_for(manifest, cfg)
    llm = registry.by_role("llm")[0]
    queries = [q.text for q in synthesize_queries(manifest, llm, args.n_queries)]
    engine = Engine(manifest, registry, emb_cfg=cfg.embedding)
    engine.preprocess()
    baseline = BaselineSystem(manifest, registry, cfg.embedding)
    baseline.preprocess()
    k_grid = [int(k) for k in args.k_grid.split(",")]
    rows = []
    for k in k_grid:
        baseline_sets = {q: baseline.retrieved_clips(q, k) for q in queries}
        text_only = context_clip_sets(
            manifest, registry, engine.text_db, engine.image_db, queries, k,
            use_image_db=False, emb_cfg=cfg.embedding,
        )
        dual = context_clip_sets(
            manifest, registry, engine.text_db, engine.image_db, queries, k,
            use_image_db=True, top_f=cfg.planner.top_f, emb_cfg=cfg.embedding,
        )
        rows.append(
            {
                "k": k,
                "recall_text_only": round(recall_at_k(baseline_sets, text_only), 4),
                "recall_dual": round(recall_at_k(baseline_sets, dual), 4),
            }
        )
    record = {"queries": len(queries), "rows": rows}
    table = render_table(rows, ["k", "recall_text_only", "recall_dual"])
    _write_report(Path(args.results_dir), "recall", record, table)
    return 0


def cmd_eval_filtering(args) -> int:
    cfg = load_run_config(args.config)
    manifest = load_manifest(args.manifest)
    registry = _registry_for(manifest, cfg)
    llm = registry.by_role("llm")[0]
    queries = [q.text for q in synthesize_queries(manifest, llm, args.n_queries)]
    baseline = BaselineSystem(manifest, registry, cfg.embedding)
    baseline.preprocess()
    engine = Engine(manifest, registry, emb_cfg=cfg.embedding)
    engine.preprocess()
    knn = train_filter_knn(
        manifest, registry, queries,
        emb_cfg=cfg.embedding,
        text_db=engine.text_db,
        baseline=baseline,
    )
    k_grid = [int(k) for k in args.k_grid.split(",")]
    rows = filtering_tradeoff(
        manifest, registry, queries, knn, k_grid,
        emb_cfg=cfg.embedding, text_db=engine.text_db, baseline=baseline,
    )
    record = {"queries": len(queries), "rows": [vars(r) for r in rows]}
    table = render_table(
        (
            {
                "initial_k": r.initial_k,
                "avg_chunks": round(r.avg_chunks, 2),
                "matched_k": r.matched_k,
                "recall_filtered": round(r.recall_filtered, 4),
                "recall_unfiltered": round(r.recall_unfiltered, 4),
            }
            for r in rows
        ),
        ["initial_k", "avg_chunks", "matched_k", "recall_filtered", "recall_unfiltered"],
    )
    _write_report(Path(args.results_dir), "filtering", record, table)
    return 0


def cmd_eval_fraction(args) -> int:
    cfg = load_run_config(args.config)
    manifest_path = args.manifest
    k_grid = [int(k) for k in args.k_grid.split(",")]
    rows = []
    for k in k_grid:
        manifest = load_manifest(manifest_path)
        registry = _registry_for(manifest, cfg)
        engine = Engine(
            manifest,
            registry,
            emb_cfg=cfg.embedding,
            planner_cfg=cfg.planner,
            engine_cfg=cfg.engine,
        )
        engine.preprocess()
        stream = build_query_stream(
            manifest, registry, args.n_queries, seed=args.seed,
            pool_size=args.pool_size,
        )
        for query in stream:
            engine.answer_query(query, k=k)
        heavy = [p.descriptor.model_id for p in registry.heavyweight_extractors()]
        fractions = {
            m: round(fraction_extracted(manifest, m, registry), 4) for m in heavy
        }
        rows.append({"k": k, **fractions})
    record = {"n_queries": args.n_queries, "rows": rows}
    columns = list(rows[0].keys()) if rows else ["k"]
    table = render_table(rows, columns)
    _write_report(Path(args.results_dir), "fraction", record, table)
    return 0


def cmd_eval_latency(args) -> int:
    cfg = load_run_config(args.config)
    manifest = load_manifest(args.manifest)
    registry = _registry_for(manifest, cfg)
    engine = Engine(
        manifest,
        registry,
        emb_cfg=cfg.embedding,
        planner_cfg=cfg.planner,
        engine_cfg=cfg.engine,
    )
    engine.preprocess()
    stream = build_query_stream(
        manifest, registry, args.n_queries, seed=args.seed, pool_size=args.pool_size
    )
    series = latency_series(engine, stream, k=args.k)
    half = len(series) // 2
    first = sum(series[:half]) / half if half else 0.0
    second = sum(series[half:]) / (len(series) - half) if len(series) > half else 0.0
    record = {
        "k": args.k,
        "n_queries": len(series),
        "series": series,
        "mean_first_half": first,
        "mean_second_half": second,
    }
    rows = [
        {"window": "first half", "mean_simulated_cost": round(first, 2)},
        {"window": "second half", "mean_simulated_cost": round(second, 2)},
    ]
    table = render_table(rows, ["window", "mean_simulated_cost"])
    _write_report(Path(args.results_dir), "latency", record, table)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = load_run_config(args.config)
    app = create_app(Path(args.data_dir), run_config=cfg)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lazyrag",
        description="Incremental retrieval-augmented querying over clip-indexed media",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", default=None, help="YAML or JSON run config")

    p = sub.add_parser("gen", help="generate a synthetic corpus manifest")
    add_config(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-clips", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("preprocess", help="build the cheap index for a manifest")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--store-dir", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("baseline", help="run every heavyweight model upfront")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--store-dir", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("query", help="answer one query against a preprocessed store")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--store-dir", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--knn", default=None, help="trained filter model file")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("train-knn", help="train the candidate filter")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-queries", type=int, default=100)
    p.set_defaults(func=cmd_train_knn)

    p_eval = sub.add_parser("eval", help="evaluation studies")
    eval_sub = p_eval.add_subparsers(dest="study", required=True)

    p = eval_sub.add_parser("recall", help="context agreement vs the reference system")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--results-dir", required=True)
    p.add_argument("--n-queries", type=int, default=100)
    p.add_argument("--k-grid", default="1,2,4,8,20")
    p.set_defaults(func=cmd_eval_recall)

    p = eval_sub.add_parser("filtering", help="learned-filter cost/recall trade-off")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--results-dir", required=True)
    p.add_argument("--n-queries", type=int, default=72)
    p.add_argument("--k-grid", default="10,20,30,40,50")
    p.set_defaults(func=cmd_eval_filtering)

    p = eval_sub.add_parser("fraction", help="fraction of clips extracted vs k")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--results-dir", required=True)
    p.add_argument("--n-queries", type=int, default=200)
    p.add_argument("--pool-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--k-grid", default="2,4,6,8,10,20")
    p.set_defaults(func=cmd_eval_fraction)

    p = eval_sub.add_parser("latency", help="per-query extraction cost over a stream")
    add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--results-dir", required=True)
    p.add_argument("--n-queries", type=int, default=200)
    p.add_argument("--pool-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--k", type=int, default=4)
    p.set_defaults(func=cmd_eval_latency)

    p = sub.add_parser("serve", help="run the HTTP service")
    add_config(p)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
