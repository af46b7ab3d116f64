"""Command-line interface.

    litreview retrieve --config cfg.json --abstract-file a.txt
    litreview generate --config cfg.json --run-id run-... --paper-ids id1,id2 --strategy plan_given --plan "..."
    litreview eval run --config cfg.json --dataset examples.jsonl --out report/
    litreview dataset build --month 2308 --input raw.jsonl --out examples.jsonl
    litreview dataset stats --in examples.jsonl --out stats.json
    litreview index build --dumps a.jsonl b.jsonl --out shards/
    litreview index query --dir shards/ --text "..." --k 10
    litreview index verify --dir shards/
    litreview serve --config cfg.json --port 8000
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from datetime import date
from pathlib import Path

from . import dataset as dataset_mod
from . import embeddings
from .evaluation import ReviewJudgment, RetrievalJudgment, build_report, write_report
from .pipeline import RunConfig, RunStore, pipeline_generate, pipeline_retrieve
from .plans import CitationKey, derive_plan_from_ground_truth, parse_plan
from .records import PaperRecord, QueryAbstract


def _read_abstract(args) -> QueryAbstract:
    text = Path(args.abstract_file).read_text(encoding="utf-8").strip()
    pub = date.fromisoformat(args.date) if args.date else date.today()
    return QueryAbstract(text=text, publication_date=pub)


def cmd_retrieve(args) -> int:
    cfg = RunConfig.from_file(args.config)
    abstract = _read_abstract(args)
    ranked, pool, run_id = pipeline_retrieve(abstract, cfg)
    print(f"run_id: {run_id}")
    print(f"pool: {len(pool)} candidates"
          + (f" (underflow {pool.report.underflow})" if pool.report and pool.report.underflow else ""))
    for rank, pid in enumerate(ranked.ordering[:args.show], start=1):
        ev = ranked.evidence[pid]
        print(f"{rank:3d}. {pid}  score={ev.score:.4f}")
    return 0


def cmd_generate(args) -> int:
    cfg = RunConfig.from_file(args.config)
    store = RunStore(cfg.runs_dir)
    gateway = cfg.build_gateway()
    abstract = _read_abstract(args)
    pool_raw = store.read(args.run_id, "pool")
    records = {p["paper_id"]: PaperRecord.from_json(p) for p in pool_raw["candidates"]}
    paper_ids = args.paper_ids.split(",")
    papers = [records[pid] for pid in paper_ids]
    plan = None
    if args.plan:
        keys = {CitationKey(i) for i in range(1, len(papers) + 1)}
        plan = parse_plan(args.plan, keys)
    review = pipeline_generate(abstract, papers, args.strategy, plan,
                               gateway=gateway, store=store, run_id=args.run_id)
    print(review.text)
    return 0


def cmd_eval_run(args) -> int:
    cfg = RunConfig.from_file(args.config)
    store = RunStore(cfg.runs_dir)
    gateway = cfg.build_gateway()
    examples = dataset_mod.read_examples(args.dataset)
    judgments: dict[str, RetrievalJudgment] = {}
    reviews: dict[str, ReviewJudgment] = {}
    plans = {}
    skipped_generation = 0
    for example in examples:
        query_id = example.query.query_id
        ranked, pool, run_id = pipeline_retrieve(example.query, cfg, gateway=gateway, store=store)
        judgments[query_id] = RetrievalJudgment.of(
            ranked.ordering, {c.paper_id for c in example.gt_citations})
        if args.with_generation:
            # Benchmark protocol: generation conditions on the ground-truth
            # cited papers, keys dense in their stored order.
            references = example.gt_citations
            keys = {CitationKey(i) for i in range(1, len(references) + 1)}
            plan = None
            if cfg.generation_strategy == "plan_given":
                plan = derive_plan_from_ground_truth(example.gt_related_work, keys)
                if plan.flags:
                    skipped_generation += 1
                    continue
                plans[query_id] = plan
            review = pipeline_generate(example.query, references, cfg.generation_strategy, plan,
                                       gateway=gateway, store=store, run_id=run_id)
            reviews[query_id] = ReviewJudgment(
                review=review, gt_text=example.gt_related_work, gt_keys=frozenset(keys))
    if skipped_generation:
        print(f"generation skipped for {skipped_generation} examples (plan underivable)")
    report = build_report(judgments, reviews or None, plans or None, k_grid=cfg.k_grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, out / "report.json", out / "report.csv",
                 out / "plots" if args.plots else None)
    for name in sorted(report.aggregates):
        agg = report.aggregates[name]
        print(f"{name}: mean={agg['mean']:.4f} stddev={agg['stddev']:.4f} n={int(agg['count'])}")
    return 0


def cmd_dataset_build(args) -> int:
    result = dataset_mod.build_eval_set(args.input, args.month, pool_target=args.pool_target)
    examples = result.examples
    if args.sample is not None:
        rng = random.Random(args.seed)
        examples = sorted(rng.sample(examples, min(args.sample, len(examples))),
                          key=lambda e: e.query.source_id or "")
    dataset_mod.write_examples(examples, args.out)
    print(f"examples: {len(examples)}")
    for reason in sorted(result.drops):
        print(f"dropped[{reason}]: {result.drops[reason]}")
    return 0


def cmd_dataset_stats(args) -> int:
    examples = dataset_mod.read_examples(args.input)
    stats = dataset_mod.dataset_stats(examples)
    if args.out:
        dataset_mod.write_stats(stats, args.out)
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def cmd_index_build(args) -> int:
    shards = embeddings.build_shards(args.dumps, out_dir=args.out, max_workers=args.workers)
    for shard in shards:
        print(f"shard {shard.shard_id:04d}: {shard.count} vectors, d={shard.dimension}, "
              f"checksum {shard.checksum[:12]}")
        for warning in shard.warnings:
            print(f"  warning: {warning}")
    return 0


def _load_all_shards(directory: Path) -> list:
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    return [embeddings.load_shard(directory / f"{name}.idx")
            for name in sorted(manifest.get("shards", {}))]


def cmd_index_query(args) -> int:
    shards = _load_all_shards(Path(args.dir))
    if args.vector:
        query = json.loads(args.vector)
    else:
        dimension = shards[0].dimension if shards else 64
        query = embeddings.hashing_embedder(dimension)(args.text)
    hits = embeddings.topk_global(shards, query, args.k, per_shard=args.k)
    for hit in hits:
        print(f"{hit.paper_id}\t{hit.score:.6f}\tshard={hit.shard_id}")
    return 0


def cmd_index_verify(args) -> int:
    results = embeddings.verify_shards(args.dir)
    bad = [name for name, ok in results.items() if not ok]
    for name, ok in sorted(results.items()):
        print(f"{name}: {'ok' if ok else 'CORRUPT'}")
    return 1 if bad else 0


def cmd_serve(args) -> int:
    from .api import serve

    cfg = RunConfig.from_file(args.config)
    static = Path(args.static) if args.static else None
    serve(cfg, host=args.host, port=args.port, static_dir=static)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="litreview")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("retrieve", help="run the retrieval pipeline for one abstract")
    p.add_argument("--config", required=True)
    p.add_argument("--abstract-file", required=True)
    p.add_argument("--date", help="abstract publication date YYYY-MM-DD")
    p.add_argument("--show", type=int, default=10)
    p.set_defaults(fn=cmd_retrieve)

    p = sub.add_parser("generate", help="generate a review from a prior retrieve run")
    p.add_argument("--config", required=True)
    p.add_argument("--abstract-file", required=True)
    p.add_argument("--date")
    p.add_argument("--run-id", required=True)
    p.add_argument("--paper-ids", required=True, help="comma-separated ids from the run pool")
    p.add_argument("--strategy", default="zero_shot")
    p.add_argument("--plan", help="plan string for plan_given")
    p.set_defaults(fn=cmd_generate)

    p_eval = sub.add_parser("eval", help="evaluation commands")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)
    p = eval_sub.add_parser("run", help="run retrieval(+generation) over a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--with-generation", action="store_true")
    p.add_argument("--plots", action="store_true")
    p.set_defaults(fn=cmd_eval_run)

    p_data = sub.add_parser("dataset", help="dataset commands")
    data_sub = p_data.add_subparsers(dest="dataset_command", required=True)
    p = data_sub.add_parser("build")
    p.add_argument("--month", required=True, help="YYMM arXiv-id prefix")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pool-target", type=int, default=100)
    p.add_argument("--sample", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_dataset_build)
    p = data_sub.add_parser("stats")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_dataset_stats)

    p_index = sub.add_parser("index", help="embedding shard commands")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)
    p = index_sub.add_parser("build")
    p.add_argument("--dumps", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(fn=cmd_index_build)
    p = index_sub.add_parser("query")
    p.add_argument("--dir", required=True)
    p.add_argument("--text")
    p.add_argument("--vector", help="JSON array; overrides --text")
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(fn=cmd_index_query)
    p = index_sub.add_parser("verify")
    p.add_argument("--dir", required=True)
    p.set_defaults(fn=cmd_index_verify)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", help="directory of built frontend assets")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
