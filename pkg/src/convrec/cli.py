"""Command-line entry point.

Subcommands: stats, link, train, recommend, eval, serve. Exit codes: 0 on
success, 1 on data errors, 2 on usage errors. Every run emits a metadata
block (seed, config hash, artifact hashes) on stderr for reproducibility;
stdout carries only the result payload.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    load_catalog,
    load_conversations,
    load_interactions,
    split_conversations,
    stats_from_sequences,
)
from .embeddings import TrainingConfig, load_embeddings, save_embeddings, train
from .errors import ConvrecError
from .evaluator import build_eval_examples, evaluate_examples
from .linker import AliasTable, LinkTable, build_linked_dataset, link_catalogs
from .llm_gateway import Cassette, Gateway, PromptTemplate, ProviderConfig
from .pipelines import (
    PIPELINES,
    bridge_pipeline,
    cf_only_pipeline,
    llm_only_pipeline,
    pop_pipeline,
    popularity_from_sequences,
)
from .ranker import Recommender


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def _emit(payload: dict, out: str | None) -> None:
    text = _dump(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _metadata(args: argparse.Namespace, extra: dict | None = None) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None}
    blob = json.dumps(config, sort_keys=True, default=str)
    meta = {
        "tool": f"convrec {__version__}",
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "config": config,
    }
    meta.update(extra or {})
    sys.stderr.write(_dump({"run_metadata": meta}))


def _provider_from_args(args: argparse.Namespace) -> ProviderConfig:
    return ProviderConfig(
        mode=args.provider,
        endpoint=getattr(args, "endpoint", None),
        model=getattr(args, "model", "gpt-3.5-turbo"),
        cassette_path=getattr(args, "cassette", None),
    )


def _template_from_args(args: argparse.Namespace) -> PromptTemplate:
    kwargs = {}
    if getattr(args, "n_candidates", None):
        kwargs["n_candidates"] = args.n_candidates
    return PromptTemplate(**kwargs)


def cmd_stats(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog) if args.catalog else None
    if catalog is None:
        # without a catalog the item universe is whatever the file mentions
        from .corpus import Catalog, ItemRecord

        seen: dict[str, None] = {}
        import csv as _csv

        with open(args.interactions, newline="", encoding="utf-8") as fh:
            for row in _csv.DictReader(fh):
                seen.setdefault(row["item_id"].strip())
        catalog_for_load = Catalog(
            [ItemRecord(i, f"item {i}") for i in seen]
        )
        sequences = load_interactions(args.interactions, catalog_for_load, args.min_seq_len)
        stats = stats_from_sequences(sequences)
    else:
        sequences = load_interactions(args.interactions, catalog, args.min_seq_len)
        stats = stats_from_sequences(sequences, catalog)
    _metadata(args)
    _emit(stats.to_dict(), args.out)
    return 0


def cmd_link(args: argparse.Namespace) -> int:
    conv_catalog = load_catalog(args.conv_catalog)
    cf_catalog = load_catalog(args.cf_catalog)
    conv_links = LinkTable.load(args.conv_links)
    cf_links = LinkTable.load(args.cf_links)
    aliases = AliasTable.load(args.aliases)
    mapping, report = link_catalogs(conv_catalog, conv_links, cf_links, aliases)

    cf_sequences = []
    if args.cf_interactions:
        cf_sequences = load_interactions(args.cf_interactions, cf_catalog, min_seq_len=1)
    merged, merged_seqs, report = build_linked_dataset(
        conv_catalog, cf_catalog, cf_sequences, mapping, report,
        drop_unlinked=args.drop_unlinked,
    )
    if args.out_catalog:
        with open(args.out_catalog, "w", encoding="utf-8") as fh:
            for item in merged.items:
                fh.write(
                    json.dumps(
                        {
                            "item_id": item.item_id,
                            "title": item.title,
                            "year": item.year,
                            "imdb_id": item.imdb_id,
                            "source_ids": item.source_ids,
                        }
                    )
                    + "\n"
                )
    _metadata(args, {"n_mapped": len(mapping)})
    _emit(report.to_dict(), args.report)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    sequences = load_interactions(args.interactions, catalog, args.min_seq_len)
    config = TrainingConfig(
        backbone=args.backbone,
        dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.lr,
        negatives_per_positive=args.negatives,
        window=args.window,
        max_seq_len=args.max_seq_len,
        seed=args.seed,
        loss_mode=args.loss_mode,
    )
    model = train(sequences, catalog.item_ids(), config)
    save_embeddings(model.embedding_matrix(), args.out)
    _metadata(args, {"final_loss": model.loss_history[-1] if model.loss_history else None})
    _emit(
        {
            "backbone": config.backbone,
            "n_items": len(catalog),
            "dim": config.dim,
            "epochs": config.epochs,
            "loss_history": model.loss_history,
            "out": str(args.out),
        },
        None,
    )
    return 0


def cmd_recommend(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    embeddings = load_embeddings(args.embeddings)
    with open(args.conversation, encoding="utf-8") as fh:
        obj = json.load(fh)
    from .corpus import ConversationTurn

    turns = [
        ConversationTurn(
            t["speaker"],
            t.get("user_id", ""),
            t.get("text", ""),
            tuple(t.get("mentions", ())),
        )
        for t in obj["turns"]
    ]
    popularity = None
    if args.popularity:
        with open(args.popularity, encoding="utf-8") as fh:
            popularity = {k: float(v) for k, v in json.load(fh).items()}
    recommender = Recommender(
        catalog,
        embeddings,
        Gateway(_provider_from_args(args)),
        _template_from_args(args),
        popularity=popularity,
    )
    ranking = recommender.recommend(turns, args.k)
    payload = ranking.to_dict()
    for entry in payload["entries"]:
        item = catalog.by_id[entry["item_id"]]
        entry["title"] = item.title
        entry["year"] = item.year
    _metadata(args)
    _emit(payload, args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    conversations = load_conversations(args.conversations, catalog)
    if args.split != "all":
        train_c, valid_c, test_c = split_conversations(conversations, seed=args.seed)
        conversations = {"train": train_c, "valid": valid_c, "test": test_c}[args.split]
    examples, n_skipped = build_eval_examples(conversations, per_turn=args.per_turn)

    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    sequences = []
    if args.interactions:
        sequences = load_interactions(args.interactions, catalog, min_seq_len=1)
    popularity = popularity_from_sequences(sequences) if sequences else {}

    ks = tuple(int(k) for k in args.k.split(","))
    template = _template_from_args(args)

    if args.pipeline == "bridge":
        recommender = Recommender(
            catalog, embeddings, Gateway(_provider_from_args(args)), template,
            popularity=popularity or None,
        )
        fn = bridge_pipeline(recommender)
        candidate_ids = recommender.candidate_ids
    elif args.pipeline == "llm-only":
        candidate_ids = embeddings.item_ids if embeddings else catalog.item_ids()
        fn = llm_only_pipeline(
            catalog, Gateway(_provider_from_args(args)), candidate_ids, popularity, template
        )
    elif args.pipeline == "cf-only":
        config = TrainingConfig(backbone=args.backbone, seed=args.seed, epochs=args.epochs,
                                dim=args.dim)
        model = train(sequences, catalog.item_ids(), config)
        candidate_ids = catalog.item_ids()
        fn = cf_only_pipeline(model, candidate_ids, popularity)
    else:
        candidate_ids = catalog.item_ids()
        fn = pop_pipeline(candidate_ids, popularity)

    cassette_hash = None
    if getattr(args, "cassette", None):
        cassette_hash = Cassette(args.cassette).file_hash()
    embeddings_hash = None
    if args.embeddings:
        embeddings_hash = hashlib.sha256(Path(args.embeddings).read_bytes()).hexdigest()
    metadata = {
        "pipeline": args.pipeline,
        "split": args.split,
        "seed": args.seed,
        "n_skipped": n_skipped,
        "template_hash": template.template_hash(),
        "cassette_hash": cassette_hash,
        "embeddings_hash": embeddings_hash,
    }
    report = evaluate_examples(examples, fn, ks, metadata)
    _metadata(args, {"n_examples": report.n_examples})
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import AppConfig, app_from_config

    config = AppConfig.load(args.config)
    if args.host:
        config.bind_host = args.host
    if args.port:
        config.bind_port = args.port
    app = app_from_config(config)
    _metadata(args)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convrec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"convrec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics from an interactions file")
    p.add_argument("--interactions", required=True)
    p.add_argument("--catalog")
    p.add_argument("--min-seq-len", type=int, default=1, dest="min_seq_len")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("link", help="two-phase linking of two catalogs")
    p.add_argument("--conv-catalog", required=True)
    p.add_argument("--cf-catalog", required=True)
    p.add_argument("--conv-links", required=True)
    p.add_argument("--cf-links", required=True)
    p.add_argument("--aliases", required=True)
    p.add_argument("--cf-interactions")
    p.add_argument("--drop-unlinked", action="store_true")
    p.add_argument("--out-catalog")
    p.add_argument("--report")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("train", help="train collaborative item embeddings")
    p.add_argument("--catalog", required=True)
    p.add_argument("--interactions", required=True)
    p.add_argument("--backbone", default="sasmini", choices=["pop", "item2vec", "fism", "sasmini"])
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--max-seq-len", type=int, default=50, dest="max_seq_len")
    p.add_argument("--min-seq-len", type=int, default=2, dest="min_seq_len")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--loss-mode", choices=["full_softmax", "sampled"], dest="loss_mode")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recommend", help="rank the catalog for one conversation")
    p.add_argument("--conversation", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--provider", default="replay", choices=["live", "record", "replay"])
    p.add_argument("--cassette")
    p.add_argument("--endpoint")
    p.add_argument("--model", default="gpt-3.5-turbo")
    p.add_argument("--n-candidates", type=int, dest="n_candidates")
    p.add_argument("--popularity")
    p.add_argument("--out")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("eval", help="offline evaluation of a pipeline variant")
    p.add_argument("--conversations", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--split", default="test", choices=["train", "valid", "test", "all"])
    p.add_argument("--pipeline", default="bridge", choices=list(PIPELINES))
    p.add_argument("--k", default="1,5,10")
    p.add_argument("--embeddings")
    p.add_argument("--interactions")
    p.add_argument("--provider", default="replay", choices=["live", "record", "replay"])
    p.add_argument("--cassette")
    p.add_argument("--endpoint")
    p.add_argument("--model", default="gpt-3.5-turbo")
    p.add_argument("--n-candidates", type=int, dest="n_candidates")
    p.add_argument("--backbone", default="sasmini", choices=["pop", "item2vec", "fism", "sasmini"])
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--per-turn", action="store_true", dest="per_turn")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP recommendation service")
    p.add_argument("--config", required=True)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvrecError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
