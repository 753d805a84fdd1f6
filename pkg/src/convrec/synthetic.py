"""Deterministic planted-cluster corpus for tests and benchmarks.

Items form well-separated clusters; users interact mostly within one
cluster, so trained embeddings should recover the cluster geometry. Each
conversation targets one cluster: the seeker names items from it, the final
recommender turn holds a same-cluster ground-truth item, and the canned LLM
response suggests two same-cluster items (never the ground truth itself)
plus two from other clusters. Collaborative neighbors of the correct
suggestions therefore contain the ground truth, while the raw suggestion
list does not.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import (
    RECOMMENDER,
    SEEKER,
    Catalog,
    Conversation,
    ConversationTurn,
    InteractionSequence,
    ItemRecord,
)
from .llm_gateway import PromptTemplate, build_prompt, prompt_hash

_THEMES = ("Galaxy", "Shadow", "Harbor", "Ember", "Meridian", "Frost", "Cinder", "Aurora")
_SUFFIXES = (
    "Rising", "Protocol", "Chronicles", "Boulevard", "Vendetta", "Reverie",
    "Gambit", "Horizon", "Paradox", "Requiem", "Odyssey", "Affair",
    "Crossing", "Eclipse", "Testament", "Labyrinth",
)


@dataclass
class SyntheticCorpus:
    catalog: Catalog
    sequences: list[InteractionSequence]
    conversations: list[Conversation]
    cassette_entries: list[dict]
    cluster_of: dict[str, int]
    clusters: list[list[str]] = field(default_factory=list)


def make_corpus(
    n_clusters: int = 5,
    items_per_cluster: int = 12,
    n_users: int = 200,
    n_conversations: int = 60,
    seq_len_range: tuple[int, int] = (8, 16),
    in_cluster_prob: float = 0.9,
    seed: int = 7,
    template: PromptTemplate | None = None,
    model_name: str = "synthetic-cassette",
) -> SyntheticCorpus:
    if n_clusters > len(_THEMES) or items_per_cluster > len(_SUFFIXES):
        raise ValueError("not enough theme/suffix words for the requested size")
    rng = random.Random(seed)
    template = template or PromptTemplate()

    items: list[ItemRecord] = []
    clusters: list[list[str]] = []
    cluster_of: dict[str, int] = {}
    for c in range(n_clusters):
        member_ids = []
        for j in range(items_per_cluster):
            item_id = f"m{c:02d}{j:02d}"
            title = f"{_THEMES[c]} {_SUFFIXES[j]}"
            year = 1980 + (c * items_per_cluster + j) % 40
            items.append(
                ItemRecord(item_id, title, year=year, imdb_id=f"{1000000 + c * 100 + j:07d}")
            )
            member_ids.append(item_id)
            cluster_of[item_id] = c
        clusters.append(member_ids)
    catalog = Catalog(items)

    sequences: list[InteractionSequence] = []
    for u in range(n_users):
        home = u % n_clusters
        length = rng.randint(*seq_len_range)
        seq_items: list[str] = []
        while len(seq_items) < length:
            if rng.random() < in_cluster_prob:
                candidate = rng.choice(clusters[home])
            else:
                candidate = rng.choice(clusters[rng.randrange(n_clusters)])
            if seq_items and seq_items[-1] == candidate:
                continue
            seq_items.append(candidate)
        base = 1_500_000_000 + u * 10_000
        stamps = tuple(base + i * 60 for i in range(length))
        sequences.append(InteractionSequence(f"u{u:04d}", tuple(seq_items), stamps))

    conversations: list[Conversation] = []
    cassette_entries: list[dict] = []
    for c_idx in range(n_conversations):
        home = c_idx % n_clusters
        members = clusters[home]
        picks = rng.sample(members, 4)  # 2 seeker mentions, 1 truth, 1 spare suggestion
        seeker_items = picks[:2]
        truth = picks[2]
        correct_candidates = [picks[3], rng.choice([m for m in members if m not in picks])]
        off_cluster_pool = [m for c in range(n_clusters) if c != home for m in clusters[c]]
        wrong_candidates = rng.sample(off_cluster_pool, 2)

        titles = {i: catalog.by_id[i] for i in seeker_items}
        text = (
            f"I recently watched {titles[seeker_items[0]].title} and "
            f"{titles[seeker_items[1]].title} and loved both. What should I watch next?"
        )
        turns = [
            ConversationTurn(SEEKER, f"cu{c_idx:04d}", text, tuple(seeker_items)),
            ConversationTurn(RECOMMENDER, "system", "Here are a few ideas you might enjoy.", ()),
            ConversationTurn(SEEKER, f"cu{c_idx:04d}", "Something along those lines, yes.", ()),
            ConversationTurn(RECOMMENDER, "system", "", (truth,)),
        ]
        conv = Conversation(f"conv{c_idx:04d}", turns)
        conversations.append(conv)

        ordered = [correct_candidates[0], wrong_candidates[0], correct_candidates[1], wrong_candidates[1]]
        lines = []
        for pos, item_id in enumerate(ordered, start=1):
            rec = catalog.by_id[item_id]
            lines.append(f"{pos}. {rec.title} ({rec.year})")
        response = "\n".join(lines)
        prompt = build_prompt(conv.turns[:3], template)
        cassette_entries.append(
            {"hash": prompt_hash(prompt), "model": model_name, "response": response}
        )

    return SyntheticCorpus(catalog, sequences, conversations, cassette_entries, cluster_of, clusters)


def write_corpus(corpus: SyntheticCorpus, outdir: str | Path) -> dict[str, Path]:
    """Materialize the corpus in the on-disk formats the loaders and CLI read."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "catalog": outdir / "catalog.csv",
        "interactions": outdir / "interactions.csv",
        "conversations": outdir / "conversations.jsonl",
        "cassette": outdir / "cassette.jsonl",
    }

    with open(paths["catalog"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_id", "title", "year", "imdb_id"])
        for item in corpus.catalog.items:
            writer.writerow([item.item_id, item.title, item.year, item.imdb_id or ""])

    with open(paths["interactions"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "item_id", "rating", "timestamp"])
        for seq in corpus.sequences:
            for item, ts in zip(seq.items, seq.timestamps):
                writer.writerow([seq.user_id, item, "4.0", ts])

    with open(paths["conversations"], "w", encoding="utf-8") as fh:
        for conv in corpus.conversations:
            obj = {
                "conversation_id": conv.conversation_id,
                "turns": [
                    {
                        "speaker": t.speaker,
                        "user_id": t.user_id,
                        "text": t.text,
                        "mentions": list(t.mentioned_items),
                    }
                    for t in conv.turns
                ],
            }
            fh.write(json.dumps(obj) + "\n")

    with open(paths["cassette"], "w", encoding="utf-8") as fh:
        for entry in corpus.cassette_entries:
            fh.write(json.dumps(entry) + "\n")

    return paths
