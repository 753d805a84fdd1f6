"""Corpora: item catalog, user interaction sequences, and conversations.

Loaders are pure and deterministic; loaded objects are treated as immutable
and safe to share across threads. Interactions derived from conversations
count only items the seeker mentions - recommender mentions are context,
not feedback.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

SEEKER = "seeker"
RECOMMENDER = "recommender"

_YEAR_MIN, _YEAR_MAX = 1870, 2100


@dataclass(frozen=True)
class ItemRecord:
    """One catalog item; `source_ids` maps origin dataset name -> native id."""

    item_id: str
    title: str
    year: int | None = None
    imdb_id: str | None = None
    source_ids: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.item_id:
            raise DataError("item_id must be non-empty")
        if not self.title:
            raise DataError(f"item {self.item_id!r}: title must be non-empty")
        if self.year is not None and not (_YEAR_MIN <= self.year <= _YEAR_MAX):
            raise DataError(
                f"item {self.item_id!r}: year {self.year} outside [{_YEAR_MIN}, {_YEAR_MAX}]"
            )


class Catalog:
    """Ordered collection of ItemRecord with unique ids and lookup indexes."""

    def __init__(self, items: list[ItemRecord]):
        self.items = list(items)
        self.by_id: dict[str, ItemRecord] = {}
        for item in self.items:
            if item.item_id in self.by_id:
                raise DataError(f"duplicate item_id {item.item_id!r}")
            self.by_id[item.item_id] = item
        # native-id -> item_id, for resolving mentions recorded in a source
        # dataset's own id space
        self.by_source_id: dict[str, str] = {}
        for item in self.items:
            for native in item.source_ids.values():
                self.by_source_id.setdefault(native, item.item_id)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.by_id

    def item_ids(self) -> list[str]:
        return [item.item_id for item in self.items]

    def resolve(self, mention: str) -> str | None:
        """Map a mention (catalog id or source-native id) to an item_id."""
        if mention in self.by_id:
            return mention
        return self.by_source_id.get(mention)


@dataclass(frozen=True)
class ConversationTurn:
    speaker: str  # SEEKER or RECOMMENDER
    user_id: str
    text: str
    mentioned_items: tuple[str, ...] = ()

    def __post_init__(self):
        if self.speaker not in (SEEKER, RECOMMENDER):
            raise DataError(f"unknown speaker {self.speaker!r}")


@dataclass
class Conversation:
    conversation_id: str
    turns: list[ConversationTurn]
    evaluable: bool = True
    n_dropped_mentions: int = 0

    def final_recommender_turn_index(self) -> int | None:
        for idx in range(len(self.turns) - 1, -1, -1):
            if self.turns[idx].speaker == RECOMMENDER:
                return idx
        return None


@dataclass(frozen=True)
class InteractionSequence:
    user_id: str
    items: tuple[str, ...]
    timestamps: tuple[int, ...]

    def __post_init__(self):
        if not self.items:
            raise DataError(f"user {self.user_id!r}: empty interaction sequence")
        if len(self.items) != len(self.timestamps):
            raise DataError(f"user {self.user_id!r}: items/timestamps length mismatch")
        if any(b < a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise DataError(f"user {self.user_id!r}: timestamps not non-decreasing")


@dataclass(frozen=True)
class DatasetStats:
    n_interactions: int
    n_users: int
    n_items: int
    density: float

    def to_dict(self) -> dict:
        return {
            "n_interactions": self.n_interactions,
            "n_users": self.n_users,
            "n_items": self.n_items,
            "density": self.density,
        }


def _parse_year(raw: str, where: str) -> int | None:
    raw = raw.strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise DataError(f"{where}: unparseable year {raw!r}") from None


def load_catalog(path: str | Path, format: str = "csv") -> Catalog:
    """Load a catalog from CSV (`item_id,title,year,imdb_id`) or JSONL.

    Duplicate item ids are fatal and the error names every offending line.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"catalog file not found: {path}")
    if format not in ("csv", "jsonl"):
        raise DataError(f"unknown catalog format {format!r}")

    items: list[ItemRecord] = []
    seen_lines: dict[str, int] = {}
    dup_lines: list[tuple[str, int, int]] = []

    if format == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"item_id", "title", "year", "imdb_id"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise DataError(
                    f"{path}: catalog header must contain {sorted(required)}, "
                    f"got {reader.fieldnames}"
                )
            for lineno, row in enumerate(reader, start=2):
                try:
                    item = ItemRecord(
                        item_id=(row["item_id"] or "").strip(),
                        title=(row["title"] or "").strip(),
                        year=_parse_year(row["year"] or "", f"{path}:{lineno}"),
                        imdb_id=(row["imdb_id"] or "").strip() or None,
                    )
                except DataError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
                if item.item_id in seen_lines:
                    dup_lines.append((item.item_id, seen_lines[item.item_id], lineno))
                else:
                    seen_lines[item.item_id] = lineno
                    items.append(item)
    else:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
                try:
                    item = ItemRecord(
                        item_id=str(obj["item_id"]),
                        title=str(obj["title"]),
                        year=int(obj["year"]) if obj.get("year") is not None else None,
                        imdb_id=obj.get("imdb_id"),
                        source_ids={str(k): str(v) for k, v in obj.get("source_ids", {}).items()},
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise DataError(f"{path}:{lineno}: bad item record ({exc})") from None
                except DataError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
                if item.item_id in seen_lines:
                    dup_lines.append((item.item_id, seen_lines[item.item_id], lineno))
                else:
                    seen_lines[item.item_id] = lineno
                    items.append(item)

    if dup_lines:
        detail = "; ".join(
            f"item_id {iid!r} on lines {first} and {second}" for iid, first, second in dup_lines
        )
        raise DataError(f"{path}: duplicate item ids: {detail}")
    return Catalog(items)


def load_interactions(
    path: str | Path,
    catalog: Catalog,
    min_seq_len: int = 1,
) -> list[InteractionSequence]:
    """Load `user_id,item_id,rating,timestamp` rows into per-user sequences.

    Events are grouped by user and sorted by timestamp (stable on ties),
    consecutive duplicate items are collapsed, events referencing unknown
    items are dropped, and users ending up shorter than `min_seq_len` are
    omitted. Use load_interactions_report for the drop counts.
    """
    sequences, _ = load_interactions_report(path, catalog, min_seq_len)
    return sequences


def load_interactions_report(
    path: str | Path,
    catalog: Catalog,
    min_seq_len: int = 1,
) -> tuple[list[InteractionSequence], dict]:
    if min_seq_len < 1:
        raise DataError(f"min_seq_len must be >= 1, got {min_seq_len}")
    path = Path(path)
    if not path.exists():
        raise DataError(f"interactions file not found: {path}")

    per_user: dict[str, list[tuple[int, str]]] = {}
    user_order: list[str] = []
    n_unknown = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"user_id", "item_id", "timestamp"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(
                f"{path}: interactions header must contain {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            user = (row["user_id"] or "").strip()
            item = (row["item_id"] or "").strip()
            ts_raw = (row["timestamp"] or "").strip()
            if not user or not item:
                raise DataError(f"{path}:{lineno}: empty user_id or item_id")
            try:
                ts = int(ts_raw)
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable timestamp {ts_raw!r}") from None
            if item not in catalog:
                n_unknown += 1
                continue
            if user not in per_user:
                per_user[user] = []
                user_order.append(user)
            per_user[user].append((ts, item))

    sequences: list[InteractionSequence] = []
    n_short_users = 0
    for user in user_order:
        events = sorted(per_user[user], key=lambda e: e[0])  # stable on ties
        items: list[str] = []
        stamps: list[int] = []
        for ts, item in events:
            if items and items[-1] == item:  # collapse consecutive repeats
                continue
            items.append(item)
            stamps.append(ts)
        if len(items) < min_seq_len:
            n_short_users += 1
            continue
        sequences.append(InteractionSequence(user, tuple(items), tuple(stamps)))

    report = {"n_unknown_dropped": n_unknown, "n_short_users_dropped": n_short_users}
    return sequences, report


def load_conversations(path: str | Path, catalog: Catalog) -> list[Conversation]:
    conversations, _ = load_conversations_report(path, catalog)
    return conversations


def load_conversations_report(
    path: str | Path, catalog: Catalog
) -> tuple[list[Conversation], dict]:
    """Load JSONL conversations, resolving mentions through the catalog.

    Unresolvable mentions are dropped and counted. Conversations whose final
    recommender turn has zero resolved mentions are retained but flagged
    non-evaluable. Malformed records are skipped and reported.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"conversations file not found: {path}")

    conversations: list[Conversation] = []
    skipped: list[tuple[int, str]] = []
    total_dropped_mentions = 0

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                conv_id = str(obj["conversation_id"])
                raw_turns = obj["turns"]
                if not isinstance(raw_turns, list) or len(raw_turns) < 2:
                    raise ValueError("conversation needs at least 2 turns")
                turns = []
                for raw in raw_turns:
                    mentions = []
                    dropped = 0
                    for native in raw.get("mentions", []):
                        resolved = catalog.resolve(str(native))
                        if resolved is None:
                            dropped += 1
                        else:
                            mentions.append(resolved)
                    total_dropped_mentions += dropped
                    turns.append(
                        (
                            ConversationTurn(
                                speaker=str(raw["speaker"]),
                                user_id=str(raw.get("user_id", "")),
                                text=str(raw.get("text", "")),
                                mentioned_items=tuple(mentions),
                            ),
                            dropped,
                        )
                    )
            except (KeyError, TypeError, ValueError, DataError) as exc:
                skipped.append((lineno, str(exc)))
                continue

            conv = Conversation(
                conversation_id=conv_id,
                turns=[t for t, _ in turns],
                n_dropped_mentions=sum(d for _, d in turns),
            )
            final_rec = conv.final_recommender_turn_index()
            if final_rec is None or not conv.turns[final_rec].mentioned_items:
                conv.evaluable = False
            if final_rec is not None and not any(
                t.speaker == SEEKER for t in conv.turns[:final_rec]
            ):
                # no seeker turn precedes the reply; nothing to condition on
                skipped.append((lineno, "no seeker turn before final recommender turn"))
                continue
            conversations.append(conv)

    report = {
        "n_loaded": len(conversations),
        "n_skipped": len(skipped),
        "skipped": skipped,
        "n_dropped_mentions": total_dropped_mentions,
    }
    return conversations, report


def derive_interactions(conversations: list[Conversation]) -> set[tuple[str, str]]:
    """(user, item) pairs where a *seeker* turn mentions the item.

    Recommender-turn mentions are excluded; repeats collapse under set
    semantics.
    """
    pairs: set[tuple[str, str]] = set()
    for conv in conversations:
        for turn in conv.turns:
            if turn.speaker != SEEKER:
                continue
            for item in turn.mentioned_items:
                pairs.add((turn.user_id, item))
    return pairs


def split_conversations(
    conversations: list[Conversation],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[list[Conversation], list[Conversation], list[Conversation]]:
    """Seeded-random partition into (train, valid, test) whole conversations.

    Sizes are floor allocations for valid/test with the remainder assigned
    to train. The paper family's alternative - temporal splitting - is not
    implemented.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {ratios}")
    if len(conversations) < 3:
        raise DataError(f"need at least 3 conversations to split, got {len(conversations)}")

    n = len(conversations)
    n_valid = math.floor(n * ratios[1])
    n_test = math.floor(n * ratios[2])
    n_train = n - n_valid - n_test

    order = list(range(n))
    random.Random(seed).shuffle(order)
    train = [conversations[i] for i in order[:n_train]]
    valid = [conversations[i] for i in order[n_train : n_train + n_valid]]
    test = [conversations[i] for i in order[n_train + n_valid :]]
    return train, valid, test


def compute_stats(
    n_interactions: int,
    n_users: int,
    n_items: int,
) -> DatasetStats:
    """Dataset statistics with density = interactions / (users * items).

    Zero users or items yields density 0 rather than an error.
    """
    if min(n_interactions, n_users, n_items) < 0:
        raise DataError("counts must be non-negative")
    denom = n_users * n_items
    density = n_interactions / denom if denom else 0.0
    return DatasetStats(n_interactions, n_users, n_items, density)


def stats_from_sequences(
    sequences: list[InteractionSequence],
    catalog: Catalog | None = None,
) -> DatasetStats:
    """Stats over loaded sequences; item universe is the catalog when given."""
    n_interactions = sum(len(s.items) for s in sequences)
    n_users = len({s.user_id for s in sequences})
    if catalog is not None:
        n_items = len(catalog)
    else:
        n_items = len({i for s in sequences for i in s.items})
    return compute_stats(n_interactions, n_users, n_items)
