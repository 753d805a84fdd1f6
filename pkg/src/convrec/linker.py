"""Two-phase linking of the conversational catalog to the interaction catalog.

Phase 1 joins on normalized IMDb ids. Phase 2 resolves the remainder through
an offline alias table (a file snapshot standing in for live id-history
lookups) by exact normalized title + release year. Phase-1 matches are never
overridden, the final mapping is injective in both directions, and all
collisions/ambiguities are reported rather than guessed at.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Catalog, DatasetStats, InteractionSequence, ItemRecord, stats_from_sequences
from .errors import DataError
from .matcher import normalize_title, split_trailing_year

# raw ids may have lost leading zeros (stored as integers upstream); the
# normalized form is 7-8 digits
_IMDB_RE = re.compile(r"^(tt)?(\d{1,8})$")
_ISO_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def normalize_imdb_id(raw: str) -> str:
    """Lowercase, strip the tt prefix, zero-pad to 7 digits."""
    text = raw.strip().lower()
    match = _IMDB_RE.match(text)
    if not match:
        raise DataError(f"invalid imdb id {raw!r}")
    return match.group(2).zfill(7)


@dataclass
class LinkTable:
    """(native_id, normalized imdb_id) rows for one dataset side."""

    rows: list[tuple[str, str]]

    def __post_init__(self):
        self.rows = [(native, normalize_imdb_id(imdb)) for native, imdb in self.rows]
        seen = set()
        for native, _ in self.rows:
            if native in seen:
                raise DataError(f"duplicate native id {native!r} in link table")
            seen.add(native)

    @classmethod
    def load(cls, path: str | Path) -> "LinkTable":
        path = Path(path)
        if not path.exists():
            raise DataError(f"link table not found: {path}")
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"native_id", "imdb_id"}.issubset(reader.fieldnames):
                raise DataError(f"{path}: link table header must be native_id,imdb_id")
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append((row["native_id"].strip(), normalize_imdb_id(row["imdb_id"])))
                except DataError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
        return cls(rows)

    def by_imdb(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for native, imdb in self.rows:
            out.setdefault(imdb, []).append(native)
        return out


@dataclass(frozen=True)
class AliasRow:
    old_imdb_id: str
    current_imdb_id: str
    title: str
    release_date: str  # ISO-8601

    @property
    def year(self) -> int:
        return int(self.release_date[:4])


@dataclass
class AliasTable:
    """Offline snapshot of id history: old id -> current id + title + date."""

    rows: list[AliasRow]

    def __post_init__(self):
        self.rows = [
            AliasRow(
                normalize_imdb_id(row.old_imdb_id),
                normalize_imdb_id(row.current_imdb_id),
                row.title,
                row.release_date,
            )
            for row in self.rows
        ]
        seen = set()
        for row in self.rows:
            if row.old_imdb_id in seen:
                raise DataError(f"duplicate old_imdb_id {row.old_imdb_id!r} in alias table")
            seen.add(row.old_imdb_id)
            if not _ISO_DATE_RE.match(row.release_date):
                raise DataError(
                    f"alias {row.old_imdb_id!r}: release_date {row.release_date!r} not ISO-8601"
                )

    @classmethod
    def load(cls, path: str | Path) -> "AliasTable":
        path = Path(path)
        if not path.exists():
            raise DataError(f"alias table not found: {path}")
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"old_imdb_id", "current_imdb_id", "title", "release_date"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise DataError(f"{path}: alias table header must contain {sorted(required)}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append(
                        AliasRow(
                            old_imdb_id=normalize_imdb_id(row["old_imdb_id"]),
                            current_imdb_id=normalize_imdb_id(row["current_imdb_id"]),
                            title=row["title"].strip(),
                            release_date=row["release_date"].strip(),
                        )
                    )
                except DataError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
        return cls(rows)


@dataclass
class LinkReport:
    n_phase1_matches: int = 0
    n_phase2_matches: int = 0
    n_unresolved: int = 0
    merged_stats: DatasetStats | None = None
    unresolved_sample: list[str] = field(default_factory=list)
    collisions: list[str] = field(default_factory=list)
    ambiguities: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_phase1_matches": self.n_phase1_matches,
            "n_phase2_matches": self.n_phase2_matches,
            "n_unresolved": self.n_unresolved,
            "merged_stats": self.merged_stats.to_dict() if self.merged_stats else None,
            "unresolved_sample": self.unresolved_sample,
            "collisions": self.collisions,
            "ambiguities": self.ambiguities,
        }


def link_phase1(
    conv_links: LinkTable, cf_links: LinkTable
) -> tuple[dict[str, str], list[str], list[str]]:
    """Exact join on normalized IMDb ids.

    Returns (mapping conv_id -> cf_id, unresolved conv ids, collision notes).
    Ids sharing an IMDb id on either side are collisions: all parties stay
    unresolved and go to phase 2.
    """
    cf_by_imdb = cf_links.by_imdb()
    conv_by_imdb = conv_links.by_imdb()

    mapping: dict[str, str] = {}
    unresolved: list[str] = []
    collisions: list[str] = []

    for conv_id, imdb in conv_links.rows:
        conv_side = conv_by_imdb[imdb]
        cf_side = cf_by_imdb.get(imdb, [])
        if len(conv_side) > 1:
            collisions.append(f"conv ids {sorted(conv_side)} share imdb id {imdb}")
            unresolved.append(conv_id)
        elif len(cf_side) > 1:
            collisions.append(f"cf ids {sorted(cf_side)} share imdb id {imdb}")
            unresolved.append(conv_id)
        elif len(cf_side) == 1:
            mapping[conv_id] = cf_side[0]
        else:
            unresolved.append(conv_id)

    # report each collision once
    seen: set[str] = set()
    collisions = [c for c in collisions if not (c in seen or seen.add(c))]
    return mapping, unresolved, collisions


def link_phase2(
    unresolved_items: list[ItemRecord],
    aliases: AliasTable,
    cf_links: LinkTable,
    taken_cf_ids: set[str] | None = None,
) -> tuple[dict[str, str], list[str]]:
    """Title+year resolution through the alias table.

    An item matches iff exactly one alias row agrees on normalized title and
    release year AND that row's current id joins exactly one cf item not
    already claimed (phase-1 precedence). Ambiguity of any kind leaves the
    item unresolved and reported.
    """
    taken_cf_ids = set(taken_cf_ids or ())
    cf_by_imdb = cf_links.by_imdb()

    alias_index: dict[tuple[str, int], list[AliasRow]] = {}
    for row in aliases.rows:
        bare, embedded_year = split_trailing_year(row.title)
        year = embedded_year if embedded_year is not None else row.year
        alias_index.setdefault((normalize_title(bare), year), []).append(row)

    ambiguities: list[str] = []
    candidates: dict[str, str] = {}
    for item in unresolved_items:
        bare, embedded_year = split_trailing_year(item.title)
        year = item.year if item.year is not None else embedded_year
        if year is None:
            continue  # year is required for a phase-2 match
        rows = alias_index.get((normalize_title(bare), year), [])
        if len(rows) > 1:
            ambiguities.append(
                f"conv id {item.item_id}: {len(rows)} alias rows match "
                f"({bare!r}, {year})"
            )
            continue
        if not rows:
            continue
        cf_side = cf_by_imdb.get(rows[0].current_imdb_id, [])
        if len(cf_side) != 1:
            if len(cf_side) > 1:
                ambiguities.append(
                    f"conv id {item.item_id}: alias target {rows[0].current_imdb_id} "
                    f"joins {len(cf_side)} cf items"
                )
            continue
        if cf_side[0] in taken_cf_ids:
            ambiguities.append(
                f"conv id {item.item_id}: cf item {cf_side[0]} already claimed in phase 1"
            )
            continue
        candidates[item.item_id] = cf_side[0]

    # enforce injectivity among phase-2 candidates themselves
    claims: dict[str, list[str]] = {}
    for conv_id, cf_id in candidates.items():
        claims.setdefault(cf_id, []).append(conv_id)
    mapping: dict[str, str] = {}
    for cf_id, claimants in claims.items():
        if len(claimants) == 1:
            mapping[claimants[0]] = cf_id
        else:
            ambiguities.append(f"conv ids {sorted(claimants)} both resolve to cf item {cf_id}")
    return mapping, ambiguities


def link_catalogs(
    conv_catalog: Catalog,
    conv_links: LinkTable,
    cf_links: LinkTable,
    aliases: AliasTable,
) -> tuple[dict[str, str], LinkReport]:
    """Run both phases over every conversational catalog item.

    Items without an IMDb link row skip phase 1. The report's three counts
    partition the conversational catalog exactly.
    """
    known = {native for native, _ in conv_links.rows}
    for native in known:
        if native not in conv_catalog:
            raise DataError(f"link table references unknown conv item {native!r}")

    phase1, unresolved_ids, collisions = link_phase1(conv_links, cf_links)
    pending = set(unresolved_ids) | {i.item_id for i in conv_catalog.items if i.item_id not in known}
    pending_items = [i for i in conv_catalog.items if i.item_id in pending]

    phase2, ambiguities = link_phase2(
        pending_items, aliases, cf_links, taken_cf_ids=set(phase1.values())
    )

    mapping = dict(phase1)
    mapping.update(phase2)
    still_unresolved = [i.item_id for i in conv_catalog.items if i.item_id not in mapping]

    report = LinkReport(
        n_phase1_matches=len(phase1),
        n_phase2_matches=len(phase2),
        n_unresolved=len(still_unresolved),
        unresolved_sample=still_unresolved[:10],
        collisions=collisions,
        ambiguities=ambiguities,
    )
    return mapping, report


def build_linked_dataset(
    conv_catalog: Catalog,
    cf_catalog: Catalog,
    cf_interactions: list[InteractionSequence],
    mapping: dict[str, str],
    report: LinkReport | None = None,
    drop_unlinked: bool = False,
) -> tuple[Catalog, list[InteractionSequence], LinkReport]:
    """Merge catalogs and re-key cf interactions onto merged ids.

    Linked items keep the conversational item_id and gain the cf native id
    under source_ids. Unlinked cf items are retained by default (they can
    still be ranked); --drop-unlinked removes them.
    """
    for conv_id, cf_id in mapping.items():
        if conv_id not in conv_catalog:
            raise DataError(f"mapping references unknown conv item {conv_id!r}")
        if cf_id not in cf_catalog:
            raise DataError(f"mapping references unknown cf item {cf_id!r}")

    cf_to_merged = {cf_id: conv_id for conv_id, cf_id in mapping.items()}
    merged_items: list[ItemRecord] = []
    for item in conv_catalog.items:
        cf_id = mapping.get(item.item_id)
        source_ids = dict(item.source_ids)
        source_ids.setdefault("conv", item.item_id)
        if cf_id is not None:
            source_ids["cf"] = cf_id
            cf_item = cf_catalog.by_id[cf_id]
            year = item.year if item.year is not None else cf_item.year
            imdb = item.imdb_id if item.imdb_id is not None else cf_item.imdb_id
        else:
            year, imdb = item.year, item.imdb_id
        merged_items.append(
            ItemRecord(item.item_id, item.title, year=year, imdb_id=imdb, source_ids=source_ids)
        )

    if not drop_unlinked:
        for item in cf_catalog.items:
            if item.item_id in cf_to_merged:
                continue
            source_ids = dict(item.source_ids)
            source_ids.setdefault("cf", item.item_id)
            merged_items.append(
                ItemRecord(
                    f"cf:{item.item_id}",
                    item.title,
                    year=item.year,
                    imdb_id=item.imdb_id,
                    source_ids=source_ids,
                )
            )

    merged = Catalog(merged_items)

    def rekey(cf_id: str) -> str | None:
        if cf_id in cf_to_merged:
            return cf_to_merged[cf_id]
        merged_id = f"cf:{cf_id}"
        return merged_id if merged_id in merged.by_id else None

    merged_sequences: list[InteractionSequence] = []
    for seq in cf_interactions:
        items: list[str] = []
        stamps: list[int] = []
        for item, ts in zip(seq.items, seq.timestamps):
            new_id = rekey(item)
            if new_id is None:
                continue
            if items and items[-1] == new_id:
                continue
            items.append(new_id)
            stamps.append(ts)
        if items:
            merged_sequences.append(InteractionSequence(seq.user_id, tuple(items), tuple(stamps)))

    report = report or LinkReport()
    report.merged_stats = stats_from_sequences(merged_sequences, merged)
    return merged, merged_sequences, report
