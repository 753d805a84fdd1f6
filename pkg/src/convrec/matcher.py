"""Post-LLM item retrieval: exact title matching against the catalog.

Free-text recommendations are resolved to catalog items by normalized-title
equality (plus year when the LLM supplied one), then intersected with the
candidate set. Strict-exact only: no edit-distance fallback, ambiguous
titles are dropped and surfaced in diagnostics rather than resolved by
popularity.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .corpus import Catalog
    from .llm_gateway import ParsedRecommendation

_ARTICLE_RE = re.compile(r",\s*(the|a|an)$")
_PUNCT_RE = re.compile(r"[^\w\s]", re.UNICODE)
_WS_RE = re.compile(r"\s+")
_TRAILING_YEAR_RE = re.compile(r"\s*\((\d{4})\)\s*$")


def normalize_title(raw: str) -> str:
    """Canonical form for exact title matching; idempotent.

    NFKC -> casefold -> relocate a trailing ", The/A/An" article to the
    front -> strip punctuation -> collapse whitespace. Handles MovieLens
    style "Matrix, The" -> "the matrix".
    """
    text = unicodedata.normalize("NFKC", raw).casefold().strip()
    match = _ARTICLE_RE.search(text)
    if match:
        text = f"{match.group(1)} {text[: match.start()]}"
    text = _PUNCT_RE.sub(" ", text)
    return _WS_RE.sub(" ", text).strip()


def split_trailing_year(title: str) -> tuple[str, int | None]:
    """Split 'Heat (1995)' into ('Heat', 1995); no-op when no year suffix."""
    match = _TRAILING_YEAR_RE.search(title)
    if match:
        return title[: match.start()].strip(), int(match.group(1))
    return title.strip(), None


@dataclass
class MatchResult:
    """Outcome of matching parsed recommendations against the candidate set.

    `matched` is the ordered I_LLM payload: (item_id, 1-based LLM position),
    unique ids, order following the LLM output.
    """

    matched: list[tuple[str, int]] = field(default_factory=list)
    unmatched: list["ParsedRecommendation"] = field(default_factory=list)
    ambiguous: list[tuple[str, list[str]]] = field(default_factory=list)

    @property
    def item_ids(self) -> list[str]:
        return [item_id for item_id, _ in self.matched]

    def diagnostics(self) -> dict:
        return {
            "n_matched": len(self.matched),
            "n_unmatched": len(self.unmatched),
            "n_ambiguous": len(self.ambiguous),
            "unmatched_sample": [r.title for r in self.unmatched[:5]],
            "ambiguous_sample": [t for t, _ in self.ambiguous[:5]],
        }


class TitleIndex:
    """Catalog lookup by normalized title and by (normalized title, year)."""

    def __init__(self, catalog: "Catalog"):
        self.by_title: dict[str, list[str]] = {}
        self.by_title_year: dict[tuple[str, int], list[str]] = {}
        for item in catalog.items:
            bare, embedded_year = split_trailing_year(item.title)
            key = normalize_title(bare)
            year = item.year if item.year is not None else embedded_year
            self.by_title.setdefault(key, []).append(item.item_id)
            if year is not None:
                self.by_title_year.setdefault((key, year), []).append(item.item_id)

    def lookup(self, title: str, year: int | None) -> list[str]:
        key = normalize_title(title)
        if year is not None:
            return self.by_title_year.get((key, year), [])
        return self.by_title.get(key, [])


def match_items(
    parsed: Iterable["ParsedRecommendation"],
    catalog: "Catalog",
    candidate_set: set[str] | None = None,
    index: TitleIndex | None = None,
) -> MatchResult:
    """Resolve parsed recommendations to catalog items and intersect with V.

    A rec carrying a year matches iff (title, year) hits exactly one item; a
    rec without a year matches iff the bare title hits exactly one item.
    Multiple hits are ambiguous and excluded. Duplicates (same normalized
    title+year, or resolving to an already-matched item) keep the earliest
    position only. A rec whose unique catalog hit falls outside the
    candidate set counts as unmatched, keeping I_LLM inside V.
    """
    if index is None:
        index = TitleIndex(catalog)
    if candidate_set is None:
        candidate_set = set(catalog.by_id)

    result = MatchResult()
    seen_keys: set[tuple[str, int | None]] = set()
    matched_ids: set[str] = set()

    for rec in parsed:
        title, year = rec.title, rec.year
        if year is None:
            # tolerate a "Title (1995)" the parser left unsplit
            title, year = split_trailing_year(title)
        key = (normalize_title(title), year)
        if key in seen_keys:
            continue
        seen_keys.add(key)

        hits = index.lookup(title, year)
        if len(hits) == 0:
            result.unmatched.append(rec)
        elif len(hits) > 1:
            result.ambiguous.append((rec.title, sorted(hits)))
        else:
            item_id = hits[0]
            if item_id in matched_ids:
                seen_keys.discard(key)  # alias of an earlier rec, pure duplicate
                continue
            if item_id not in candidate_set:
                result.unmatched.append(rec)
            else:
                matched_ids.add(item_id)
                result.matched.append((item_id, rec.position))
    return result
