"""BIO tag inventory over the four entity categories."""

from __future__ import annotations

from typing import Sequence

CATEGORIES = ("PER", "LOC", "ORG", "MISC")
TAGS = ("O",) + tuple(f"{p}-{c}" for c in CATEGORIES for p in ("B", "I"))
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
NUM_TAGS = len(TAGS)
OUTSIDE = 0


def split_tag(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, _, category = tag.partition("-")
    return prefix, category


def begin_id(category: str) -> int:
    return TAG_INDEX[f"B-{category}"]


def inside_id(category: str) -> int:
    return TAG_INDEX[f"I-{category}"]


def category_of(tag_id: int) -> str | None:
    return split_tag(TAGS[tag_id])[1]


def bio_violations(tag_ids: Sequence[int]) -> list[int]:
    """Positions holding an I-X not preceded by B-X or I-X."""
    bad = []
    prev_cat = None
    for pos, t in enumerate(tag_ids):
        prefix, cat = split_tag(TAGS[t])
        if prefix == "I" and prev_cat != cat:
            bad.append(pos)
        prev_cat = cat
    return bad


def repair_bio(tag_ids: Sequence[int]) -> list[int]:
    """Rewrite each stray I-X as B-X."""
    out = list(tag_ids)
    for pos in bio_violations(out):
        out[pos] = begin_id(category_of(out[pos]))
    return out
