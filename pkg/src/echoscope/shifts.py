"""Comparisons between two periods: influencer rank shifts and type shares."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Diagnostic
from .errors import InputError, MissingArtifactError
from .influence import CIRanking
from .media_catalog import MediaCategory

log = logging.getLogger(__name__)

TYPES = ("media", "political", "independent", "other")


@dataclass(frozen=True)
class RankShift:
    user_id: str
    rank_1: int | None
    rank_2: int | None
    category_1: MediaCategory | None
    category_2: MediaCategory | None

    @property
    def delta(self) -> int | None:
        """Positive when the user climbed (smaller rank number in period 2)."""
        if self.rank_1 is None or self.rank_2 is None:
            return None
        return self.rank_1 - self.rank_2


def _best_ranks(rankings: Mapping[MediaCategory, CIRanking], top_n: int) -> dict[str, tuple[int, MediaCategory]]:
    best: dict[str, tuple[int, MediaCategory]] = {}
    for cat in sorted(rankings, key=lambda c: MediaCategory(c).index):
        for rank, u in enumerate(rankings[cat].order[:top_n], start=1):
            if u not in best or rank < best[u][0]:
                best[u] = (rank, MediaCategory(cat))
    return best


def rank_shifts(rankings_1: Mapping[MediaCategory, CIRanking], rankings_2: Mapping[MediaCategory, CIRanking],
                top_n: int = 10) -> list[RankShift]:
    """Best (lowest) top-``top_n`` rank of every user in either period.

    Rank ties across categories resolve to the category listed first in
    the canonical category order. Output is sorted by user id.
    """
    if set(rankings_1) != set(rankings_2):
        raise InputError("rankings of the two periods cover different categories")
    if top_n < 1:
        raise InputError("top_n must be >= 1")
    b1 = _best_ranks(rankings_1, top_n)
    b2 = _best_ranks(rankings_2, top_n)
    out = []
    for u in sorted(b1.keys() | b2.keys()):
        r1, c1 = b1.get(u, (None, None))
        r2, c2 = b2.get(u, (None, None))
        out.append(RankShift(u, r1, r2, c1, c2))
    return out


def new_entrant_fraction(shifts: Sequence[RankShift]) -> float:
    """Share of period-2 top users absent from period 1's top lists."""
    present = [s for s in shifts if s.rank_2 is not None]
    if not present:
        raise InputError("no period-2 users in the shifts")
    return sum(s.rank_1 is None for s in present) / len(present)


@dataclass(frozen=True)
class TypeShare:
    category: MediaCategory
    shares: dict[str, float]
    n: int


def type_shares(labels: Mapping[str, str], rankings: Mapping[MediaCategory, CIRanking], top_n: int = 25,
                diagnostics: list[Diagnostic] | None = None) -> dict[MediaCategory, TypeShare]:
    """Fraction of each influencer type among every category's top ``top_n``.

    Users without a label count as ``other``; each such user gets one
    diagnostic appended to ``diagnostics``.
    """
    out = {}
    missing: set[str] = set()
    for cat in sorted(rankings, key=lambda c: MediaCategory(c).index):
        top = rankings[cat].order[:top_n]
        counts = dict.fromkeys(TYPES, 0)
        for u in top:
            t = labels.get(u)
            if t is None:
                if u not in missing:
                    missing.add(u)
                    if diagnostics is not None:
                        diagnostics.append(Diagnostic(0, f"user {u} has no type label; counted as other"))
                    log.debug("user %s has no type label", u)
                t = "other"
            counts[t] += 1
        n = len(top)
        shares = {t: (counts[t] / n if n else 0.0) for t in TYPES}
        out[MediaCategory(cat)] = TypeShare(MediaCategory(cat), shares, n)
    if missing:
        log.warning("%d top user(s) lack a type label; counted as other", len(missing))
    return out


def load_labels(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"missing label file {path}")
    out = {}
    with path.open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            t = (row.get("type") or "").strip().lower()
            if t not in TYPES:
                raise InputError(f"{path}: unknown influencer type {t!r} for {row.get('user_id')!r}")
            out[row["user_id"]] = t
    return out


def write_shifts(shifts: Iterable[RankShift], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["user_id", "rank_1", "category_1", "rank_2", "category_2"])
        for s in shifts:
            w.writerow([s.user_id, "" if s.rank_1 is None else s.rank_1, s.category_1.value if s.category_1 else "",
                        "" if s.rank_2 is None else s.rank_2, s.category_2.value if s.category_2 else ""])


def write_type_shares(shares: Mapping[MediaCategory, TypeShare], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["category", "n", *TYPES])
        for cat, ts in shares.items():
            w.writerow([cat.value, ts.n, *(repr(ts.shares[t]) for t in TYPES)])
