"""News-outlet catalogs: URL classification, pruning, user categories."""
from __future__ import annotations

import csv
import enum
import logging
import re
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping
from urllib.parse import urlsplit

import numpy as np

from .errors import InputError

log = logging.getLogger(__name__)


class MediaCategory(str, enum.Enum):
    FAKE_NEWS = "FakeNews"
    EXTREME_BIAS_RIGHT = "ExtremeBiasRight"
    RIGHT = "Right"
    RIGHT_LEANING = "RightLeaning"
    CENTER = "Center"
    LEFT_LEANING = "LeftLeaning"
    LEFT = "Left"
    EXTREME_BIAS_LEFT = "ExtremeBiasLeft"

    @classmethod
    def parse(cls, token: str) -> "MediaCategory":
        try:
            return cls(token.strip())
        except ValueError:
            raise InputError(f"unknown media category {token!r}") from None

    @property
    def index(self) -> int:
        return _ORDER[self]


CATEGORIES: tuple[MediaCategory, ...] = tuple(MediaCategory)
_ORDER = {c: i for i, c in enumerate(CATEGORIES)}

_POSITIONS = {
    MediaCategory.FAKE_NEWS: Fraction(4, 3),
    MediaCategory.EXTREME_BIAS_RIGHT: Fraction(1),
    MediaCategory.RIGHT: Fraction(2, 3),
    MediaCategory.RIGHT_LEANING: Fraction(1, 3),
    MediaCategory.CENTER: Fraction(0),
    MediaCategory.LEFT_LEANING: Fraction(-1, 3),
    MediaCategory.LEFT: Fraction(-2, 3),
    MediaCategory.EXTREME_BIAS_LEFT: Fraction(-1),
}


def category_position(c: MediaCategory) -> Fraction:
    """Leaning weight of a category on the left(-)/right(+) axis."""
    return _POSITIONS[MediaCategory(c)]


class UnclassifiableURL(InputError):
    pass


_HOST_RE = re.compile(r"^[a-z0-9](?:[a-z0-9-]*[a-z0-9])?(?:\.[a-z0-9](?:[a-z0-9-]*[a-z0-9])?)+$")
# plain "scheme://host/..." with no userinfo, port or IPv6 literal
_SIMPLE_URL = re.compile(r"[A-Za-z][A-Za-z0-9+.-]*://([A-Za-z0-9.-]+)(?:[/?#]|$)")
_SPACE = re.compile(r"\s")


def extract_domain(url: str) -> str:
    """Lower-cased hostname with a single leading ``www.`` label removed.

    >>> extract_domain("https://www.cnn.com/2020/story")
    'cnn.com'
    """
    s = url.strip()
    if not s or _SPACE.search(s):
        raise UnclassifiableURL(f"no host in {url!r}")
    m = _SIMPLE_URL.match(s)
    if m:
        host = m.group(1).lower()
        if not _HOST_RE.match(host):
            raise UnclassifiableURL(f"no host in {url!r}")
        return host[4:] if host.startswith("www.") else host
    if "://" not in s and not s.startswith("//"):
        s = "//" + s
    try:
        host = urlsplit(s).hostname
    except ValueError:
        host = None
    if not host or not _HOST_RE.match(host):
        raise UnclassifiableURL(f"no host in {url!r}")
    if host.startswith("www."):
        host = host[4:]
    return host


@dataclass(frozen=True)
class Outlet:
    category: MediaCategory
    tweet_count: int | None = None


@dataclass(frozen=True)
class OutletCatalog:
    entries: Mapping[str, Outlet]
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, host: str) -> bool:
        return host in self.entries

    def get(self, host: str) -> MediaCategory | None:
        o = self.entries.get(host)
        return None if o is None else o.category

    def hosts(self, category: MediaCategory) -> list[str]:
        """Hostnames of one category, most tweeted first."""
        items = [(h, o) for h, o in self.entries.items() if o.category == category]
        items.sort(key=lambda ho: (-(ho[1].tweet_count or 0), ho[0]))
        return [h for h, _ in items]


def _normalise_host(h: str) -> str:
    h = h.strip().lower()
    if "://" in h:
        h = extract_domain(h)
    if h.startswith("www."):
        h = h[4:]
    return h


def load_catalog(path: str | Path, label: str | None = None) -> OutletCatalog:
    """Read a delimited catalog with columns hostname, category, tweet_count."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read catalog {path}: {exc}") from exc
    delim = "\t" if "\t" in text.splitlines()[0] else ","
    reader = csv.DictReader(text.splitlines(), delimiter=delim)
    missing = {"hostname", "category"} - set(reader.fieldnames or ())
    if missing:
        raise InputError(f"catalog {path} lacks column(s) {sorted(missing)}")
    entries: dict[str, Outlet] = {}
    for lineno, row in enumerate(reader, start=2):
        host = _normalise_host(row["hostname"] or "")
        if not host:
            raise InputError(f"{path}:{lineno}: empty hostname")
        cat = MediaCategory.parse(row["category"] or "")
        raw = (row.get("tweet_count") or "").strip()
        count = None
        if raw:
            try:
                count = int(raw)
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad tweet_count {raw!r}") from None
            if count < 0:
                raise InputError(f"{path}:{lineno}: negative tweet_count")
        prev = entries.get(host)
        if prev is not None and prev.category != cat:
            raise InputError(f"{path}:{lineno}: {host} listed under {prev.category.value} and {cat.value}")
        entries[host] = Outlet(cat, count)
    return OutletCatalog(entries, label if label is not None else path.stem)


def builtin_catalog(year: str) -> OutletCatalog:
    """Outlet lists (with tweet counts) bundled for 2016 and 2020."""
    ref = resources.files("echoscope") / "data" / f"catalog_{year}.tsv"
    with resources.as_file(ref) as p:
        return load_catalog(p, label=str(year))


def write_catalog(catalog: OutletCatalog, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["hostname", "category", "tweet_count"])
        for cat in CATEGORIES:
            for h in catalog.hosts(cat):
                c = catalog.entries[h].tweet_count
                w.writerow([h, cat.value, "" if c is None else c])


def classify_url(url: str, catalog: OutletCatalog,
                 diagnostics: list[str] | None = None) -> MediaCategory | None:
    try:
        host = extract_domain(url)
    except UnclassifiableURL as exc:
        if diagnostics is not None:
            diagnostics.append(str(exc))
        return None
    return catalog.get(host)


class URLClassifier:
    """Memoising URL -> category lookup for bulk passes over a corpus."""

    def __init__(self, catalog: OutletCatalog):
        self.catalog = catalog
        self._cache: dict[str, MediaCategory | None] = {}
        self.n_unparseable = 0

    def __call__(self, url: str) -> MediaCategory | None:
        try:
            return self._cache[url]
        except KeyError:
            pass
        try:
            cat = self.catalog.get(extract_domain(url))
        except UnclassifiableURL:
            self.n_unparseable += 1
            cat = None
        self._cache[url] = cat
        return cat

    def categories(self, urls: Iterable[str]) -> set[MediaCategory]:
        out = set()
        for u in urls:
            c = self(u)
            if c is not None:
                out.add(c)
        return out


def prune_insignificant(catalog: OutletCatalog, threshold: float = 0.01) -> OutletCatalog:
    """Drop outlets below ``threshold`` of the summed counts of strictly more
    popular outlets of the same category. The top outlet always survives."""
    bycat: dict[MediaCategory, list[tuple[str, int]]] = defaultdict(list)
    for h, o in catalog.entries.items():
        if o.tweet_count is None:
            raise InputError(f"prune needs tweet counts; {h} has none")
        bycat[o.category].append((h, o.tweet_count))
    kept: dict[str, Outlet] = {}
    dropped = []
    for cat, items in bycat.items():
        items.sort(key=lambda hc: (-hc[1], hc[0]))
        counts = np.array([c for _, c in items], dtype=np.int64)
        for h, c in items:
            more_popular = int(counts[counts > c].sum())
            if more_popular == 0 or c >= threshold * more_popular:
                kept[h] = catalog.entries[h]
            else:
                dropped.append(h)
    if dropped:
        log.info("pruned %d insignificant outlet(s) from catalog %s", len(dropped), catalog.label)
    ordered = {h: kept[h] for h in catalog.entries if h in kept}
    return OutletCatalog(ordered, catalog.label, {**catalog.meta, "pruned": sorted(dropped)})


def _user_rng(seed: int, user_id: str | None) -> np.random.Generator:
    if user_id is None:
        return np.random.default_rng(seed)
    return np.random.default_rng([seed, zlib.crc32(user_id.encode("utf-8"))])


def assign_user_modal_category(user_links: Mapping[MediaCategory, int], rng_seed: int,
                               user_id: str | None = None) -> MediaCategory | None:
    """Category with the most links; ties drawn uniformly with a seeded generator.

    Passing ``user_id`` mixes it into the seed so bulk assignment does not
    depend on iteration order.
    """
    best = max((int(v) for v in user_links.values()), default=0)
    if best <= 0:
        return None
    tied = sorted((MediaCategory(c) for c, v in user_links.items() if int(v) == best), key=_ORDER.get)
    if len(tied) == 1:
        return tied[0]
    return tied[int(_user_rng(rng_seed, user_id).integers(len(tied)))]


def user_category_counts(records: Iterable, classifier: URLClassifier,
                         kinds: frozenset[str] = frozenset({"original", "retweet", "quote"})
                         ) -> dict[str, Counter]:
    """Per-user count of classified links (each URL counts once)."""
    out: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        if r.kind not in kinds or not r.urls:
            continue
        for u in r.urls:
            c = classifier(u)
            if c is not None:
                out[r.user_id][c] += 1
    return dict(out)


def assign_modal_categories(counts: Mapping[str, Mapping[MediaCategory, int]], rng_seed: int
                            ) -> dict[str, MediaCategory]:
    out = {}
    for user, links in counts.items():
        c = assign_user_modal_category(links, rng_seed, user_id=user)
        if c is not None:
            out[user] = c
    return out


def category_flow(assign_1: Mapping[str, MediaCategory], assign_2: Mapping[str, MediaCategory]) -> np.ndarray:
    """8x8 counts of users moving from category a (period 1) to b (period 2)."""
    flow = np.zeros((len(CATEGORIES), len(CATEGORIES)), dtype=np.int64)
    for user, a in assign_1.items():
        b = assign_2.get(user)
        if b is not None:
            flow[_ORDER[MediaCategory(a)], _ORDER[MediaCategory(b)]] += 1
    return flow


@dataclass
class CategoryVolume:
    category: MediaCategory
    n_tweets: int
    n_users: int
    frac_tweets: float
    frac_users: float
    tweets_per_user: float
    frac_tweets_unofficial: float
    frac_users_unofficial: float
    tweets_per_user_unofficial: float


def category_volumes(records: Iterable, classifier: URLClassifier, modal: Mapping[str, MediaCategory],
                     is_official) -> list[CategoryVolume]:
    """Tweet and user volume per category, split by client class.

    A tweet counts once for each category its URLs fall in; a user counts in
    their modal category only.
    """
    n_t = Counter()
    n_t_uno = Counter()
    uno_users: dict[MediaCategory, set] = defaultdict(set)
    for r in records:
        if r.kind == "reply" or not r.urls:
            continue
        cats = classifier.categories(r.urls)
        official = is_official(r.client)
        for c in cats:
            n_t[c] += 1
            if not official:
                n_t_uno[c] += 1
                uno_users[c].add(r.user_id)
    n_u = Counter(modal.values())
    tot_t = sum(n_t.values()) or 1
    tot_u = sum(n_u.values()) or 1
    out = []
    for c in CATEGORIES:
        users_c = {u for u, m in modal.items() if m == c}
        uno_c = uno_users[c] & users_c
        out.append(CategoryVolume(
            category=c,
            n_tweets=n_t[c],
            n_users=n_u[c],
            frac_tweets=n_t[c] / tot_t,
            frac_users=n_u[c] / tot_u,
            tweets_per_user=n_t[c] / n_u[c] if n_u[c] else float("nan"),
            frac_tweets_unofficial=n_t_uno[c] / n_t[c] if n_t[c] else float("nan"),
            frac_users_unofficial=len(uno_c) / n_u[c] if n_u[c] else float("nan"),
            tweets_per_user_unofficial=(n_t_uno[c] / len(uno_users[c])) if uno_users[c] else float("nan"),
        ))
    return out
