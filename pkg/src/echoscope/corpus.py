"""Tweet corpus: record schema, newline-delimited JSON I/O, client classes."""
from __future__ import annotations

import enum
import gc
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError

log = logging.getLogger(__name__)

FIELDS = ("tweet_id", "user_id", "timestamp", "kind", "source_user_id",
          "urls", "client", "verified", "text")
KINDS = ("original", "retweet", "quote", "reply")

DEFAULT_OFFICIAL_CLIENTS = frozenset({
    "Twitter Web Client",
    "Twitter Web App",
    "Twitter for iPhone",
    "Twitter for Android",
    "Twitter for iPad",
    "TweetDeck",
})


class ClientClass(str, enum.Enum):
    OFFICIAL = "official"
    UNOFFICIAL = "unofficial"


@dataclass(frozen=True, slots=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    timestamp: float
    kind: str
    source_user_id: str | None = None
    urls: tuple[str, ...] = ()
    client: str = ""
    verified: bool | None = None
    text: str | None = None

    def to_dict(self) -> dict:
        return {
            "tweet_id": self.tweet_id,
            "user_id": self.user_id,
            "timestamp": self.timestamp,
            "kind": self.kind,
            "source_user_id": self.source_user_id,
            "urls": list(self.urls),
            "client": self.client,
            "verified": self.verified,
            "text": self.text,
        }


@dataclass(frozen=True, slots=True)
class Diagnostic:
    line: int
    message: str
    path: str = ""

    def __str__(self) -> str:
        where = f"{self.path}:{self.line}" if self.path else f"line {self.line}"
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class Corpus:
    """Immutable, ordered collection of records plus parse diagnostics."""

    records: tuple[TweetRecord, ...]
    diagnostics: tuple[Diagnostic, ...] = ()
    n_lines: int = 0
    window: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def of_kind(self, *kinds: str) -> list[TweetRecord]:
        ks = set(kinds)
        return [r for r in self.records if r.kind in ks]


def _as_id(value, name: str) -> str:
    t = type(value)
    if t is str and value:
        return value
    if t is int:
        return str(value)
    raise ValueError(f"field {name!r} must be a non-empty string or integer")


_KIND_SET = frozenset(KINDS)
_isfinite = math.isfinite


def record_from_dict(d: dict) -> TweetRecord:
    """Validate one decoded JSON object; raises ValueError on schema violations."""
    if type(d) is not dict:
        raise ValueError("record is not a JSON object")
    get = d.get
    tid, uid, ts, kind = get("tweet_id"), get("user_id"), get("timestamp"), get("kind")
    if tid is None or uid is None or ts is None or kind is None:
        missing = next(n for n in ("tweet_id", "user_id", "timestamp", "kind") if get(n) is None)
        raise ValueError(f"missing required field {missing!r}")
    if kind not in _KIND_SET:
        raise ValueError(f"unknown kind {kind!r}")
    tt = type(ts)
    if tt is not float and tt is not int:
        raise ValueError("timestamp must be a number")
    ts = float(ts)
    if not _isfinite(ts) or ts < 0:
        raise ValueError("timestamp must be finite and non-negative")
    src = get("source_user_id")
    if kind == "original":
        if src is not None:
            raise ValueError("original tweet carries a source_user_id")
    elif src is None:
        raise ValueError(f"{kind} without source_user_id")
    else:
        src = _as_id(src, "source_user_id")
    urls = get("urls") or ()
    if type(urls) is not list and type(urls) is not tuple:
        raise ValueError("urls must be a list of strings")
    for u in urls:
        if type(u) is not str:
            raise ValueError("urls must be a list of strings")
    client = get("client") or ""
    if type(client) is not str:
        raise ValueError("client must be a string")
    verified = get("verified")
    if verified is not None and type(verified) is not bool:
        raise ValueError("verified must be boolean or null")
    text = get("text")
    if text is not None and type(text) is not str:
        raise ValueError("text must be a string or null")
    return TweetRecord(_as_id(tid, "tweet_id"), _as_id(uid, "user_id"), ts, kind, src, tuple(urls),
                       client, verified, text)


CHUNK_LINES = 20_000


def _decode_chunk(chunk: list[tuple[int, str]]):
    """Decode many lines with one C-level call; any surprise (a bad line, or
    a line holding several values) falls back to line-by-line decoding."""
    try:
        values = json.loads("[" + ",".join(s for _, s in chunk) + "]")
        if len(values) == len(chunk):
            return [(n, v, None) for (n, _), v in zip(chunk, values)]
    except ValueError:
        pass
    out = []
    for n, s in chunk:
        try:
            out.append((n, json.loads(s), None))
        except json.JSONDecodeError as exc:
            out.append((n, None, f"invalid JSON ({exc.msg})"))
    return out


def _parse_file(path: Path, t_start: float, t_end: float):
    records: list[TweetRecord] = []
    diags: list[Diagnostic] = []
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read corpus file {path}: {exc}") from exc
    # split on newlines only; JSON strings may legally hold U+2028 and friends
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    chunk: list[tuple[int, str]] = []

    def flush():
        for n, value, err in _decode_chunk(chunk):
            if err is None:
                try:
                    rec = record_from_dict(value)
                except (ValueError, TypeError) as exc:
                    err = str(exc)
            if err is not None:
                diags.append(Diagnostic(n, err, str(path)))
            elif t_start <= rec.timestamp <= t_end:
                records.append(rec)
        chunk.clear()

    for n, line in enumerate(lines, start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line.strip():
            flush()
            diags.append(Diagnostic(n, "blank line", str(path)))
            continue
        chunk.append((n, line))
        if len(chunk) >= CHUNK_LINES:
            flush()
    flush()
    return records, diags, len(lines)


def parse_corpus(paths: str | Path | Sequence[str | Path],
                 window: tuple[float, float] | None = None) -> Corpus:
    """Read newline-delimited JSON records, keeping those inside ``window``.

    Files are merged in the order given, lines in file order. Malformed
    lines never abort the parse; each one yields a :class:`Diagnostic`.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if window is None:
        t_start, t_end = 0.0, math.inf
    else:
        t_start, t_end = float(window[0]), float(window[1])
        if t_start > t_end:
            raise InputError(f"inverted time window: {t_start} > {t_end}")
    records: list[TweetRecord] = []
    diags: list[Diagnostic] = []
    total = 0
    # bulk allocation of acyclic objects; cyclic GC passes only cost time here
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for p in paths:
            r, d, n = _parse_file(Path(p), t_start, t_end)
            records.extend(r)
            diags.extend(d)
            total += n
    finally:
        if was_enabled:
            gc.enable()
    if diags:
        log.warning("%d malformed line(s) skipped; first: %s", len(diags), diags[0])
    return Corpus(tuple(records), tuple(diags), total, None if window is None else (t_start, t_end))


def dumps_record(rec: TweetRecord) -> str:
    return json.dumps(rec.to_dict(), ensure_ascii=False, separators=(",", ":"))


def write_corpus(records: Iterable[TweetRecord], path: str | Path) -> int:
    n = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec))
            fh.write("\n")
            n += 1
    return n


def classify_client(client: str, official_list: Iterable[str] = DEFAULT_OFFICIAL_CLIENTS) -> ClientClass:
    """Official iff ``client`` equals a listed client name, ignoring case."""
    official = {c.casefold() for c in official_list}
    if not official:
        raise InputError("official client list is empty")
    return ClientClass.OFFICIAL if client and client.casefold() in official else ClientClass.UNOFFICIAL


class ClientClassifier:
    """Cached variant of :func:`classify_client` for bulk use."""

    def __init__(self, official_list: Iterable[str] = DEFAULT_OFFICIAL_CLIENTS):
        self._official = frozenset(c.casefold() for c in official_list)
        if not self._official:
            raise InputError("official client list is empty")
        self._cache: dict[str, ClientClass] = {}

    def __call__(self, client: str) -> ClientClass:
        try:
            return self._cache[client]
        except KeyError:
            cls = (ClientClass.OFFICIAL if client and client.casefold() in self._official
                   else ClientClass.UNOFFICIAL)
            self._cache[client] = cls
            return cls

    def is_official(self, client: str) -> bool:
        return self(client) is ClientClass.OFFICIAL


def parse_time(value: str | float | int) -> float:
    """Epoch seconds from a number or an ISO-8601 date/datetime (UTC if naive)."""
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except ValueError:
        pass
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"  # fromisoformat accepts "Z" only from 3.11
    try:
        dt = datetime.fromisoformat(value)
    except ValueError as exc:
        raise InputError(f"unrecognised time {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()
