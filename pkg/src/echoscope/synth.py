"""Seeded two-echo-chamber corpora with a tunable cross-side retweet rate."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import DEFAULT_OFFICIAL_CLIENTS, TweetRecord, write_corpus
from .errors import InputError
from .media_catalog import MediaCategory, builtin_catalog

LEFT, RIGHT = "left", "right"

DEFAULT_MIX = {
    RIGHT: {MediaCategory.FAKE_NEWS: 0.25, MediaCategory.EXTREME_BIAS_RIGHT: 0.25,
            MediaCategory.RIGHT: 0.3, MediaCategory.RIGHT_LEANING: 0.2},
    LEFT: {MediaCategory.CENTER: 0.3, MediaCategory.LEFT_LEANING: 0.25,
           MediaCategory.LEFT: 0.3, MediaCategory.EXTREME_BIAS_LEFT: 0.15},
}
UNOFFICIAL_CLIENTS = ("IFTTT", "dlvr.it", "Hootsuite Inc.")
T0 = 1_590_969_600  # 2020-06-01 UTC
SPAN = 150 * 86_400


@dataclass(frozen=True)
class SynthConfig:
    """Generator parameters.

    Per-user event counts are power-law draws with exponent
    ``activity_exponent``, floored to integers no smaller than
    ``activity_min`` and capped at ``activity_max``. Influencer popularity within a side defaults to
    Zipf weights 1/(rank+1)^``popularity_exponent``. A few ordinary users
    (``n_amplifiers``) are themselves retweeted with probability
    ``amplifier_rate`` per event, giving the network some depth.
    """

    n_users: int = 10_000
    n_influencers: int = 40
    epsilon: float = 0.1
    activity_exponent: float = 2.5
    activity_min: int = 3
    activity_max: int = 1000
    influencer_popularity: tuple[float, ...] | None = None
    popularity_exponent: float = 1.0
    side_split: float = 0.5
    unofficial_fraction: float = 0.02
    quote_fraction: float = 0.05
    category_mix: Mapping[str, Mapping[MediaCategory, float]] = field(default_factory=lambda: DEFAULT_MIX)
    n_amplifiers: int = 0
    amplifier_rate: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.n_users < 1:
            raise InputError("n_users must be positive")
        if not 0 <= self.epsilon <= 0.5:
            raise InputError("epsilon must lie in [0, 0.5]")
        for name in ("side_split", "unofficial_fraction", "quote_fraction", "amplifier_rate"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InputError(f"{name} must lie in [0, 1]")
        n_right = self.n_right_influencers
        if self.n_influencers < 4 or n_right < 2 or self.n_influencers - n_right < 2:
            raise InputError("need at least 4 influencers with at least 2 per side")
        if self.activity_min < 1 or self.activity_max < self.activity_min:
            raise InputError("activity bounds must satisfy 1 <= min <= max")
        if self.activity_exponent <= 1:
            raise InputError("activity exponent must exceed 1")
        if self.influencer_popularity is not None:
            w = np.asarray(self.influencer_popularity, dtype=float)
            if w.shape != (self.n_influencers,) or (w <= 0).any():
                raise InputError("influencer_popularity needs one positive weight per influencer")
        if not 0 <= self.n_amplifiers <= self.n_users:
            raise InputError("n_amplifiers out of range")
        for s in (LEFT, RIGHT):
            mix = self.category_mix.get(s)
            if not mix or any(p < 0 for p in mix.values()) or sum(mix.values()) <= 0:
                raise InputError(f"category_mix for {s} must be a non-empty non-negative distribution")

    @property
    def n_right_influencers(self) -> int:
        return int(round(self.n_influencers * self.side_split))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["category_mix"] = {s: {c.value: p for c, p in mix.items()} for s, mix in self.category_mix.items()}
        d["influencer_popularity"] = None if self.influencer_popularity is None else list(self.influencer_popularity)
        return d


@dataclass(frozen=True, eq=False)
class SynthCorpus:
    records: tuple[TweetRecord, ...]
    user_sides: dict[str, str]
    influencer_sides: dict[str, str]
    influencer_types: dict[str, str]
    config: SynthConfig


def user_id(i: int) -> str:
    return f"u{i:06d}"


def influencer_id(j: int) -> str:
    return f"i{j:03d}"


def _sides(cfg: SynthConfig):
    """Influencer sides (right first) and user sides drawn from the root seed."""
    n_right = cfg.n_right_influencers
    inf_side = np.array([1] * n_right + [0] * (cfg.n_influencers - n_right), dtype=np.int8)
    rng = np.random.default_rng([cfg.seed, 0x5349444553])
    user_side = (rng.random(cfg.n_users) < cfg.side_split).astype(np.int8)
    return inf_side, user_side


def _popularity(cfg: SynthConfig, inf_side: np.ndarray) -> list[np.ndarray]:
    if cfg.influencer_popularity is not None:
        w = np.asarray(cfg.influencer_popularity, dtype=float)
    else:
        w = np.empty(cfg.n_influencers)
        for s in (0, 1):
            idx = np.flatnonzero(inf_side == s)
            w[idx] = 1.0 / (np.arange(idx.size) + 1.0) ** cfg.popularity_exponent
    return [w[inf_side == s] / w[inf_side == s].sum() for s in (0, 1)]


def _activity(rng: np.random.Generator, cfg: SynthConfig) -> int:
    # inverse-CDF draw from the continuous power law, floored to an integer
    u = rng.random()
    k = int(cfg.activity_min * (1.0 - u) ** (-1.0 / (cfg.activity_exponent - 1.0)))
    return min(max(k, cfg.activity_min), cfg.activity_max)


def _user_targets(rng, cfg, side, inf_by_side, cum_pop, amp_by_side, own_index):
    """Per-event targets of one user: ``(is_amplifier, index, target_side)`` arrays."""
    k = _activity(rng, cfg)
    tside = np.where(rng.random(k) < cfg.epsilon, 1 - side, side)
    amp_draw = rng.random(k)
    pick = rng.random(k)
    amp_pick = rng.random(k)
    target = np.empty(k, dtype=np.int64)
    is_amp = np.zeros(k, dtype=bool)
    for s in (0, 1):
        sel = tside == s
        if not sel.any():
            continue
        idx = np.minimum(np.searchsorted(cum_pop[s], pick[sel], side="right"), inf_by_side[s].size - 1)
        target[sel] = inf_by_side[s][idx]
        amps = amp_by_side[s]
        if amps.size:
            a = amps[(amp_pick[sel] * amps.size).astype(np.int64)]
            use = (amp_draw[sel] < cfg.amplifier_rate) & (a != own_index)
            t = target[sel]
            t[use] = a[use]
            target[sel] = t
            ia = is_amp[sel]
            ia[use] = True
            is_amp[sel] = ia
    return is_amp, target, tside


def _setup(cfg: SynthConfig):
    cfg.validate()
    inf_side, user_side = _sides(cfg)
    cum_pop = [np.cumsum(p) for p in _popularity(cfg, inf_side)]
    inf_by_side = [np.flatnonzero(inf_side == s) for s in (0, 1)]
    amp_rng = np.random.default_rng([cfg.seed, 0x414D50])
    amps = np.sort(amp_rng.choice(cfg.n_users, size=cfg.n_amplifiers, replace=False)) if cfg.n_amplifiers else np.array([], int)
    amp_by_side = [amps[user_side[amps] == s] for s in (0, 1)]
    seeds = np.random.SeedSequence([cfg.seed, 0x55534552]).spawn(cfg.n_users)
    return inf_side, user_side, cum_pop, inf_by_side, amp_by_side, seeds


def generate_corpus(cfg: SynthConfig) -> SynthCorpus:
    """Generate retweets and quotes, one derived seed per user.

    Records are ordered by (user id, event index).
    """
    inf_side, user_side, cum_pop, inf_by_side, amp_by_side, seeds = _setup(cfg)
    catalog = builtin_catalog("2020")
    hosts = {c: catalog.hosts(c) for mix in cfg.category_mix.values() for c in mix}
    mixes = []
    for s in (LEFT, RIGHT):
        cats = list(cfg.category_mix[s])
        p = np.array([cfg.category_mix[s][c] for c in cats], dtype=float)
        mixes.append((cats, p / p.sum()))
    official = sorted(DEFAULT_OFFICIAL_CLIENTS)

    cum_mix = [np.cumsum(p) for _, p in mixes]
    n_off, n_uno = len(official), len(UNOFFICIAL_CLIENTS)
    records: list[TweetRecord] = []
    for i in range(cfg.n_users):
        rng = np.random.default_rng(seeds[i])
        uid = user_id(i)
        is_amp, target, tside = _user_targets(rng, cfg, int(user_side[i]), inf_by_side, cum_pop, amp_by_side, i)
        k = target.size
        times = np.sort(rng.integers(T0, T0 + SPAN, size=k)).tolist()
        u = rng.random((k, 5))
        story = rng.integers(1_000_000, size=k).tolist()
        cat_i = np.empty(k, dtype=np.int64)
        for s in (0, 1):
            sel = tside == s
            cat_i[sel] = np.minimum(np.searchsorted(cum_mix[s], u[sel, 0], side="right"), len(mixes[s][0]) - 1)
        kinds = np.where(u[:, 2] < cfg.quote_fraction, "quote", "retweet").tolist()
        unofficial = (u[:, 3] < cfg.unofficial_fraction).tolist()
        tside_l, cat_l, hu, cu = tside.tolist(), cat_i.tolist(), u[:, 1].tolist(), u[:, 4].tolist()
        for e in range(k):
            host_list = hosts[mixes[tside_l[e]][0][cat_l[e]]]
            host = host_list[int(hu[e] * len(host_list))]
            client = UNOFFICIAL_CLIENTS[int(cu[e] * n_uno)] if unofficial[e] else official[int(cu[e] * n_off)]
            t = int(target[e])
            records.append(TweetRecord(
                tweet_id=f"{i:06d}{e:05d}",
                user_id=uid,
                timestamp=float(times[e]),
                kind=kinds[e],
                source_user_id=user_id(t) if is_amp[e] else influencer_id(t),
                urls=(f"https://{host}/story/{story[e]}",),
                client=client,
                verified=False,
            ))

    sides = (LEFT, RIGHT)
    types = ("media", "political", "independent")
    type_rng = np.random.default_rng([cfg.seed, 0x54595045])
    inf_types = {influencer_id(j): types[type_rng.integers(len(types))] for j in range(cfg.n_influencers)}
    inf_types.update({user_id(int(a)): "independent" for side in amp_by_side for a in side})
    return SynthCorpus(
        tuple(records),
        {user_id(i): sides[user_side[i]] for i in range(cfg.n_users)},
        {influencer_id(j): sides[inf_side[j]] for j in range(cfg.n_influencers)},
        inf_types,
        cfg,
    )


def planted_matrix(n_users: int = 200, n_influencers: int = 20, epsilon: float = 0.05, seed: int = 0,
                   **kw) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """User x influencer retweet counts drawn exactly as in
    :func:`generate_corpus`, skipping record materialisation.

    Returns ``(counts, user_side, influencer_side)`` with side 1 = right.
    """
    cfg = SynthConfig(n_users=n_users, n_influencers=n_influencers, epsilon=epsilon, seed=seed,
                      n_amplifiers=0, **kw)
    inf_side, user_side, cum_pop, inf_by_side, amp_by_side, seeds = _setup(cfg)
    a = np.zeros((n_users, n_influencers), dtype=np.int64)
    for i in range(n_users):
        rng = np.random.default_rng(seeds[i])
        _, t, _ = _user_targets(rng, cfg, int(user_side[i]), inf_by_side, cum_pop, amp_by_side, i)
        np.add.at(a[i], t, 1)
    return a, user_side, inf_side


def write_synth(sc: SynthCorpus, out_dir: str | Path) -> dict[str, Path]:
    """Write corpus.jsonl plus ground-truth and label sidecars."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.jsonl",
        "user_sides": out / "truth_users.tsv",
        "influencer_sides": out / "truth_influencers.tsv",
        "labels": out / "labels.tsv",
    }
    write_corpus(sc.records, paths["corpus"])
    _write_pairs(paths["user_sides"], ("user_id", "side"), sc.user_sides)
    _write_pairs(paths["influencer_sides"], ("influencer_id", "side"), sc.influencer_sides)
    _write_pairs(paths["labels"], ("user_id", "type"), sc.influencer_types)
    return paths


def _write_pairs(path: Path, header: Sequence[str], data: Mapping[str, str]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(sorted(data.items()))
