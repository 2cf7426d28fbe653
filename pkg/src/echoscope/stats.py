"""Polarization statistics: Hartigans' dip test, BCa intervals, correlation."""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.special import ndtr, ndtri

from ._backend import kernels
from .corpus import TweetRecord
from .errors import InputError, NumericalError

CHUNK = 64
GROUPED_JACKKNIFE_ABOVE = 5_000
JACKKNIFE_GROUPS = 200


def _run_chunks(fn, n_items: int, seed, threads: int) -> np.ndarray:
    """Evaluate ``fn(rng, count)`` over fixed-size chunks, each with its own
    spawned seed, so the result is the same for any thread count."""
    sizes = [min(CHUNK, n_items - s) for s in range(0, n_items, CHUNK)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(s), k) for s, k in zip(seeds, sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda j: fn(*j), jobs))
    else:
        parts = [fn(*j) for j in jobs]
    return np.concatenate(parts) if parts else np.empty(0)


def _is_sorted(x: np.ndarray) -> bool:
    return bool(np.all(x[1:] >= x[:-1]))


def dip_statistic(sample) -> float:
    """Hartigans' dip of a sample (sorted internally if needed)."""
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InputError("dip statistic needs at least two observations")
    if not np.all(np.isfinite(x)):
        raise InputError("dip statistic needs finite values")
    if not _is_sorted(x):
        x = np.sort(x)
    return float(kernels.dip_sorted(x))


@functools.lru_cache(maxsize=32)
def _null_dips(n: int, b_null: int, seed: int, threads: int = 1) -> np.ndarray:
    def block(rng, k):
        u = np.sort(rng.random((k, n)), axis=1)
        return np.array([kernels.dip_sorted(row) for row in u])

    out = _run_chunks(block, b_null, [seed, n, 0x6E756C6C], threads)
    out.setflags(write=False)
    return out


def dip_null_distribution(n: int, b_null: int, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Dip statistics of ``b_null`` uniform(0, 1) samples of size ``n``."""
    return _null_dips(int(n), int(b_null), int(seed), 1)


def bootstrap_bca(sample, statistic: Callable[[np.ndarray], float], B: int = 1000, level: float = 0.95,
                  seed: int = 0, threads: int = 1,
                  jackknife: Callable[[np.ndarray], np.ndarray] | None = None) -> tuple[float, float]:
    """Bias-corrected and accelerated bootstrap interval.

    Resamples are drawn over axis 0. The acceleration uses a leave-one-out
    jackknife, or a 200-group jackknife when there are more than 5000
    observations. ``jackknife``, when given, returns all leave-one-out
    values at once (a faster route to the same numbers). A degenerate
    resample distribution returns the point estimate twice.
    """
    x = np.asarray(sample)
    n = x.shape[0]
    if B < 100:
        raise InputError("B must be >= 100")
    if not 0 < level < 1:
        raise InputError("level must lie in (0, 1)")
    if n < 2:
        raise InputError("bootstrap needs at least two observations")
    theta = float(statistic(x))

    def block(rng, k):
        idx = np.sort(rng.integers(0, n, size=(k, n)), axis=1)
        return np.array([statistic(x[i]) for i in idx], dtype=float)

    boot = _run_chunks(block, B, [seed, 0x626F6F74], threads)
    if not np.all(np.isfinite(boot)):
        raise NumericalError("statistic returned non-finite values on resamples")
    if np.ptp(boot) == 0:
        return theta, theta

    prop = (np.sum(boot < theta) + 0.5 * np.sum(boot == theta)) / B
    prop = min(max(prop, 0.5 / B), 1 - 0.5 / B)
    z0 = float(ndtri(prop))

    if n > GROUPED_JACKKNIFE_ABOVE or jackknife is None:
        jack = _jackknife(x, statistic, n, seed)
    else:
        jack = np.asarray(jackknife(x), dtype=float)
    dev = jack.mean() - jack
    den = 6.0 * (dev ** 2).sum() ** 1.5
    accel = float((dev ** 3).sum() / den) if den > 0 else 0.0

    alpha = (1.0 - level) / 2.0
    z = ndtri(np.array([alpha, 1.0 - alpha]))
    adj = ndtr(z0 + (z0 + z) / (1.0 - accel * (z0 + z)))
    lo, hi = np.quantile(boot, adj)
    return float(lo), float(hi)


def _jackknife(x: np.ndarray, statistic, n: int, seed) -> np.ndarray:
    """Leave-one-out values, or leave-one-group-out over 200 seeded groups
    above ``GROUPED_JACKKNIFE_ABOVE`` observations."""
    if n > GROUPED_JACKKNIFE_ABOVE:
        perm = np.random.default_rng([seed, 0x6A61636B]).permutation(n)
        groups = np.array_split(perm, JACKKNIFE_GROUPS)
        mask = np.ones(n, dtype=bool)
        jack = np.empty(len(groups))
        for g, members in enumerate(groups):
            mask[members] = False
            jack[g] = statistic(x[mask])
            mask[members] = True
        return jack
    keep = np.ones(n, dtype=bool)
    jack = np.empty(n)
    for i in range(n):
        keep[i] = False
        jack[i] = statistic(x[keep])
        keep[i] = True
    return jack


@dataclass(frozen=True)
class DipResult:
    statistic: float
    p_value: float
    ci_low: float
    ci_high: float
    n: int
    B_boot: int
    B_null: int
    seed: int
    level: float = 0.95

    def as_dict(self) -> dict:
        return asdict(self)

    def format(self, digits: int = 4) -> str:
        pct = round(self.level * 100)
        return (f"D = {self.statistic:.{digits}f} ({pct}% CI: [{self.ci_low:.{digits}f},{self.ci_high:.{digits}f}]), "
                f"p = {self.p_value:.3g} (B_null = {self.B_null}), n = {self.n}")


def dip_test(sample, B_null: int = 9999, seed: int = 0, B_boot: int = 1000, level: float = 0.95,
             threads: int = 1) -> DipResult:
    """Dip statistic, Monte Carlo p-value against the uniform null, and a BCa
    interval for the statistic. p = (1 + #{null >= D}) / (B_null + 1)."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    if x.size < 4:
        raise InputError("dip test needs at least four observations")
    if B_null < 100:
        raise InputError("B_null must be >= 100")
    d = dip_statistic(x)
    null = _null_dips(x.size, int(B_null), int(seed), max(1, threads))
    p = (1.0 + np.count_nonzero(null >= d)) / (B_null + 1.0)
    lo, hi = bootstrap_bca(x, dip_statistic, B=B_boot, level=level, seed=seed, threads=threads,
                           jackknife=kernels.dip_jackknife_sorted)
    return DipResult(d, float(p), lo, hi, int(x.size), int(B_boot), int(B_null), int(seed), level)


def pearson_correlation(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise InputError("pearson_correlation needs two equal-length vectors of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise NumericalError("correlation undefined for a constant vector")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


def _side(v: float | None) -> str | None:
    if v is None or v == 0:
        return None
    return "left" if v < 0 else "right"


@dataclass
class QuoteRetweetTable:
    quotes: dict[tuple[str, str], int]
    retweets: dict[tuple[str, str], int]

    def ratio(self, user_side: str, influencer_side: str) -> float | None:
        rt = self.retweets[(user_side, influencer_side)]
        return None if rt == 0 else self.quotes[(user_side, influencer_side)] / rt

    def table(self) -> dict[str, float | None]:
        return {f"{a}->{b}": self.ratio(a, b) for a in ("left", "right") for b in ("left", "right")}

    def overall(self) -> dict[str, float | None]:
        """Per user side, quotes over retweets summed across influencer sides."""
        out = {}
        for a in ("left", "right"):
            q = sum(self.quotes[(a, b)] for b in ("left", "right"))
            r = sum(self.retweets[(a, b)] for b in ("left", "right"))
            out[a] = None if r == 0 else q / r
        return out


def quote_retweet_ratio(records: Iterable[TweetRecord], user_positions: Mapping[str, float],
                        influencer_positions: Mapping[str, float]) -> QuoteRetweetTable:
    """Quote/retweet counts between ideological sides (position sign)."""
    keys = [(a, b) for a in ("left", "right") for b in ("left", "right")]
    q = dict.fromkeys(keys, 0)
    r = dict.fromkeys(keys, 0)
    for rec in records:
        if rec.kind not in ("retweet", "quote"):
            continue
        us = _side(user_positions.get(rec.user_id))
        inf = _side(influencer_positions.get(rec.source_user_id))
        if us is None or inf is None:
            continue
        (q if rec.kind == "quote" else r)[(us, inf)] += 1
    return QuoteRetweetTable(q, r)
