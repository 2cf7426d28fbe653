"""Influencer cosine-similarity networks and community separation metrics."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .corpus import ClientClassifier, TweetRecord
from .errors import InputError, MissingArtifactError, NumericalError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimilarityNetwork:
    influencers: tuple[str, ...]
    matrix: np.ndarray
    user_dimension: int
    excluded: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return len(self.influencers)

    def induced(self, idx: Sequence[int]) -> "SimilarityNetwork":
        idx = np.asarray(idx)
        return SimilarityNetwork(tuple(self.influencers[i] for i in idx),
                                 self.matrix[np.ix_(idx, idx)], self.user_dimension)


@dataclass(frozen=True)
class Partition:
    assignment: Mapping[str, int]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def labels(self, order: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self.assignment[u] for u in order], dtype=np.int64)
        except KeyError as exc:
            raise InputError(f"partition does not cover influencer {exc.args[0]!r}") from None

    def communities(self) -> list[list[str]]:
        groups: dict[int, list[str]] = {}
        for u, c in self.assignment.items():
            groups.setdefault(c, []).append(u)
        return [sorted(groups[c]) for c in sorted(groups)]


def canonical_partition(order: Sequence[str], labels: Sequence[int]) -> Partition:
    """Relabel communities 0, 1, ... by first appearance along ``order``."""
    remap: dict[int, int] = {}
    out = {}
    for u, c in zip(order, labels):
        out[u] = remap.setdefault(int(c), len(remap))
    return Partition(out)


def retweet_count_vectors(records: Iterable[TweetRecord], influencers: Iterable[str], kind: str = "retweet",
                          official: ClientClassifier | None = None) -> dict[tuple[str, str], int]:
    """(influencer, user) -> number of ``kind`` interactions from user to influencer."""
    infl = set(influencers)
    counts: dict[tuple[str, str], int] = {}
    for r in records:
        if r.kind != kind or r.source_user_id not in infl or r.source_user_id == r.user_id:
            continue
        if official is not None and not official.is_official(r.client):
            continue
        key = (r.source_user_id, r.user_id)
        counts[key] = counts.get(key, 0) + 1
    return counts


def build_similarity(retweet_counts: Mapping[tuple[str, str], float],
                     influencers: Sequence[str] | None = None) -> SimilarityNetwork:
    """Cosine similarity between influencers' per-user count vectors.

    Influencers whose vector is all zero are dropped (and listed in
    ``excluded``). The diagonal is zero.
    """
    infl = list(influencers) if influencers is not None else sorted({i for i, _ in retweet_counts})
    users = sorted({u for _, u in retweet_counts})
    ii = {v: k for k, v in enumerate(infl)}
    uu = {v: k for k, v in enumerate(users)}
    rows, cols, vals = [], [], []
    for (i, u), c in retweet_counts.items():
        if c < 0:
            raise InputError("retweet counts must be non-negative")
        if c and i in ii:
            rows.append(ii[i])
            cols.append(uu[u])
            vals.append(float(c))
    x = sp.csr_matrix((vals, (rows, cols)), shape=(len(infl), len(users)))
    norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).ravel())
    keep = np.flatnonzero(norms > 0)
    excluded = tuple(infl[k] for k in np.flatnonzero(norms == 0))
    if excluded:
        log.warning("%d influencer(s) with no interactions excluded from the similarity network", len(excluded))
    if keep.size < 2:
        raise InputError("similarity network needs at least two influencers with non-zero vectors")
    xn = sp.diags(1.0 / norms[keep]) @ x[keep]
    sim = np.asarray((xn @ xn.T).todense())
    np.fill_diagonal(sim, 0.0)
    np.clip(sim, 0.0, 1.0, out=sim)
    sim = (sim + sim.T) / 2
    return SimilarityNetwork(tuple(infl[k] for k in keep), sim, len(users), excluded)


def louvain(net: SimilarityNetwork, seed: int = 0, resolution: float = 1.0) -> Partition:
    """Louvain modularity optimisation with a seeded node visiting order."""
    g = nx.from_numpy_array(net.matrix)
    comms = nx.community.louvain_communities(g, weight="weight", resolution=resolution, seed=seed)
    labels = np.empty(net.size, dtype=np.int64)
    for c, members in enumerate(sorted(comms, key=min)):
        labels[list(members)] = c
    part = canonical_partition(net.influencers, labels)
    return Partition(part.assignment, {"seed": seed, "resolution": resolution})


def _community_sums(net: SimilarityNetwork, part: Partition):
    w = net.matrix
    total = w.sum()
    if not total > 0:
        raise NumericalError("similarity network has zero total weight")
    labels = part.labels(net.influencers)
    k = labels.max() + 1
    onehot = np.zeros((w.shape[0], k))
    onehot[np.arange(w.shape[0]), labels] = 1.0
    within = np.einsum("ic,ij,jc->c", onehot, w, onehot)
    strength = onehot.T @ w.sum(axis=1)
    return within, strength, total


def modularity(net: SimilarityNetwork, part: Partition) -> float:
    """Weighted Newman modularity at resolution 1."""
    within, strength, two_m = _community_sums(net, part)
    return float((within / two_m - (strength / two_m) ** 2).sum())


def normalized_cut(net: SimilarityNetwork, part: Partition) -> float:
    """Share of total edge weight running between different communities."""
    w = net.matrix
    total = w.sum()
    if not total > 0:
        raise NumericalError("similarity network has zero total weight")
    labels = part.labels(net.influencers)
    cross = w[labels[:, None] != labels[None, :]].sum()
    return float(min(cross / total, 1.0))


def cross_weight_fraction(net: SimilarityNetwork, part: Partition) -> float:
    """Mean over nodes of the fraction of a node's weight leaving its community."""
    labels = part.labels(net.influencers)
    w = net.matrix
    s = w.sum(axis=1)
    same = labels[:, None] == labels[None, :]
    cross = (w * ~same).sum(axis=1)
    ok = s > 0
    return float((cross[ok] / s[ok]).mean()) if ok.any() else float("nan")


METRICS = {"modularity": modularity, "normalized_cut": normalized_cut}


def subsample_se(net: SimilarityNetwork, metric: str = "modularity", fraction: float = 0.8,
                 repetitions: int = 100, seed: int = 0) -> tuple[float, float]:
    """Mean and standard error of ``metric`` over re-partitioned random
    subsets of ceil(fraction * I) influencers (drawn without replacement)."""
    if metric not in METRICS:
        raise InputError(f"unknown metric {metric!r}")
    if not 0 < fraction < 1:
        raise InputError("fraction must lie in (0, 1)")
    if repetitions < 2:
        raise InputError("repetitions must be >= 2")
    size = math.ceil(fraction * net.size)
    if size < 2:
        raise InputError("subsample would contain fewer than two influencers")
    fn = METRICS[metric]
    vals = np.empty(repetitions)
    for r, child in enumerate(np.random.SeedSequence(seed).spawn(repetitions)):
        rng = np.random.default_rng(child)
        idx = np.sort(rng.choice(net.size, size=size, replace=False))
        sub = net.induced(idx)
        part = louvain(sub, seed=int(rng.integers(2**31)))
        vals[r] = fn(sub, part)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(repetitions))


def write_similarity(net: SimilarityNetwork, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["i", "j", "similarity"])
        ids = net.influencers
        iu, ju = np.triu_indices(net.size, k=1)
        for a, b in zip(iu, ju):
            w.writerow([ids[a], ids[b], repr(float(net.matrix[a, b]))])


def read_similarity(path: str | Path, user_dimension: int = 0) -> SimilarityNetwork:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"missing similarity artifact {path}")
    pairs = []
    ids: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            for u in (row["i"], row["j"]):
                ids.setdefault(u, len(ids))
            pairs.append((row["i"], row["j"], float(row["similarity"])))
    m = np.zeros((len(ids), len(ids)))
    for a, b, s in pairs:
        m[ids[a], ids[b]] = m[ids[b], ids[a]] = s
    return SimilarityNetwork(tuple(ids), m, user_dimension)


def write_partition(part: Partition, order: Sequence[str], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["influencer_id", "community"])
        for u in order:
            w.writerow([u, part.assignment[u]])
