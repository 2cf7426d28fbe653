"""Influencer ranking: directed Collective Influence, weighted PageRank, RBO."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._backend import kernels
from .errors import ConvergenceError, InputError, MissingArtifactError
from .retweet_graph import RetweetGraph, degrees

DEFAULT_RADIUS = 2


@dataclass(frozen=True)
class CIRanking:
    """Removal order with the CI_out value each node had when removed.

    ``k_out`` is the out-degree in the unreduced graph.
    """

    order: tuple[str, ...]
    ci_values: tuple[float, ...]
    radius: int
    k_out: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.order)

    def top(self, n: int) -> list[str]:
        return list(self.order[:n])

    def rank_of(self) -> dict[str, int]:
        return {u: i + 1 for i, u in enumerate(self.order)}


def collective_influence_out(g: RetweetGraph, radius: int = DEFAULT_RADIUS, top_k: int | None = None) -> CIRanking:
    """Rank spreaders by adaptive removal of the node with the largest

        CI(i) = max(k_out(i) - 1, 0) * sum_{j at out-distance radius} max(k_out(j) - 1, 0)

    recomputing scores around each removed node. Once every remaining score
    is zero, the rest follow by current out-degree. Ties: out-degree desc,
    then user id asc.
    """
    if radius < 1:
        raise InputError("radius must be >= 1")
    if top_k is not None and top_k < 1:
        raise InputError("top_k must be >= 1")
    if g.n_nodes == 0:
        return CIRanking((), (), radius, ())
    if top_k is None:
        top_k = g.n_nodes
    order, values = kernels.ci_adaptive(g.out_indptr, g.out_indices, g.in_indptr, g.in_indices,
                                        int(radius), int(min(top_k, g.n_nodes)))
    _, k_out = degrees(g)
    ids = g.node_ids
    return CIRanking(tuple(ids[i] for i in order), tuple(float(v) for v in values), radius,
                     tuple(int(k_out[i]) for i in order))


def pagerank_weighted(g: RetweetGraph, damping: float = 0.85, tol: float = 1e-12,
                      max_iter: int = 100_000) -> np.ndarray:
    """PageRank on the edge-reversed weighted graph (retweeter -> source).

    Dangling mass is spread uniformly; iteration stops once the L1 change
    drops below ``tol``. Returns scores indexed like ``g.node_ids``.
    """
    if not 0 < damping < 1:
        raise InputError("damping must lie in (0, 1)")
    if tol <= 0:
        raise InputError("tol must be positive")
    n = g.n_nodes
    if n == 0:
        return np.zeros(0)
    src = np.repeat(np.arange(n), np.diff(g.out_indptr))
    dst = g.out_indices
    w = g.weights.astype(float)
    # reversed edge dst -> src carries weight w; normalise by dst's total
    out_w = np.bincount(dst, weights=w, minlength=n)
    dangling = out_w == 0
    coef = w / np.where(out_w[dst] > 0, out_w[dst], 1.0)
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        spread = np.bincount(src, weights=coef * x[dst], minlength=n)
        new = damping * (spread + x[dangling].sum() / n) + (1.0 - damping) / n
        new /= new.sum()
        delta = np.abs(new - x).sum()
        x = new
        if delta < tol:
            return x
    raise ConvergenceError(f"PageRank did not converge in {max_iter} iterations (L1 change {delta:.3g})",
                           last_iterate=x, iterations=max_iter)


def pagerank_ranking(g: RetweetGraph, top_k: int | None = None, **kw) -> list[str]:
    scores = pagerank_weighted(g, **kw)
    order = np.lexsort((np.arange(g.n_nodes), -scores))
    if top_k is not None:
        order = order[:top_k]
    return [g.node_ids[i] for i in order]


@dataclass(frozen=True)
class RankComparison:
    rbo: float
    jaccard: float
    depth: int
    p: float


def rank_overlap(list_a: Sequence, list_b: Sequence, p: float = 0.98, depth: int = 100) -> RankComparison:
    """Extrapolated rank-biased overlap and top-k Jaccard of two rankings.

    Both lists are cut at ``k = min(depth, longest list)``; a shorter list
    simply contributes fewer items at deeper prefixes.
    """
    if not list_a or not list_b:
        raise InputError("rank_overlap needs two non-empty lists")
    if len(set(list_a)) != len(list_a) or len(set(list_b)) != len(list_b):
        raise InputError("ranked lists must not contain duplicates")
    if not 0 < p < 1:
        raise InputError("p must lie in (0, 1)")
    k = min(depth, max(len(list_a), len(list_b)))
    a, b = list(list_a[:k]), list(list_b[:k])
    seen_a: set = set()
    seen_b: set = set()
    overlap = 0
    acc = 0.0
    for d in range(1, k + 1):
        x = a[d - 1] if d <= len(a) else None
        y = b[d - 1] if d <= len(b) else None
        if x is not None:
            seen_a.add(x)
        if y is not None:
            seen_b.add(y)
        if x is not None and x == y:
            overlap += 1
        else:
            overlap += (x is not None and x in seen_b) + (y is not None and y in seen_a)
        acc += overlap / d * p ** d
    rbo = overlap / k * p ** k + (1 - p) / p * acc
    sa, sb = set(a), set(b)
    jac = len(sa & sb) / len(sa | sb)
    return RankComparison(min(max(rbo, 0.0), 1.0), jac, k, p)


def write_ranking(r: CIRanking, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["rank", "user_id", "ci_value", "k_out"])
        for i, (u, v) in enumerate(zip(r.order, r.ci_values)):
            w.writerow([i + 1, u, repr(float(v)), r.k_out[i] if r.k_out else ""])


def read_ranking(path: str | Path, radius: int = DEFAULT_RADIUS) -> CIRanking:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"missing ranking artifact {path}")
    order, vals, kout = [], [], []
    with path.open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            order.append(row["user_id"])
            vals.append(float(row["ci_value"]))
            kout.append(int(row["k_out"]) if row["k_out"] else 0)
    return CIRanking(tuple(order), tuple(vals), radius, tuple(kout))
