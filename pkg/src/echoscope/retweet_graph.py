"""Directed retweet networks: edge v -> u when u retweets v."""
from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import Corpus, TweetRecord
from .errors import InputError, MissingArtifactError
from .media_catalog import CATEGORIES, MediaCategory, OutletCatalog, URLClassifier

DEFAULT_KINDS = frozenset({"retweet"})


@dataclass(frozen=True, eq=False)
class RetweetGraph:
    """Simple digraph in CSR form; ``weights`` align with ``out_indices``.

    Node indices follow ascending user id, so index order is id order.
    """

    node_ids: tuple[str, ...]
    out_indptr: np.ndarray
    out_indices: np.ndarray
    weights: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    verified: Mapping[str, bool | None] = field(default_factory=dict)
    label: str = ""

    @classmethod
    def from_weighted_edges(cls, edges: Mapping[tuple[str, str], int], nodes: Iterable[str] = (),
                            verified: Mapping[str, bool | None] | None = None, label: str = "") -> "RetweetGraph":
        ids = set(nodes)
        for (s, t), w in edges.items():
            if s == t:
                raise InputError(f"self-loop on {s!r}")
            if w < 1:
                raise InputError(f"edge {s}->{t} has non-positive weight {w}")
            ids.add(s)
            ids.add(t)
        node_ids = tuple(sorted(ids))
        index = {u: i for i, u in enumerate(node_ids)}
        n = len(node_ids)
        m = len(edges)
        src = np.fromiter((index[s] for s, _ in edges), dtype=np.int64, count=m)
        dst = np.fromiter((index[t] for _, t in edges), dtype=np.int64, count=m)
        w = np.fromiter(edges.values(), dtype=np.int64, count=m)
        o = np.lexsort((dst, src))
        src, dst, w = src[o], dst[o], w[o]
        out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_indptr[1:])
        o2 = np.lexsort((src, dst))
        in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=n), out=in_indptr[1:])
        ver = {u: (verified or {}).get(u) for u in node_ids}
        return cls(node_ids, out_indptr, dst, w, in_indptr, src[o2], ver, label)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return int(self.out_indices.shape[0])

    def index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.node_ids)}

    def edges(self):
        """Yield ``(source_id, retweeter_id, weight)`` in CSR order."""
        ids = self.node_ids
        for i in range(self.n_nodes):
            for p in range(self.out_indptr[i], self.out_indptr[i + 1]):
                yield ids[i], ids[self.out_indices[p]], int(self.weights[p])

    def edge_dict(self) -> dict[tuple[str, str], int]:
        return {(s, t): w for s, t, w in self.edges()}

    def without(self, node: str) -> "RetweetGraph":
        """Copy with ``node`` and its incident edges removed."""
        e = {k: w for k, w in self.edge_dict().items() if node not in k}
        return RetweetGraph.from_weighted_edges(e, [u for u in self.node_ids if u != node], self.verified, self.label)

    def scaled(self, factor: int) -> "RetweetGraph":
        return RetweetGraph(self.node_ids, self.out_indptr, self.out_indices, self.weights * int(factor),
                            self.in_indptr, self.in_indices, self.verified, self.label)


def _author_verified(records: Iterable[TweetRecord]) -> dict[str, bool | None]:
    out: dict[str, bool | None] = {}
    for r in records:
        if r.verified is not None:
            out[r.user_id] = r.verified
    return out


def build_category_graphs(corpus: Corpus | Iterable[TweetRecord], catalog: OutletCatalog | URLClassifier,
                          categories: Iterable[MediaCategory] = CATEGORIES,
                          kinds: Iterable[str] = DEFAULT_KINDS) -> dict[MediaCategory, RetweetGraph]:
    """One pass over the corpus building every requested category network.

    A retweet whose URLs span several categories adds an edge to each.
    """
    clf = catalog if isinstance(catalog, URLClassifier) else URLClassifier(catalog)
    wanted = {MediaCategory(c) for c in categories}
    kinds = frozenset(kinds)
    edges: dict[MediaCategory, Counter] = defaultdict(Counter)
    records = list(corpus)
    for r in records:
        if r.kind not in kinds or not r.urls or r.source_user_id is None or r.source_user_id == r.user_id:
            continue
        for c in clf.categories(r.urls):
            if c in wanted:
                edges[c][(r.source_user_id, r.user_id)] += 1
    verified = _author_verified(records)
    return {c: RetweetGraph.from_weighted_edges(edges.get(c, {}), verified=verified, label=c.value)
            for c in CATEGORIES if c in wanted}


def build_category_graph(corpus, catalog, category: MediaCategory,
                         kinds: Iterable[str] = DEFAULT_KINDS) -> RetweetGraph:
    return build_category_graphs(corpus, catalog, [category], kinds)[MediaCategory(category)]


def degrees(g: RetweetGraph) -> tuple[np.ndarray, np.ndarray]:
    """Unweighted ``(k_in, k_out)`` per node index."""
    return np.diff(g.in_indptr), np.diff(g.out_indptr)


def degree_stats(g: RetweetGraph) -> dict:
    """Size and heterogeneity summary (sigma(k)/<k> for in and out degree)."""
    k_in, k_out = degrees(g)
    n = g.n_nodes
    mean_k = g.n_edges / n if n else 0.0
    het = (lambda k: float(k.std() / mean_k)) if mean_k > 0 else (lambda k: float("nan"))
    return {
        "nodes": n,
        "edges": g.n_edges,
        "mean_degree": mean_k,
        "heterogeneity_in": het(k_in),
        "heterogeneity_out": het(k_out),
        "max_in": int(k_in.max()) if n else 0,
        "max_out": int(k_out.max()) if n else 0,
        "total_weight": int(g.weights.sum()),
    }


def write_graph(g: RetweetGraph, edge_path: str | Path, node_path: str | Path) -> None:
    with Path(edge_path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        w.writerows(g.edges())
    with Path(node_path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["user_id", "verified"])
        for u in g.node_ids:
            v = g.verified.get(u)
            w.writerow([u, "" if v is None else str(v).lower()])


def read_graph(edge_path: str | Path, node_path: str | Path | None = None, label: str = "") -> RetweetGraph:
    edge_path = Path(edge_path)
    if not edge_path.exists():
        raise MissingArtifactError(f"missing graph artifact {edge_path}")
    edges: dict[tuple[str, str], int] = {}
    with edge_path.open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            edges[(row["source"], row["target"])] = int(row["weight"])
    nodes: list[str] = []
    verified: dict[str, bool | None] = {}
    if node_path is not None and Path(node_path).exists():
        with Path(node_path).open(encoding="utf-8") as fh:
            for row in csv.DictReader(fh, delimiter="\t"):
                nodes.append(row["user_id"])
                v = row["verified"]
                verified[row["user_id"]] = None if v == "" else v == "true"
    return RetweetGraph.from_weighted_edges(edges, nodes, verified, label)
