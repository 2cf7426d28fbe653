"""Latent ideology by correspondence analysis of the user x influencer
retweet-count matrix."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import ClientClassifier, TweetRecord
from .errors import ConvergenceError, InputError, MissingArtifactError, NumericalError
from .media_catalog import MediaCategory, category_position

log = logging.getLogger(__name__)

DENSE_LIMIT = 1_000_000


@dataclass(frozen=True, eq=False)
class RetweetMatrix:
    """Rows are users, columns influencers; entry = number of retweets."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    counts: sp.csr_matrix
    min_distinct: int = 3
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def toarray(self) -> np.ndarray:
        return self.counts.toarray()


def matrix_from_counts(counts, rows: Sequence[str], cols: Sequence[str], min_distinct: int = 3,
                       meta: dict | None = None) -> RetweetMatrix:
    """Apply the row (distinct influencers) and column (non-empty) filters."""
    a = sp.csr_matrix(counts, dtype=np.float64)
    a.eliminate_zeros()
    if a.shape != (len(rows), len(cols)):
        raise InputError("counts shape does not match row/column labels")
    if (a.data < 0).any():
        raise InputError("retweet counts must be non-negative")
    distinct = np.diff(a.indptr)
    keep_r = np.flatnonzero(distinct >= min_distinct)
    a = a[keep_r]
    col_nnz = np.bincount(a.indices, minlength=a.shape[1])
    keep_c = np.flatnonzero(col_nnz > 0)
    dropped_c = [cols[j] for j in np.flatnonzero(col_nnz == 0)]
    if dropped_c:
        log.info("%d influencer column(s) empty after filtering; dropped", len(dropped_c))
    a = a[:, keep_c].tocsr()
    if a.nnz == 0:
        raise InputError("retweet matrix is empty after filtering")
    info = dict(meta or {})
    info.update(dropped_users=int(len(rows) - keep_r.size), dropped_influencers=dropped_c)
    return RetweetMatrix(tuple(rows[i] for i in keep_r), tuple(cols[j] for j in keep_c), a, min_distinct, info)


def build_retweet_matrix(records: Iterable[TweetRecord], influencer_set: Iterable[str], min_distinct: int = 3,
                         official: ClientClassifier | None = None,
                         kinds: Iterable[str] = ("retweet",)) -> RetweetMatrix:
    """Count every retweet (URL or not) from users to the given influencers.

    ``official`` restricts counting to official clients; users retweeting
    fewer than ``min_distinct`` different influencers are dropped.
    """
    infl = sorted(set(influencer_set))
    if not infl:
        raise InputError("influencer set is empty")
    if min_distinct < 1:
        raise InputError("min_distinct must be >= 1")
    kinds = frozenset(kinds)
    col = {u: j for j, u in enumerate(infl)}
    row: dict[str, int] = {}
    ri, ci = [], []
    for r in records:
        if r.kind not in kinds:
            continue
        j = col.get(r.source_user_id)
        if j is None or r.source_user_id == r.user_id:
            continue
        if official is not None and not official.is_official(r.client):
            continue
        ri.append(row.setdefault(r.user_id, len(row)))
        ci.append(j)
    users = list(row)
    a = sp.coo_matrix((np.ones(len(ri)), (ri, ci)), shape=(len(users), len(infl))).tocsr()
    a.sum_duplicates()
    order = np.argsort(np.array(users, dtype=object), kind="stable") if users else np.array([], dtype=int)
    a = a[order]
    return matrix_from_counts(a, [users[i] for i in order], infl, min_distinct,
                              {"official_only": official is not None, "kinds": sorted(kinds)})


class ResidualOperator:
    """S = D_r^{-1/2} (P - r c^T) D_c^{-1/2} kept implicit (P stays sparse)."""

    def __init__(self, mat: RetweetMatrix):
        total = mat.total
        if not total > 0:
            raise NumericalError("retweet matrix has zero total")
        self.P = (mat.counts / total).tocsr()
        self.r = np.asarray(self.P.sum(axis=1)).ravel()
        self.c = np.asarray(self.P.sum(axis=0)).ravel()
        if (self.r <= 0).any() or (self.c <= 0).any():
            raise NumericalError("zero row or column in retweet matrix")
        self.rs = 1.0 / np.sqrt(self.r)
        self.cs = 1.0 / np.sqrt(self.c)
        self.shape = self.P.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.cs * x if x.ndim == 1 else self.cs[:, None] * x
        out = self.P @ y - np.outer(self.r, self.c @ y).reshape(self.shape[0], *x.shape[1:])
        return self.rs * out if x.ndim == 1 else self.rs[:, None] * out

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        y = self.rs * x if x.ndim == 1 else self.rs[:, None] * x
        out = self.P.T @ y - np.outer(self.c, self.r @ y).reshape(self.shape[1], *x.shape[1:])
        return self.cs * out if x.ndim == 1 else self.cs[:, None] * out

    def toarray(self) -> np.ndarray:
        dense = self.P.toarray() - np.outer(self.r, self.c)
        return self.rs[:, None] * dense * self.cs[None, :]

    def total_inertia(self) -> float:
        """Squared Frobenius norm, sum P^2/(r c) - 1, computed sparsely."""
        coo = self.P.tocoo()
        return float((coo.data ** 2 / (self.r[coo.row] * self.c[coo.col])).sum() - 1.0)


def standardized_residuals(mat: RetweetMatrix) -> ResidualOperator:
    return ResidualOperator(mat)


def _as_operator(S):
    if isinstance(S, ResidualOperator):
        return S, np.sqrt(max(S.total_inertia(), 0.0))
    S = np.asarray(S, dtype=float)

    class _Dense:
        shape = S.shape
        matvec = staticmethod(lambda x: S @ x)
        rmatvec = staticmethod(lambda x: S.T @ x)
        toarray = staticmethod(lambda: S)

    return _Dense, float(np.linalg.norm(S))


def leading_axis(S, method: str = "auto", tol: float = 1e-10, max_iter: int = 10_000,
                 seed: int = 0, block: int = 4) -> tuple[np.ndarray, float, np.ndarray]:
    """Leading singular triplet ``(u1, sigma1, v1)`` of ``S``.

    ``method="iterative"`` runs seeded block subspace iteration with a
    Rayleigh-Ritz step; ``"dense"`` calls LAPACK; ``"auto"`` picks dense
    below ``DENSE_LIMIT`` entries.
    """
    op, norm = _as_operator(S)
    n, m = op.shape
    if norm == 0:
        raise NumericalError("residual matrix is zero; no leading axis")
    if method == "auto":
        method = "dense" if n * m < DENSE_LIMIT else "iterative"
    if method == "dense":
        u, s, vt = np.linalg.svd(op.toarray(), full_matrices=False)
        return u[:, 0], float(s[0]), vt[0]
    if method != "iterative":
        raise InputError(f"unknown method {method!r}")

    b = max(1, min(block, m, n))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((m, b)))
    res = np.inf
    for it in range(1, max_iter + 1):
        y = op.matvec(q)
        uu, s, wt = np.linalg.svd(y, full_matrices=False)
        v1 = q @ wt[0]
        sigma = float(s[0])
        u1 = uu[:, 0]
        res = float(np.linalg.norm(op.rmatvec(u1) - sigma * v1))
        if res < tol * norm:
            return u1, sigma, v1
        q, _ = np.linalg.qr(op.rmatvec(y))
    raise ConvergenceError(f"subspace iteration stalled after {max_iter} iterations "
                           f"(residual {res:.3g}, tolerance {tol * norm:.3g})",
                           last_iterate=u1, iterations=max_iter)


def _standardise(x: np.ndarray) -> np.ndarray:
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    if not sd > 0:
        raise NumericalError("user coordinates have zero spread")
    return (x - x.mean()) / sd


def user_positions(mat: RetweetMatrix, u1: np.ndarray, leaning: Mapping[str, float] | None = None
                   ) -> tuple[np.ndarray, float | None]:
    """Standard row coordinates on the first axis, standardised (sample sd).

    The sign is chosen so positions correlate non-negatively with
    ``leaning`` (right positive). Without a leaning reference, the
    retweeters of the first influencer column are put on the positive side.
    Returns ``(positions, orientation_correlation)``.
    """
    r = np.asarray(mat.counts.sum(axis=1)).ravel() / mat.total
    x = _standardise(np.asarray(u1) / np.sqrt(r))
    corr = None
    if leaning:
        idx = [i for i, u in enumerate(mat.rows) if leaning.get(u) is not None]
        if len(idx) >= 2:
            ref = np.array([leaning[mat.rows[i]] for i in idx], dtype=float)
            xs = x[idx]
            if ref.std() > 0 and xs.std() > 0:
                corr = float(np.corrcoef(xs, ref)[0, 1])
    if corr is not None:
        if corr < 0:
            x, corr = -x, -corr
    else:
        # gauge: the audience of the first influencer (by id) with a
        # non-zero mean retweeter position sits on the positive side
        csc = mat.counts.tocsc()
        for j in range(csc.shape[1]):
            lo, hi = csc.indptr[j], csc.indptr[j + 1]
            m = csc.data[lo:hi] @ x[csc.indices[lo:hi]]
            if m != 0:
                if m < 0:
                    x = -x
                break
    return x, corr


def weighted_lower_median(values: np.ndarray, weights: np.ndarray) -> float:
    o = np.argsort(values, kind="stable")
    v, w = values[o], weights[o]
    cw = np.cumsum(w)
    half = cw[-1] / 2.0
    k = int(np.searchsorted(cw, half - 1e-12 * cw[-1], side="left"))
    return float(v[min(k, v.size - 1)])


def influencer_positions(mat: RetweetMatrix, positions: np.ndarray, weighted: bool = True
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Median retweeter position per influencer (weights = retweet counts).

    Returns ``(positions, n_retweeters)`` aligned with ``mat.cols``.
    """
    csc = mat.counts.tocsc()
    out = np.empty(csc.shape[1])
    nret = np.diff(csc.indptr)
    for j in range(csc.shape[1]):
        lo, hi = csc.indptr[j], csc.indptr[j + 1]
        if hi == lo:
            raise NumericalError(f"influencer {mat.cols[j]} has no retweeters")
        rows = csc.indices[lo:hi]
        w = csc.data[lo:hi] if weighted else np.ones(hi - lo)
        out[j] = weighted_lower_median(positions[rows], w)
    return out, nret


def average_leaning(user_links: Mapping[MediaCategory, int], min_tweets: int = 3) -> float | None:
    """Count-weighted mean category position; None below ``min_tweets`` links."""
    if min_tweets < 1:
        raise InputError("min_tweets must be >= 1")
    total = sum(int(v) for v in user_links.values())
    if total < min_tweets:
        return None
    acc = sum((int(v) * category_position(c) for c, v in user_links.items()), Fraction(0))
    return float(acc / total)


def robustness_variant(mat: RetweetMatrix, variant: str, fraction: float = 0.5, seed: int = 0) -> RetweetMatrix:
    """Re-weighted copies of the matrix for sensitivity checks.

    ``drop_ones``: zero every entry equal to 1, then re-filter.
    ``log_weights``: replace a by ln(1 + a).
    ``subsample``: keep each retweet event independently with probability
    ``fraction`` (seeded), then re-filter.
    """
    a = mat.counts.copy()
    if variant == "drop_ones":
        a.data[a.data == 1] = 0
    elif variant == "log_weights":
        a.data = np.log1p(a.data)
    elif variant == "subsample":
        if not 0 < fraction <= 1:
            raise InputError("subsample fraction must lie in (0, 1]")
        if np.any(a.data != np.round(a.data)):
            raise InputError("subsample needs integer counts")
        rng = np.random.default_rng(seed)
        a.data = rng.binomial(a.data.astype(np.int64), fraction).astype(float)
    else:
        raise InputError(f"unknown variant {variant!r}")
    a.eliminate_zeros()
    if a.nnz == 0:
        raise InputError(f"variant {variant} leaves the matrix empty")
    md = 1 if variant == "log_weights" else mat.min_distinct
    out = matrix_from_counts(a, mat.rows, mat.cols, md, {**mat.meta, "variant": variant})
    return replace(out, min_distinct=mat.min_distinct)


@dataclass(frozen=True, eq=False)
class IdeologyScale:
    user_ids: tuple[str, ...]
    user_positions: np.ndarray
    influencer_ids: tuple[str, ...]
    influencer_positions: np.ndarray
    n_retweeters: np.ndarray
    singular_value: float
    orientation_corr: float | None
    meta: dict = field(default_factory=dict)

    def users(self) -> dict[str, float]:
        return dict(zip(self.user_ids, self.user_positions.tolist()))

    def influencers(self) -> dict[str, float]:
        return dict(zip(self.influencer_ids, self.influencer_positions.tolist()))


def estimate_ideology(mat: RetweetMatrix, leaning: Mapping[str, float] | None = None, method: str = "auto",
                      weighted_median: bool = True, seed: int = 0) -> IdeologyScale:
    S = standardized_residuals(mat)
    u1, sigma, _ = leading_axis(S, method=method, seed=seed)
    pos, corr = user_positions(mat, u1, leaning)
    ipos, nret = influencer_positions(mat, pos, weighted=weighted_median)
    meta = {
        "n_users": len(mat.rows),
        "n_influencers": len(mat.cols),
        "total": mat.total,
        "min_distinct": mat.min_distinct,
        "total_inertia": S.total_inertia(),
        "weighted_median": weighted_median,
        **{k: v for k, v in mat.meta.items() if k != "dropped_influencers"},
    }
    return IdeologyScale(mat.rows, pos, mat.cols, ipos, nret, sigma, corr, meta)


def write_positions(scale: IdeologyScale, user_path: str | Path, influencer_path: str | Path) -> None:
    with Path(user_path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["user_id", "position"])
        for u, x in zip(scale.user_ids, scale.user_positions):
            w.writerow([u, repr(float(x))])
    with Path(influencer_path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["influencer_id", "position", "n_retweeters"])
        for u, x, k in zip(scale.influencer_ids, scale.influencer_positions, scale.n_retweeters):
            w.writerow([u, repr(float(x)), int(k)])


def read_positions(path: str | Path) -> dict[str, float]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"missing positions artifact {path}")
    with path.open(encoding="utf-8") as fh:
        return {row[0]: float(row[1]) for i, row in enumerate(csv.reader(fh, delimiter="\t")) if i}
