"""Independent reference implementations used only by the test-suite."""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np
from scipy.optimize import linprog


def dip_lp(x) -> float:
    """Exact dip of a sample with distinct values via linear programming.

    Minimises the sup-distance between the empirical CDF and a unimodal CDF
    that is piecewise linear between sample points. Every unimodal shape is
    enumerated: a peak chord (no atom) or an atom at one sample point.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    best = np.inf
    dx = np.diff(x)

    def solve(k=None, atom=None):
        # variables: g_0..g_{n-1}, h (left limit at atom), d
        nv = n + 2
        H, D = n, n + 1
        A, b = [], []

        def le(coefs, rhs):
            row = np.zeros(nv)
            for j, c in coefs:
                row[j] += c
            A.append(row)
            b.append(rhs)

        def left_val(i):
            return H if atom == i else i

        for i in range(n):
            lo_idx = left_val(i)
            # |G(x_i-) - i/n| <= d and |G(x_i) - (i+1)/n| <= d
            le([(lo_idx, 1), (D, -1)], i / n)
            le([(lo_idx, -1), (D, -1)], -i / n)
            le([(i, 1), (D, -1)], (i + 1) / n)
            le([(i, -1), (D, -1)], -(i + 1) / n)
        if atom is None:
            le([(H, 1)], 0.0)
            le([(H, -1)], 0.0)
        else:
            le([(H, 1), (atom, -1)], 0.0)

        def slope(t):
            end = left_val(t + 1)
            return [(end, 1 / dx[t]), (t, -1 / dx[t])]

        for t in range(n - 1):
            le([(j, -c) for j, c in slope(t)], 0.0)  # monotone
        if atom is None:
            for t in range(n - 2):
                s0, s1 = slope(t), slope(t + 1)
                if t + 1 <= k:  # s_t <= s_{t+1}
                    le(s0 + [(j, -c) for j, c in s1], 0.0)
                else:  # s_t >= s_{t+1}
                    le(s1 + [(j, -c) for j, c in s0], 0.0)
        else:
            for t in range(atom - 1):
                s0, s1 = slope(t), slope(t + 1)
                le(s0 + [(j, -c) for j, c in s1], 0.0)
            for t in range(atom, n - 2):
                s0, s1 = slope(t), slope(t + 1)
                le(s1 + [(j, -c) for j, c in s0], 0.0)
        bounds = [(0, 1)] * n + [(0, 1), (0, 1)]
        c = np.zeros(nv)
        c[D] = 1
        res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
        return res.fun if res.status == 0 else np.inf

    for k in range(max(n - 1, 1)):
        best = min(best, solve(k=k))
    for m in range(n):
        best = min(best, solve(atom=m))
    return float(best)


def ci_bruteforce(n: int, edges, radius: int, top_k: int | None = None):
    """Adaptive CI_out removal recomputing every score from scratch each step."""
    edges = set(edges)
    alive = set(range(n))
    top_k = n if top_k is None else min(top_k, n)

    def succ(u):
        return [v for (a, v) in edges if a == u and v in alive]

    def kout(u):
        return len(succ(u))

    def score(i):
        dist = {i: 0}
        q = deque([i])
        while q:
            u = q.popleft()
            if dist[u] == radius:
                continue
            for v in succ(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    q.append(v)
        frontier = [j for j, dd in dist.items() if dd == radius]
        return max(kout(i) - 1, 0) * sum(max(kout(j) - 1, 0) for j in frontier)

    order, values = [], []
    while len(order) < top_k:
        scored = sorted(alive, key=lambda i: (-score(i), -kout(i), i))
        if not scored or score(scored[0]) == 0:
            break
        i = scored[0]
        order.append(i)
        values.append(float(score(i)))
        alive.discard(i)
    rest = sorted(alive, key=lambda i: (-kout(i), i))
    for i in rest[: top_k - len(order)]:
        order.append(i)
        values.append(0.0)
    return order, values


def random_digraph(rng, n_max=6):
    n = int(rng.integers(1, n_max + 1))
    p = rng.uniform(0.1, 0.8)
    edges = [(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < p]
    return n, edges


def rbo_series(a, b, p: float, k: int) -> float:
    """Extrapolated RBO evaluated term by term from explicit prefix sets."""
    total = 0.0
    for d in range(1, k + 1):
        agree = len(set(a[:d]) & set(b[:d])) / d
        total += (1 - p) * p ** (d - 1) * agree
    return total + len(set(a[:k]) & set(b[:k])) / k * p ** k


def best_modularity_partition(w: np.ndarray):
    """Exhaustive search over all set partitions (small n only)."""
    n = w.shape[0]
    deg = w.sum(1)
    two_m = w.sum()

    def q(labels):
        same = labels[:, None] == labels[None, :]
        return ((w - np.outer(deg, deg) / two_m) * same).sum() / two_m

    def partitions(seq):
        if not seq:
            yield []
            return
        first, rest = seq[0], seq[1:]
        for part in partitions(rest):
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1:]
            yield [[first]] + part

    best, best_q = None, -np.inf
    for part in partitions(list(range(n))):
        labels = np.empty(n, dtype=int)
        for c, block in enumerate(part):
            labels[block] = c
        val = q(labels)
        if val > best_q + 1e-12:
            best, best_q = part, val
    return best, best_q


def spectral_bisection(w: np.ndarray) -> np.ndarray:
    """Balanced two-way split at the median of the modularity matrix's
    leading eigenvector. Always returns two groups, unlike Louvain."""
    k = w.sum(1)
    b = w - np.outer(k, k) / k.sum()
    v = np.linalg.eigh(b)[1][:, -1]
    return (v > np.median(v)).astype(int)
