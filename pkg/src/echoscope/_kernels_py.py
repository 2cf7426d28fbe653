"""Pure-Python versions of the hot kernels.

These mirror ``_kernels.pyx`` one-to-one and are used when the compiled
extension is unavailable (or when ``ECHOSCOPE_PURE_PYTHON`` is set).
"""
from __future__ import annotations

import heapq
import math

import numpy as np


def dip_sorted(x) -> float:
    """Hartigan dip of an ascending sample (greatest convex minorant /
    least concave majorant sweep). Returns a value >= 1/(2n)."""
    x = [float(v) for v in x]
    n = len(x)
    # work in units of 2n*D until the very end
    dip = 1.0
    if n < 2 or x[0] == x[n - 1]:
        return dip / (2 * n) if n else 0.0

    # mn[j]: predecessor of j on the convex minorant of points 0..j
    mn = [0] * n
    for j in range(1, n):
        mn[j] = j - 1
        while True:
            a = mn[j]
            b = mn[a]
            if a == 0 or (x[j] - x[a]) * (a - b) < (x[a] - x[b]) * (j - a):
                break
            mn[j] = b
    # mj[k]: successor of k on the concave majorant of points k..n-1
    mj = [0] * n
    mj[n - 1] = n - 1
    for k in range(n - 2, -1, -1):
        mj[k] = k + 1
        while True:
            a = mj[k]
            b = mj[a]
            if a == n - 1 or (x[k] - x[a]) * (a - b) < (x[a] - x[b]) * (k - a):
                break
            mj[k] = b

    gcm = [0] * (n + 1)
    lcm = [0] * (n + 1)
    low, high = 0, n - 1
    while True:
        gcm[0] = high
        i = 0
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = l_gcm = i
        ix = ig - 1

        lcm[0] = low
        i = 0
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = l_lcm = i
        iv = 1

        d = 0.0
        if l_gcm != 1 or l_lcm != 1:
            while True:
                gx = gcm[ix]
                lv = lcm[iv]
                if gx > lv:
                    gl = gcm[ix + 1]
                    den = x[gx] - x[gl]
                    dx = (lv - gl + 1) - (x[lv] - x[gl]) * (gx - gl) / den if den != 0.0 else -math.inf
                    iv += 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv - 1
                else:
                    ll = lcm[iv - 1]
                    den = x[lv] - x[ll]
                    dx = (x[gx] - x[ll]) * (lv - ll) / den - (gx - ll - 1) if den != 0.0 else -math.inf
                    ix -= 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv
                if ix < 0:
                    ix = 0
                if iv > l_lcm:
                    iv = l_lcm
                if gcm[ix] == lcm[iv]:
                    break
        if d < dip:
            break

        dip_l = 0.0
        for j in range(ig, l_gcm):
            max_t = 1.0
            jb = gcm[j + 1]
            je = gcm[j]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (jj - jb + 1) - (x[jj] - x[jb]) * c
                    if t > max_t:
                        max_t = t
            if max_t > dip_l:
                dip_l = max_t

        dip_u = 0.0
        for j in range(ih, l_lcm):
            max_t = 1.0
            jb = lcm[j]
            je = lcm[j + 1]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (x[jj] - x[jb]) * c - (jj - jb - 1)
                    if t > max_t:
                        max_t = t
            if max_t > dip_u:
                dip_u = max_t

        dip = max(dip, dip_l, dip_u)
        if low == gcm[ig] and high == lcm[ih]:
            break
        low = gcm[ig]
        high = lcm[ih]

    return dip / (2 * n)


def dip_jackknife_sorted(x) -> np.ndarray:
    """Leave-one-out dips of an ascending sample (entry i omits x[i])."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise ValueError("leave-one-out dip needs at least two observations")
    return np.array([dip_sorted(np.delete(x, i)) for i in range(x.size)])


def _ball_frontier_sum(i, radius, out_ptr, out_idx, alive, kout, stamp, tag):
    """Sum of max(kout-1, 0) over alive nodes at out-distance exactly ``radius`` from i."""
    stamp[i] = tag
    layer = [i]
    for _ in range(radius):
        nxt = []
        for u in layer:
            for p in range(out_ptr[u], out_ptr[u + 1]):
                v = out_idx[p]
                if alive[v] and stamp[v] != tag:
                    stamp[v] = tag
                    nxt.append(v)
        layer = nxt
        if not layer:
            return 0
    s = 0
    for v in layer:
        if kout[v] > 1:
            s += kout[v] - 1
    return s


def _upstream(r, depth, in_ptr, in_idx, alive, stamp, tag):
    stamp[r] = tag
    layer = [r]
    found = []
    for _ in range(depth):
        nxt = []
        for u in layer:
            for p in range(in_ptr[u], in_ptr[u + 1]):
                v = in_idx[p]
                if alive[v] and stamp[v] != tag:
                    stamp[v] = tag
                    nxt.append(v)
        found.extend(nxt)
        layer = nxt
        if not layer:
            break
    return found


def ci_adaptive(out_ptr, out_idx, in_ptr, in_idx, radius: int, top_k: int):
    """Adaptive directed Collective Influence removal.

    Returns ``(order, values)`` as int64 / float64 arrays of length
    ``min(top_k, n)``. Ties break by current out-degree (desc) then index (asc).
    """
    out_ptr = [int(v) for v in out_ptr]
    out_idx = [int(v) for v in out_idx]
    in_ptr = [int(v) for v in in_ptr]
    in_idx = [int(v) for v in in_idx]
    n = len(out_ptr) - 1
    top_k = min(top_k, n)
    alive = [True] * n
    kout = [out_ptr[i + 1] - out_ptr[i] for i in range(n)]
    stamp = [0] * n
    tag = 0

    ci = [0] * n
    version = [0] * n
    heap = []
    for i in range(n):
        if kout[i] > 1:
            tag += 1
            ci[i] = (kout[i] - 1) * _ball_frontier_sum(i, radius, out_ptr, out_idx, alive, kout, stamp, tag)
        heap.append((-ci[i], -kout[i], i, 0))
    heapq.heapify(heap)

    order: list[int] = []
    values: list[float] = []
    while len(order) < top_k and heap:
        neg_ci, neg_k, i, ver = heapq.heappop(heap)
        if not alive[i] or ver != version[i]:
            continue
        if neg_ci == 0:
            break
        order.append(i)
        values.append(float(-neg_ci))
        tag += 1
        affected = _upstream(i, radius + 1, in_ptr, in_idx, alive, stamp, tag)
        alive[i] = False
        for p in range(in_ptr[i], in_ptr[i + 1]):
            v = in_idx[p]
            if alive[v]:
                kout[v] -= 1
        for j in affected:
            if kout[j] > 1:
                tag += 1
                c = (kout[j] - 1) * _ball_frontier_sum(j, radius, out_ptr, out_idx, alive, kout, stamp, tag)
            else:
                c = 0
            ci[j] = c
            version[j] += 1
            heapq.heappush(heap, (-c, -kout[j], j, version[j]))

    if len(order) < top_k:
        rest = sorted((i for i in range(n) if alive[i]), key=lambda i: (-kout[i], i))
        for i in rest[: top_k - len(order)]:
            order.append(i)
            values.append(0.0)
    return np.asarray(order, dtype=np.int64), np.asarray(values, dtype=np.float64)
