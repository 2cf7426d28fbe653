# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: dip statistic and adaptive directed CI removal."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()


cdef double _dip(const double* x, Py_ssize_t n) noexcept nogil:
    cdef double dip = 1.0
    cdef double d, dx, den, c, t, max_t, dip_l, dip_u
    cdef Py_ssize_t i, j, k, a, b, jj, jb, je
    cdef Py_ssize_t low, high, ig, ih, ix, iv, l_gcm, l_lcm, gx, gl, lv, ll
    cdef Py_ssize_t* mn
    cdef Py_ssize_t* mj
    cdef Py_ssize_t* gcm
    cdef Py_ssize_t* lcm
    if n < 2 or x[0] == x[n - 1]:
        return dip / (2.0 * n)

    mn = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    mj = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    gcm = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
    lcm = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))

    mn[0] = 0
    for j in range(1, n):
        mn[j] = j - 1
        while True:
            a = mn[j]
            b = mn[a]
            if a == 0 or (x[j] - x[a]) * (a - b) < (x[a] - x[b]) * (j - a):
                break
            mn[j] = b
    mj[n - 1] = n - 1
    for k in range(n - 2, -1, -1):
        mj[k] = k + 1
        while True:
            a = mj[k]
            b = mj[a]
            if a == n - 1 or (x[k] - x[a]) * (a - b) < (x[a] - x[b]) * (k - a):
                break
            mj[k] = b

    low = 0
    high = n - 1
    while True:
        gcm[0] = high
        i = 0
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = i
        l_gcm = i
        ix = ig - 1

        lcm[0] = low
        i = 0
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = i
        l_lcm = i
        iv = 1

        d = 0.0
        if l_gcm != 1 or l_lcm != 1:
            while True:
                gx = gcm[ix]
                lv = lcm[iv]
                if gx > lv:
                    gl = gcm[ix + 1]
                    den = x[gx] - x[gl]
                    iv += 1
                    if den != 0.0:
                        dx = (lv - gl + 1) - (x[lv] - x[gl]) * (gx - gl) / den
                        if dx >= d:
                            d = dx
                            ig = ix + 1
                            ih = iv - 1
                else:
                    ll = lcm[iv - 1]
                    den = x[lv] - x[ll]
                    ix -= 1
                    if den != 0.0:
                        dx = (x[gx] - x[ll]) * (lv - ll) / den - (gx - ll - 1)
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

        if dip_l > dip:
            dip = dip_l
        if dip_u > dip:
            dip = dip_u
        if low == gcm[ig] and high == lcm[ih]:
            break
        low = gcm[ig]
        high = lcm[ih]

    free(mn)
    free(mj)
    free(gcm)
    free(lcm)
    return dip / (2.0 * n)


def dip_sorted(x):
    """Hartigan dip of an ascending sample; >= 1/(2n)."""
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef double out
    if n == 0:
        return 0.0
    with nogil:
        out = _dip(&xv[0], n)
    return out


def dip_jackknife_sorted(x):
    """Leave-one-out dips of an ascending sample (entry i omits x[i])."""
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if n < 2:
        raise ValueError("leave-one-out dip needs at least two observations")
    cdef double* buf = <double*> malloc((n - 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    with nogil:
        memcpy(buf, &xv[1], (n - 1) * sizeof(double))
        for i in range(n):
            # buf holds x without x[i]; shift one element to drop x[i+1] next
            out[i] = _dip(buf, n - 1)
            if i + 1 < n:
                buf[i] = xv[i]
    free(buf)
    return out_arr


cdef double _frontier_sum(Py_ssize_t i, int radius,
                          const cnp.int64_t[::1] out_ptr, const cnp.int64_t[::1] out_idx,
                          const signed char* alive, const cnp.int64_t* kout,
                          cnp.int64_t* stamp, cnp.int64_t tag,
                          Py_ssize_t* buf_a, Py_ssize_t* buf_b) noexcept nogil:
    cdef Py_ssize_t na = 1, nb, d, q, u, v
    cdef cnp.int64_t p
    cdef Py_ssize_t* cur = buf_a
    cdef Py_ssize_t* nxt = buf_b
    cdef Py_ssize_t* tmp
    cdef double s = 0.0
    stamp[i] = tag
    cur[0] = i
    for d in range(radius):
        nb = 0
        for q in range(na):
            u = cur[q]
            for p in range(out_ptr[u], out_ptr[u + 1]):
                v = out_idx[p]
                if alive[v] and stamp[v] != tag:
                    stamp[v] = tag
                    nxt[nb] = v
                    nb += 1
        tmp = cur
        cur = nxt
        nxt = tmp
        na = nb
        if na == 0:
            return 0.0
    for q in range(na):
        v = cur[q]
        if kout[v] > 1:
            s += kout[v] - 1
    return s


def ci_adaptive(out_ptr, out_idx, in_ptr, in_idx, int radius, Py_ssize_t top_k):
    """Adaptive directed Collective Influence removal (linear argmax scan).

    Returns ``(order, values)``; ties break by out-degree desc then index asc.
    """
    cdef const cnp.int64_t[::1] optr = np.ascontiguousarray(out_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] oidx = np.ascontiguousarray(out_idx, dtype=np.int64)
    cdef const cnp.int64_t[::1] iptr = np.ascontiguousarray(in_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] iidx = np.ascontiguousarray(in_idx, dtype=np.int64)
    cdef Py_ssize_t n = optr.shape[0] - 1
    if top_k > n:
        top_k = n
    order_arr = np.empty(top_k, dtype=np.int64)
    values_arr = np.zeros(top_k, dtype=np.float64)
    cdef cnp.int64_t[::1] order = order_arr
    cdef double[::1] values = values_arr
    if n <= 0 or top_k <= 0:
        return order_arr, values_arr

    kout_arr = np.diff(np.asarray(optr)).astype(np.int64)
    cdef cnp.int64_t[::1] kout = kout_arr
    alive_arr = np.ones(n, dtype=np.int8)
    cdef signed char[::1] alive = alive_arr
    cdef cnp.int64_t[::1] stamp = np.zeros(n, dtype=np.int64)
    cdef double[::1] ci = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t* buf_a = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t* buf_b = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t* aff = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
    cdef cnp.int64_t tag = 0
    cdef Py_ssize_t i, j, best, count = 0, naff, start, end, q, u, v, d, layer_start
    cdef cnp.int64_t p
    cdef double bc

    with nogil:
        for i in range(n):
            if kout[i] > 1:
                tag += 1
                ci[i] = (kout[i] - 1) * _frontier_sum(i, radius, optr, oidx, &alive[0], &kout[0],
                                                      &stamp[0], tag, buf_a, buf_b)
        while count < top_k:
            best = -1
            bc = 0.0
            for i in range(n):
                if not alive[i]:
                    continue
                if best < 0 or ci[i] > bc or (ci[i] == bc and kout[i] > kout[best]):
                    best = i
                    bc = ci[i]
            if best < 0 or bc <= 0.0:
                break
            order[count] = best
            values[count] = bc
            count += 1

            # upstream nodes within radius + 1, collected before removal
            tag += 1
            stamp[best] = tag
            naff = 0
            start = 0
            aff[0] = best
            end = 1
            for d in range(radius + 1):
                layer_start = end
                for q in range(start, end):
                    u = aff[q]
                    for p in range(iptr[u], iptr[u + 1]):
                        v = iidx[p]
                        if alive[v] and stamp[v] != tag:
                            stamp[v] = tag
                            aff[end] = v
                            end += 1
                start = layer_start
                if start == end:
                    break
            alive[best] = 0
            for p in range(iptr[best], iptr[best + 1]):
                v = iidx[p]
                if alive[v]:
                    kout[v] -= 1
            for q in range(1, end):
                j = aff[q]
                if kout[j] > 1:
                    tag += 1
                    ci[j] = (kout[j] - 1) * _frontier_sum(j, radius, optr, oidx, &alive[0], &kout[0],
                                                          &stamp[0], tag, buf_a, buf_b)
                else:
                    ci[j] = 0.0

    free(buf_a)
    free(buf_b)
    free(aff)

    if count < top_k:
        alive_np = np.asarray(alive_arr).astype(bool)
        rest = np.flatnonzero(alive_np)
        keys = np.lexsort((rest, -np.asarray(kout_arr)[rest]))
        fill = rest[keys][: top_k - count]
        order_arr[count:count + fill.shape[0]] = fill
    return order_arr, values_arr
