"""Compiled kernels for Bowen-metric packing and covering on point clouds.

Orbit tables are float64 arrays ``orb[a, i, j] = (f^i p_a)_j`` of shape
``(R, n_max, m)``.  Range queries in the Bowen metric ``d_n`` go through a
KD-tree on the concatenated coordinates of the first ``n`` iterates, with
per-coordinate wraparound on circle factors; a node is pruned when some
time slice's box distance already exceeds the radius.

Row order of ``orb`` is the tie-break order everywhere.  Distances within
``TIE`` of the radius count as equal to it: dyadic lattices produce exact
ties, and rounding in the orbits must not decide them.
"""
import numpy as np
from numba import njit

TIE = 1e-12


@njit(cache=True, nogil=True)
def _wrapdist(d):
    d = d - np.floor(d)
    if 1.0 - d < d:
        return 1.0 - d
    return d


@njit(cache=True, nogil=True)
def bowen_dist(orb, a, b, n, wraps, limit):
    """max_{i<n} d(f^i p_a, f^i p_b); returns early once it exceeds ``limit``.

    The last iterate is checked first since it separates fastest for
    expanding directions.
    """
    m = orb.shape[2]
    lim2 = limit * limit
    best = 0.0
    for ii in range(n):
        i = n - 1 - ii
        s = 0.0
        for j in range(m):
            d = abs(orb[a, i, j] - orb[b, i, j])
            if wraps[j]:
                d = _wrapdist(d)
            s += d * d
        if s > best:
            best = s
            if best > lim2:
                return np.sqrt(best)
    return np.sqrt(best)


@njit(cache=True, nogil=True)
def build_tree(orb, n, leafsize):
    """KD-tree over the first ``n`` iterates.

    Returns ``(perm, start, end, left, right, bmin, bmax)``; leaves have
    ``left == -1`` and own ``perm[start:end]``.
    """
    R = orb.shape[0]
    m = orb.shape[2]
    D = n * m
    X = np.empty((R, D))
    for a in range(R):
        for i in range(n):
            for j in range(m):
                X[a, i * m + j] = orb[a, i, j]
    cap = 4 * (R // leafsize + 2)
    start = np.empty(cap, dtype=np.int64)
    end = np.empty(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    bmin = np.empty((cap, D))
    bmax = np.empty((cap, D))
    perm = np.arange(R)
    stack = np.empty(cap, dtype=np.int64)
    sp = 0
    count = 1
    start[0], end[0] = 0, R
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        s, e = start[node], end[node]
        for d in range(D):
            lo = np.inf
            hi = -np.inf
            for k in range(s, e):
                v = X[perm[k], d]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            bmin[node, d] = lo
            bmax[node, d] = hi
        if e - s <= leafsize:
            continue
        best_d = 0
        best_w = -1.0
        for d in range(D):
            w = bmax[node, d] - bmin[node, d]
            if w > best_w:
                best_w = w
                best_d = d
        if best_w <= 0.0:
            continue
        sub = perm[s:e].copy()
        vals = np.empty(e - s)
        for k in range(e - s):
            vals[k] = X[sub[k], best_d]
        order = np.argsort(vals, kind="mergesort")
        for k in range(e - s):
            perm[s + k] = sub[order[k]]
        mid = (s + e) // 2
        lc, rc = count, count + 1
        count += 2
        start[lc], end[lc] = s, mid
        start[rc], end[rc] = mid, e
        left[node], right[node] = lc, rc
        stack[sp] = lc
        stack[sp + 1] = rc
        sp += 2
    return perm, start[:count], end[:count], left[:count], right[:count], bmin[:count], bmax[:count]


@njit(cache=True, nogil=True)
def _box_far(orb, a, n, wraps, bmin, bmax, node, r2):
    m = orb.shape[2]
    for i in range(n):
        s = 0.0
        for j in range(m):
            q = orb[a, i, j]
            lo = bmin[node, i * m + j]
            hi = bmax[node, i * m + j]
            if q < lo:
                d = lo - q
                if wraps[j]:
                    d = min(_wrapdist(d), _wrapdist(hi - q))
            elif q > hi:
                d = q - hi
                if wraps[j]:
                    d = min(_wrapdist(d), _wrapdist(q - lo))
            else:
                d = 0.0
            s += d * d
        if s > r2:
            return True
    return False


@njit(cache=True, nogil=True)
def first_fit(orb, n, eps, wraps, tree):
    """Greedy in row order: a maximal (n, eps)-separated set, hence also spanning.

    Returns the selected rows.
    """
    perm, start, end, left, right, bmin, bmax = tree
    R = orb.shape[0]
    covered = np.zeros(R, dtype=np.bool_)
    centers = np.empty(R, dtype=np.int64)
    stack = np.empty(left.shape[0], dtype=np.int64)
    r2 = (eps + TIE) ** 2
    k = 0
    for a in range(R):
        if covered[a]:
            continue
        centers[k] = a
        k += 1
        covered[a] = True
        sp = 0
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_far(orb, a, n, wraps, bmin, bmax, node, r2):
                continue
            if left[node] >= 0:
                stack[sp] = left[node]
                stack[sp + 1] = right[node]
                sp += 2
                continue
            for t in range(start[node], end[node]):
                q = perm[t]
                if covered[q]:
                    continue
                if bowen_dist(orb, a, q, n, wraps, eps + TIE) <= eps + TIE:
                    covered[q] = True
    return centers[:k]


@njit(cache=True, nogil=True)
def _tree_update(val, idx, P, i, v):
    node = P + i
    val[node] = v
    node //= 2
    while node >= 1:
        l, r = 2 * node, 2 * node + 1
        if val[l] >= val[r]:
            val[node], idx[node] = val[l], idx[l]
        else:
            val[node], idx[node] = val[r], idx[r]
        node //= 2


@njit(cache=True, nogil=True)
def capped_farthest(orb, n, eps, wraps, tree, cap):
    """Farthest-point cover with distances resolved up to ``cap``.

    Bowen distances above ``cap`` count as infinite, so such points tie and
    are taken in row order; among resolved distances the farthest point goes
    next.  ``cap = inf`` gives the plain farthest-point order at O(N k) cost.
    Stops once every point is within ``eps`` of a center.  The centers are
    pairwise more than ``eps`` apart.
    """
    perm, start, end, left, right, bmin, bmax = tree
    R = orb.shape[0]
    cap = cap + TIE
    r2 = cap * cap
    P = 1
    while P < R:
        P *= 2
    val = np.full(2 * P, -1.0)
    idx = np.zeros(2 * P, dtype=np.int64)
    mind = np.full(R, np.inf)
    for i in range(P):
        idx[P + i] = i
        if i < R:
            val[P + i] = np.inf
    for node in range(P - 1, 0, -1):
        l, r = 2 * node, 2 * node + 1
        if val[l] >= val[r]:
            val[node], idx[node] = val[l], idx[l]
        else:
            val[node], idx[node] = val[r], idx[r]
    centers = np.empty(R, dtype=np.int64)
    stack = np.empty(left.shape[0], dtype=np.int64)
    k = 0
    while val[1] > eps + TIE:
        a = idx[1]
        centers[k] = a
        k += 1
        mind[a] = 0.0
        _tree_update(val, idx, P, a, 0.0)
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_far(orb, a, n, wraps, bmin, bmax, node, r2):
                continue
            if left[node] >= 0:
                stack[sp] = left[node]
                stack[sp + 1] = right[node]
                sp += 2
                continue
            for t in range(start[node], end[node]):
                q = perm[t]
                cur = mind[q]
                if cur == 0.0:
                    continue
                lim = cap if cur > cap else cur
                d = bowen_dist(orb, a, q, n, wraps, lim)
                if d <= cap and d < cur:
                    mind[q] = d
                    _tree_update(val, idx, P, q, d)
    return centers[:k]


@njit(cache=True, nogil=True)
def ball_mask(orb_x, orb, n, eps, wraps):
    """Rows of ``orb`` whose first ``n`` iterates stay strictly within ``eps`` of ``orb_x``."""
    R = orb.shape[0]
    m = orb.shape[2]
    out = np.zeros(R, dtype=np.bool_)
    e2 = (eps - TIE) ** 2
    for a in range(R):
        inside = True
        for i in range(n):
            s = 0.0
            for j in range(m):
                d = abs(orb[a, i, j] - orb_x[i, j])
                if wraps[j]:
                    d = _wrapdist(d)
                s += d * d
            if not s < e2:
                inside = False
                break
        out[a] = inside
    return out


@njit(cache=True, nogil=True)
def exit_times(orb_x, orb, eps, wraps):
    """First index ``i`` with ``d(f^i p, f^i x) >= eps`` for each row, or ``n`` if none."""
    R = orb.shape[0]
    n = orb.shape[1]
    m = orb.shape[2]
    out = np.full(R, n, dtype=np.int64)
    e2 = (eps - TIE) ** 2
    for a in range(R):
        for i in range(n):
            s = 0.0
            for j in range(m):
                d = abs(orb[a, i, j] - orb_x[i, j])
                if wraps[j]:
                    d = _wrapdist(d)
                s += d * d
            if not s < e2:
                out[a] = i
                break
    return out
