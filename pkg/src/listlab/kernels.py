"""Hot loops.

Every kernel is written in the numba-compatible subset of python/numpy.
With numba present they are compiled with @njit; with LISTLAB_NO_NUMBA=1
they run as ordinary python, and the few kernels that vectorise cleanly
switch to a dedicated numpy implementation instead.
"""
import math

import numpy as np

from ._accel import HAS_NUMBA, njit

MEMBER_TOL = 1e-9


# --------------------------------------------------------------------------
# lattice enumeration (Fincke-Pohst depth first search)

@njit
def _enum_box(R, t, r2, cap):
    # all integer a with ||R (a - t)||^2 <= r2, R upper triangular
    n = R.shape[0]
    out = np.empty((cap, n), dtype=np.int64)
    a = np.zeros(n, dtype=np.int64)
    lo = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    ctr = np.zeros(n)
    part = np.zeros(n + 1)
    cnt = 0
    overflow = False

    k = n - 1
    ctr[k] = t[k]
    w = math.sqrt(r2) / abs(R[k, k])
    lo[k] = math.ceil(ctr[k] - w)
    hi[k] = math.floor(ctr[k] + w)
    a[k] = lo[k]
    while True:
        if a[k] > hi[k]:
            k += 1
            if k == n:
                break
            a[k] += 1
            continue
        d = (a[k] - ctr[k]) * R[k, k]
        part[k] = part[k + 1] + d * d
        if part[k] > r2:
            a[k] += 1
            continue
        if k == 0:
            if cnt >= cap:
                overflow = True
                break
            for i in range(n):
                out[cnt, i] = a[i]
            cnt += 1
            a[0] += 1
            continue
        k -= 1
        s = 0.0
        for j in range(k + 1, n):
            s += R[k, j] * (a[j] - t[j])
        ctr[k] = t[k] - s / R[k, k]
        rem = r2 - part[k + 1]
        w = math.sqrt(rem) / abs(R[k, k]) if rem > 0 else 0.0
        lo[k] = math.ceil(ctr[k] - w)
        hi[k] = math.floor(ctr[k] + w)
        a[k] = lo[k]
    return out[:cnt], overflow


def enum_box(R, t, r2, cap):
    R = np.ascontiguousarray(R, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    return _enum_box(R, t, float(r2), int(cap))


# --------------------------------------------------------------------------
# ball counting

@njit
def _count_within_nb(points, centers, r2):
    m, n = points.shape
    out = np.zeros(centers.shape[0], dtype=np.int64)
    for c in range(centers.shape[0]):
        k = 0
        for p in range(m):
            s = 0.0
            for i in range(n):
                d = points[p, i] - centers[c, i]
                s += d * d
                if s > r2:
                    break
            if s <= r2:
                k += 1
        out[c] = k
    return out


def _count_within_np(points, centers, r2, chunk=4096):
    out = np.empty(len(centers), dtype=np.int64)
    pn = np.einsum("ij,ij->i", points, points)
    for s in range(0, len(centers), chunk):
        c = centers[s:s + chunk]
        d2 = np.einsum("ij,ij->i", c, c)[:, None] + pn[None, :] - 2.0 * c @ points.T
        out[s:s + chunk] = np.count_nonzero(d2 <= r2, axis=1)
    return out


def count_within(points, centers, r2):
    """Number of points within squared distance r2 of each center."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(np.atleast_2d(centers), dtype=np.float64)
    if HAS_NUMBA:
        return _count_within_nb(points, centers, float(r2))
    return _count_within_np(points, centers, float(r2))


# --------------------------------------------------------------------------
# periodic copies inside a ball

@njit
def _wrapped_ball(points, alpha, center, r2, cap):
    m, n = points.shape
    idx = np.empty(cap, dtype=np.int64)
    shifts = np.empty((cap, n), dtype=np.int64)
    k = np.zeros(n, dtype=np.int64)
    lo = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    part = np.zeros(n + 1)
    cnt = 0
    overflow = False
    for p in range(m):
        i = 0
        diff = center[0] - points[p, 0]
        w = math.sqrt(r2)
        lo[0] = math.ceil((diff - w) / alpha)
        hi[0] = math.floor((diff + w) / alpha)
        k[0] = lo[0]
        while i >= 0:
            if k[i] > hi[i]:
                i -= 1
                if i >= 0:
                    k[i] += 1
                continue
            d = center[i] - points[p, i] - alpha * k[i]
            part[i + 1] = part[i] + d * d
            if part[i + 1] > r2:
                k[i] += 1
                continue
            if i == n - 1:
                if cnt >= cap:
                    overflow = True
                    return idx[:cnt], shifts[:cnt], overflow
                idx[cnt] = p
                for j in range(n):
                    shifts[cnt, j] = k[j]
                cnt += 1
                k[i] += 1
                continue
            i += 1
            diff = center[i] - points[p, i]
            rem = r2 - part[i]
            w = math.sqrt(rem) if rem > 0 else 0.0
            lo[i] = math.ceil((diff - w) / alpha)
            hi[i] = math.floor((diff + w) / alpha)
            k[i] = lo[i]
    return idx[:cnt], shifts[:cnt], overflow


def wrapped_ball(points, alpha, center, r2, cap=1_000_000):
    """(point index, integer shift) pairs with ||p + alpha*k - center||^2 <= r2."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    center = np.ascontiguousarray(center, dtype=np.float64)
    return _wrapped_ball(points, float(alpha), center, float(r2), int(cap))


# --------------------------------------------------------------------------
# ball counts for the diagonal-plus-last-row lattices

@njit
def _rogers_counts_nb(thetas, omega, center, r2, exclude_zero):
    S, m = thetas.shape
    scale = omega ** m
    r = math.sqrt(r2)
    counts = np.zeros(S, dtype=np.int64)
    if m == 0:
        return counts
    lo = np.empty(m, dtype=np.int64)
    hi = np.empty(m, dtype=np.int64)
    for i in range(m):
        lo[i] = math.ceil((center[i] - r) / omega)
        hi[i] = math.floor((center[i] + r) / omega)
        if lo[i] > hi[i]:
            return counts
    a = lo.copy()
    cn = center[m]
    while True:
        part = 0.0
        zero = True
        for i in range(m):
            d = omega * a[i] - center[i]
            part += d * d
            if a[i] != 0:
                zero = False
        if part <= r2:
            h = math.sqrt(r2 - part)
            up = scale * (cn + h)
            dn = scale * (cn - h)
            for s in range(S):
                ta = 0.0
                for i in range(m):
                    ta += thetas[s, i] * a[i]
                kl = math.ceil(dn - ta)
                kh = math.floor(up - ta)
                if kh >= kl:
                    counts[s] += kh - kl + 1
                    if exclude_zero and zero and kl <= 0 and kh >= 0:
                        counts[s] -= 1
        # odometer
        j = 0
        while j < m:
            a[j] += 1
            if a[j] <= hi[j]:
                break
            a[j] = lo[j]
            j += 1
        if j == m:
            break
    return counts


def _rogers_counts_np(thetas, omega, center, r2, exclude_zero, chunk=2048):
    S, m = thetas.shape
    counts = np.zeros(S, dtype=np.int64)
    if m == 0:
        return counts
    r = math.sqrt(r2)
    axes = [np.arange(math.ceil((center[i] - r) / omega),
                      math.floor((center[i] + r) / omega) + 1) for i in range(m)]
    if any(len(ax) == 0 for ax in axes):
        return counts
    A = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, m)
    part = ((omega * A - center[:m]) ** 2).sum(1)
    keep = part <= r2
    A, part = A[keep], part[keep]
    h = np.sqrt(r2 - part)
    scale = omega ** m
    up = scale * (center[m] + h)
    dn = scale * (center[m] - h)
    zero = ~A.any(1)
    for s in range(0, S, chunk):
        ta = thetas[s:s + chunk] @ A.T
        kl = np.ceil(dn[None, :] - ta)
        kh = np.floor(up[None, :] - ta)
        k = np.maximum(kh - kl + 1, 0)
        if exclude_zero and zero.any():
            hit = (kl <= 0) & (kh >= 0) & zero[None, :]
            k = k - hit
        counts[s:s + chunk] = k.sum(1).astype(np.int64)
    return counts


def rogers_counts(thetas, omega, center, r2, exclude_zero=True):
    """Lattice points in a ball for a batch of diagonal/last-row lattices.

    Lattice s has points (omega*a_1, ..., omega*a_m,
    omega^-m * (theta_s . a + a_n)) for integer a.
    """
    thetas = np.ascontiguousarray(np.atleast_2d(thetas), dtype=np.float64)
    center = np.ascontiguousarray(center, dtype=np.float64)
    if HAS_NUMBA:
        return _rogers_counts_nb(thetas, float(omega), center, float(r2), bool(exclude_zero))
    return _rogers_counts_np(thetas, float(omega), center, float(r2), bool(exclude_zero))


# --------------------------------------------------------------------------
# exact worst-case list size: clique search with circumcenters

@njit
def _circumcenter(P, T, s, c):
    # circumcenter of P[T[:s]] inside their affine hull; -1 if degenerate
    n = P.shape[1]
    t0 = T[0]
    for i in range(n):
        c[i] = P[t0, i]
    if s == 1:
        return 0.0
    m = s - 1
    A = np.empty((m, n))
    for a in range(m):
        for i in range(n):
            A[a, i] = P[T[a + 1], i] - P[t0, i]
    G = np.empty((m, m))
    b = np.empty(m)
    gmax = 0.0
    for a in range(m):
        for bb in range(m):
            s2 = 0.0
            for i in range(n):
                s2 += A[a, i] * A[bb, i]
            G[a, bb] = s2
        b[a] = 0.5 * G[a, a]
        if G[a, a] > gmax:
            gmax = G[a, a]
    # gaussian elimination with partial pivoting
    for col in range(m):
        piv = col
        for row in range(col + 1, m):
            if abs(G[row, col]) > abs(G[piv, col]):
                piv = row
        if abs(G[piv, col]) <= 1e-12 * gmax:
            return -1.0
        if piv != col:
            for j in range(m):
                tmp = G[col, j]
                G[col, j] = G[piv, j]
                G[piv, j] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for row in range(col + 1, m):
            f = G[row, col] / G[col, col]
            for j in range(col, m):
                G[row, j] -= f * G[col, j]
            b[row] -= f * b[col]
    lam = np.empty(m)
    for row in range(m - 1, -1, -1):
        s2 = b[row]
        for j in range(row + 1, m):
            s2 -= G[row, j] * lam[j]
        lam[row] = s2 / G[row, row]
    rho2 = 0.0
    for i in range(n):
        v = 0.0
        for a in range(m):
            v += A[a, i] * lam[a]
        c[i] += v
        rho2 += v * v
    return rho2


@njit
def _clique_search(P, r2, ptr, nbr, budget, best0):
    m, n = P.shape
    maxd = n + 1
    cnt = np.zeros(m, dtype=np.int64)
    T = np.zeros(maxd + 1, dtype=np.int64)
    pos = np.zeros(maxd + 2, dtype=np.int64)
    c = np.zeros(n)
    bestc = np.zeros(n)
    best = best0
    nodes = 0
    status = 0

    for root in range(m):
        deg = ptr[root + 1] - ptr[root]
        if deg + 1 <= best:
            continue
        # add root
        cnt[root] += 1
        for q in range(ptr[root], ptr[root + 1]):
            cnt[nbr[q]] += 1
        T[0] = root
        d = 1
        k = 1
        for q in range(ptr[root], ptr[root + 1]):
            j = nbr[q]
            dd = 0.0
            for i in range(n):
                x = P[j, i] - P[root, i]
                dd += x * x
            if dd <= r2:
                k += 1
        if k > best:
            best = k
            for i in range(n):
                bestc[i] = P[root, i]
        pos[1] = ptr[root]
        while d >= 1:
            last = T[d - 1]
            found = -1
            if d < maxd:
                while pos[d] < ptr[last + 1]:
                    j = nbr[pos[d]]
                    pos[d] += 1
                    if j > last and cnt[j] == d:
                        found = j
                        break
            if found < 0:
                x = T[d - 1]
                cnt[x] -= 1
                for q in range(ptr[x], ptr[x + 1]):
                    cnt[nbr[q]] -= 1
                d -= 1
                continue
            j = found
            T[d] = j
            d += 1
            cnt[j] += 1
            for q in range(ptr[j], ptr[j + 1]):
                cnt[nbr[q]] += 1
            nodes += 1
            if nodes > budget:
                status = 1
                return best, bestc, nodes, status
            common = 1 if cnt[j] == d else 0
            for q in range(ptr[j], ptr[j + 1]):
                if cnt[nbr[q]] == d:
                    common += 1
            prune = common <= best
            if not prune:
                rho2 = _circumcenter(P, T, d, c)
                if rho2 < 0.0 or rho2 > r2:
                    prune = True
                else:
                    k = 0
                    for jj in range(-1, ptr[j + 1] - ptr[j]):
                        y = j if jj < 0 else nbr[ptr[j] + jj]
                        if cnt[y] != d:
                            continue
                        dd = 0.0
                        for i in range(n):
                            x = P[y, i] - c[i]
                            dd += x * x
                        if dd <= r2:
                            k += 1
                    if k > best:
                        best = k
                        for i in range(n):
                            bestc[i] = c[i]
            if prune:
                cnt[j] -= 1
                for q in range(ptr[j], ptr[j + 1]):
                    cnt[nbr[q]] -= 1
                d -= 1
                continue
            pos[d] = ptr[j]
    return best, bestc, nodes, status


def clique_search(P, r2, ptr, nbr, budget, best0=0):
    """Largest count of points in a closed ball of squared radius r2.

    Searches all neighbor-graph cliques of size <= n+1 with circumradius
    within r2, counting at each circumcenter. Returns
    (best, center, nodes, status) with status 1 when `budget` ran out.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    return _clique_search(P, float(r2), np.ascontiguousarray(ptr, dtype=np.int64),
                          np.ascontiguousarray(nbr, dtype=np.int64),
                          int(budget), int(best0))


# --------------------------------------------------------------------------
# "is another periodic point strictly closer than the sent one"

@njit
def _closer_cells(P, alpha, g, K, starts, Y, lim2, skip):
    # P grouped by cell of its first K coordinates (g cells per axis)
    m, n = P.shape
    T = Y.shape[0]
    out = np.zeros(T, dtype=np.bool_)
    side = alpha / g
    half = 0.5 * alpha
    ncell = g ** K
    D = np.empty((K, g))
    for t in range(T):
        lim = lim2[t]
        # squared min-image distance from y_i to each cell interval
        for i in range(K):
            y = Y[t, i]
            for c in range(g):
                lo = c * side
                hi = lo + side
                if lo <= y <= hi:
                    d = 0.0
                else:
                    d1 = abs(y - lo)
                    d2 = abs(y - hi)
                    d1 = min(d1, alpha - d1)
                    d2 = min(d2, alpha - d2)
                    d = min(d1, d2)
                D[i, c] = d * d
        for cell in range(ncell):
            if starts[cell] == starts[cell + 1]:
                continue
            s0 = 0.0
            rest = cell
            for i in range(K):
                s0 += D[K - 1 - i, rest % g]
                rest //= g
            if s0 >= lim:
                continue
            for j in range(starts[cell], starts[cell + 1]):
                if j == skip[t]:
                    continue
                s = 0.0
                for i in range(n):
                    d = abs(P[j, i] - Y[t, i])
                    if d > half:
                        d = alpha - d
                    s += d * d
                    if s >= lim:
                        break
                if s < lim:
                    out[t] = True
                    break
            if out[t]:
                break
    return out


def cell_index(P, alpha, g, K):
    """Row-major cell id of the first K coordinates on a g-per-axis grid."""
    c = np.minimum((P[:, :K] / (alpha / g)).astype(np.int64), g - 1)
    ids = np.zeros(len(P), dtype=np.int64)
    for i in range(K):
        ids = ids * g + c[:, i]
    return ids


def _closer_kdtree(P, alpha, Y, lim2, skip):
    from scipy.spatial import cKDTree
    tree = cKDTree(P, boxsize=alpha)
    d, j = tree.query(Y, k=2)
    other = np.where(j[:, 0] == skip, d[:, 1], d[:, 0])
    return other * other < lim2


def closer_point_exists(P, alpha, Y, lim2, skip, g=8):
    """For each row of Y, is some point other than P[skip[t]] strictly
    inside squared min-image distance lim2[t]? Y must lie in [0, alpha)^n."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    lim2 = np.ascontiguousarray(lim2, dtype=np.float64)
    skip = np.ascontiguousarray(skip, dtype=np.int64)
    if not HAS_NUMBA:
        return _closer_kdtree(P, float(alpha), Y, lim2, skip)
    K = min(P.shape[1], 4)
    ids = cell_index(P, alpha, g, K)
    order = np.argsort(ids, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    starts = np.searchsorted(ids[order], np.arange(g ** K + 1))
    return _closer_cells(P[order], float(alpha), g, K, starts.astype(np.int64), Y, lim2, rank[skip])
