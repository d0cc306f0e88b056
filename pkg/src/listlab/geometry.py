"""Euclidean primitives: volumes, caps, nets, enclosing balls and the
worst-case list size of a finite point set."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import betainc, gammaln

from . import kernels
from .errors import BudgetExceeded, DomainError

MEMBER_TOL = kernels.MEMBER_TOL
MEB_SEED = 20240611


@dataclass(frozen=True)
class ChannelParams:
    n: int
    P: float
    N: float
    delta: float
    R: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        for name in ("P", "N", "delta"):
            v = getattr(self, name)
            if not (v > 0) or not math.isfinite(v):
                raise DomainError(f"{name} must be positive, got {v}")
        object.__setattr__(self, "R", max(0.0, 0.5 * math.log2(self.P / self.N) - self.delta))

    @property
    def C(self):
        return capacity(self.P, self.N)


@dataclass(frozen=True)
class NetSpec:
    eps: float
    kind: str = "cube-grid"     # or "sphere-net"

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        if self.kind not in ("cube-grid", "sphere-net"):
            raise DomainError(f"unknown net kind {self.kind!r}")


@dataclass(frozen=True)
class ListReport:
    list_size: int
    witness_center: np.ndarray
    radius: float
    mode: str                   # "exact" or "net-approximate"
    witness_members: tuple
    slack: float = 0.0
    nodes: int = 0


# --------------------------------------------------------------------------
# volumes and caps

def log_ball_volume(n, r=1.0):
    if n < 1 or int(n) != n:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    if r == 0:
        return -math.inf
    return 0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1) + n * math.log(r)


def ball_volume(n, r=1.0):
    """Volume of the n-ball of radius r."""
    lv = log_ball_volume(n, r)
    return 0.0 if lv == -math.inf else math.exp(lv)


def log_sphere_area(n, r=1.0):
    if n < 2:
        raise DomainError(f"sphere area needs n >= 2, got {n}")
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    if r == 0:
        return -math.inf
    return math.log(n) + log_ball_volume(n, 1.0) + (n - 1) * math.log(r)


def sphere_area(n, r=1.0):
    """Surface area of the sphere of radius r in R^n."""
    la = log_sphere_area(n, r)
    return 0.0 if la == -math.inf else math.exp(la)


def cap_fraction(n, P, N):
    """Fraction of the sphere S(0, sqrt(nP)) inside a noise ball of radius
    sqrt(nN) centred at distance sqrt(n(P-N)) from the origin."""
    if not (0 < N <= P):
        raise DomainError(f"need 0 < N <= P, got P={P}, N={N}")
    if n < 2:
        raise DomainError("cap fraction needs n >= 2")
    # sin^2 of the half-angle is N/P
    return 0.5 * float(betainc(0.5 * (n - 1), 0.5, N / P))


def log_mu_lower_bound(n, P, N):
    if not (0 < N < P):
        raise DomainError(f"need 0 < N < P, got P={P}, N={N}")
    return log_ball_volume(n - 1, math.sqrt(n * N)) - log_sphere_area(n, math.sqrt(n * P))


def mu_lower_bound(n, P, N):
    """Flat-disk lower bound on the cap fraction."""
    return math.exp(log_mu_lower_bound(n, P, N))


def capacity(P, N):
    if not (P > 0 and N > 0):
        raise DomainError(f"P and N must be positive, got P={P}, N={N}")
    return max(0.0, 0.5 * math.log2(P / N))


def cone_cover_count(P, N):
    if not (0 < N < P):
        raise DomainError(f"need 0 < N < P, got P={P}, N={N}")
    return int(math.ceil(P / (4.0 * N)))


# --------------------------------------------------------------------------
# minimum enclosing ball (move-to-front Welzl)

def _circumball(S):
    if len(S) == 0:
        return None, -1.0
    t0 = S[0]
    if len(S) == 1:
        return t0.copy(), 0.0
    A = np.asarray(S[1:]) - t0
    G = A @ A.T
    lam = np.linalg.lstsq(G, 0.5 * np.diag(G), rcond=None)[0]
    c = t0 + A.T @ lam
    return c, float(np.sum((c - t0) ** 2))


def _mtf(L, end, B, dim):
    c, r2 = _circumball(B)
    if len(B) == dim + 1:
        return c, r2
    i = 0
    while i < end:
        p = L[i]
        if c is None or np.sum((p - c) ** 2) > r2 * (1 + 1e-12) + 1e-300:
            c, r2 = _mtf(L, i, B + [p], dim)
            L.insert(0, L.pop(i))
        i += 1
    return c, r2


def min_enclosing_ball(points, seed=MEB_SEED):
    """Smallest enclosing ball of a finite point set, returns (center, radius).

    Randomised incremental construction with move-to-front; the shuffle uses
    a pinned seed so repeated calls agree bit for bit.
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if X.size == 0 or X.shape[0] == 0:
        raise DomainError("enclosing ball of an empty set")
    dim = X.shape[1]
    if dim > 64:
        raise DomainError("enclosing ball supported for n <= 64 only")
    X = np.unique(X, axis=0)
    order = np.random.default_rng(seed).permutation(len(X))
    L = [X[i] for i in order]
    c, _ = _mtf(L, len(L), [], dim)
    r = float(np.sqrt(np.max(np.sum((X - c) ** 2, axis=1))))
    return c, r


# --------------------------------------------------------------------------
# worst-case list size

def neighbor_graph(points, dist):
    """CSR adjacency of pairs at distance <= dist, neighbors sorted."""
    m = len(points)
    if m == 0:
        return np.zeros(1, np.int64), np.zeros(0, np.int64)
    pairs = cKDTree(points).query_pairs(dist, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros(m + 1, np.int64), np.zeros(0, np.int64)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    ptr = np.zeros(m + 1, np.int64)
    np.add.at(ptr, src + 1, 1)
    return np.cumsum(ptr), dst.astype(np.int64)


def members_within(points, center, r):
    d2 = np.sum((np.asarray(points) - center) ** 2, axis=1)
    return tuple(int(i) for i in np.flatnonzero(d2 <= r * r * (1 + MEMBER_TOL)))


def _exact_list_size(X, r, budget):
    m, n = X.shape
    r2 = r * r * (1 + MEMBER_TOL)
    ptr0, nbr0 = neighbor_graph(X, 2 * r * (1 + 1e-8))
    # high degree first so good lower bounds show up early
    deg = np.diff(ptr0)
    perm = np.argsort(-deg, kind="stable")
    Y = X[perm]
    ptr, nbr = neighbor_graph(Y, 2 * r * (1 + 1e-8))
    best, c, nodes, status = kernels.clique_search(Y, r2, ptr, nbr, budget)
    members = members_within(X, c, r)
    rep = ListReport(int(len(members)), np.array(c), float(r), "exact", members, 0.0, int(nodes))
    if status:
        raise BudgetExceeded(f"list-size search exceeded {budget} nodes; best so far {len(members)}", rep)
    return rep


def grid_centers(lo, hi, eps):
    axes = [np.arange(a, b + eps * 0.5, eps) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(lo))


def worst_case_list_size(points, r, mode="exact", net=None, seed=0, budget=50_000_000,
                         centers=None, sphere_radius=None):
    """Largest number of points in a closed ball of radius r.

    mode="exact" searches every ball whose boundary is pinned by at most
    n+1 of the points, which is enough to find the true maximum. mode="net"
    only looks at centers from a net (explicit `centers`, a cube grid over
    the bounding box, or a random sphere net) and counts with the radius
    inflated by the net's covering radius, which is stored as `slack`.
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if r <= 0:
        raise DomainError("radius must be positive")
    if mode == "exact":
        return _exact_list_size(X, float(r), budget)
    if mode not in ("net", "net-approximate"):
        raise DomainError(f"unknown mode {mode!r}")
    if centers is None:
        if net is None:
            raise DomainError("net mode needs a NetSpec or explicit centers")
        if net.kind == "cube-grid":
            centers = grid_centers(X.min(0) - r, X.max(0) + r, net.eps)
            slack = 0.5 * net.eps * math.sqrt(X.shape[1])
        else:
            if sphere_radius is None:
                raise DomainError("sphere-net needs sphere_radius")
            sn = sphere_net(X.shape[1], sphere_radius, net.eps, np.random.default_rng(seed))
            centers, slack = sn.points, net.eps
    else:
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        slack = 0.0 if net is None else net.eps
    rr = r + slack
    counts = kernels.count_within(X, centers, rr * rr * (1 + MEMBER_TOL))
    i = int(np.argmax(counts))
    members = members_within(X, centers[i], rr)
    return ListReport(int(counts[i]), centers[i].copy(), float(r), "net-approximate", members, float(slack))


# --------------------------------------------------------------------------
# nets

@dataclass(frozen=True)
class SphereNet:
    points: np.ndarray
    radius: float
    eps: float
    probe_failures: tuple       # failed probes per certification round


def uniform_sphere(rng, m, n, radius=1.0):
    g = rng.standard_normal((m, n))
    return radius * g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_net(n, radius, eps, rng, probes=1000, max_points=200_000):
    """Random covering of S(0, radius) certified by `probes` fresh probes."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    pts = uniform_sphere(rng, 64, n, radius)
    failures = []
    while True:
        probe = uniform_sphere(rng, probes, n, radius)
        d, _ = cKDTree(pts).query(probe)
        bad = int(np.count_nonzero(d > eps))
        failures.append(bad)
        if bad == 0:
            return SphereNet(pts, float(radius), float(eps), tuple(failures))
        if len(pts) >= max_points:
            raise BudgetExceeded(f"sphere net not certified with {len(pts)} points", pts)
        pts = np.vstack([pts, uniform_sphere(rng, min(len(pts), max_points - len(pts)), n, radius)])


def grid_net(alpha, eps, n):
    """The grid eps*Z^n intersected with [0, alpha)^n."""
    if not (eps > 0) or eps > alpha:
        raise DomainError("need 0 < eps <= alpha")
    k = int(round(alpha / eps))
    if abs(k * eps - alpha) > 1e-9 * alpha:
        raise DomainError(f"eps={eps} does not divide alpha={alpha}")
    ax = eps * np.arange(k)
    return np.stack(np.meshgrid(*([ax] * n), indexing="ij"), -1).reshape(-1, n)
