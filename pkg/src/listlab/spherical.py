"""Random spherical codes, radial projection, list-size attacks and the
second-moment witness bounds."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BudgetExceeded, DomainError
from .geometry import (MEMBER_TOL, ChannelParams, ListReport, cap_fraction, log_mu_lower_bound,
                       members_within, min_enclosing_ball, uniform_sphere)

MAX_LOG2_SIZE = 30


@dataclass(frozen=True, eq=False)
class SphericalCode:
    n: int
    P: float
    points: np.ndarray
    rate: float = float("nan")

    @property
    def M(self):
        return len(self.points)

    @property
    def radius(self):
        return math.sqrt(self.n * self.P)


def code_size(n, rate):
    x = n * rate
    if x > MAX_LOG2_SIZE:
        raise BudgetExceeded(f"2^{x:.3g} codewords exceed the size cap 2^{MAX_LOG2_SIZE}")
    return int(math.floor(2.0 ** x * (1 + 1e-12)))


def sample_spherical(n, P, rate, rng):
    M = code_size(n, rate)
    return SphericalCode(n, float(P), uniform_sphere(rng, M, n, math.sqrt(n * P)), float(rate))


def project_to_sphere(ball_code, P):
    X = np.atleast_2d(np.asarray(ball_code, dtype=np.float64))
    n = X.shape[1]
    R = math.sqrt(n * P)
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0)
    if len(zero):
        raise DomainError(f"zero vectors have no radial image: indices {zero.tolist()}")
    if np.any(norms > R * (1 + 1e-9)):
        raise DomainError("input points exceed the power radius")
    return SphericalCode(n, float(P), X * (R / norms)[:, None])


# --------------------------------------------------------------------------
# attacks

def _grow(points, cluster, r, max_tries=64):
    """Greedily add nearby points while the enclosing ball stays within r."""
    members = list(cluster)
    c, rad = min_enclosing_ball(points[members])
    d = np.linalg.norm(points - c, axis=1)
    inside = set(members)
    tries = 0
    for j in np.argsort(d, kind="stable"):
        if d[j] > 2 * r or tries >= max_tries:
            break
        if j in inside:
            continue
        tries += 1
        c2, rad2 = min_enclosing_ball(points[members + [j]])
        if rad2 <= r * (1 + 0.5 * MEMBER_TOL):
            members.append(int(j))
            inside.add(int(j))
            c = c2
    return c


def spherical_list_mc(code, N, strategy, budget, rng):
    """Largest list found by an explicit attack; a lower bound on the true
    worst-case list size."""
    if budget < 1:
        raise DomainError("budget must be at least 1")
    X = code.points
    n = code.n
    r = math.sqrt(n * N)
    r2 = r * r * (1 + MEMBER_TOL)
    # independent streams so a larger budget replays a smaller one
    g_idx, g_dir, g_rad = rng.spawn(3)
    u = g_idx.random(budget)
    S = g_dir.standard_normal((budget, n))
    S /= np.linalg.norm(S, axis=1, keepdims=True)
    if strategy == "random-cap":
        R = code.radius
        rho = g_rad.uniform(max(R - r, 0.0), R + r, size=budget)
        Y = S * rho[:, None]
    elif strategy in ("codeword-seeded", "meb-refined"):
        Y = X[np.minimum((u * code.M).astype(np.int64), code.M - 1)] + r * S
    else:
        raise DomainError(f"unknown strategy {strategy!r}")
    counts = kernels.count_within(X, Y, r2)
    # zero noise: the ball around a codeword always holds it
    best_c = X[0].copy()
    best_k = int(kernels.count_within(X, best_c[None, :], r2)[0])
    best_raw = 0
    for t in range(budget):
        k, c = int(counts[t]), Y[t]
        if strategy == "meb-refined":
            # refine only clusters that beat every earlier draw
            if k <= best_raw:
                continue
            best_raw = k
            c = _grow(X, members_within(X, c, r), r)
            k = int(kernels.count_within(X, c[None, :], r2)[0])
        if k > best_k:
            best_k, best_c = k, np.array(c)
    return ListReport(best_k, best_c, r, f"lower-bound:{strategy}", members_within(X, best_c, r))


# --------------------------------------------------------------------------
# second-moment witness

@dataclass(frozen=True)
class WitnessStats:
    """All E_/Var_/failure fields are base-2 logarithms."""
    E_W_lower: float
    Var_W_upper: float
    mu: float
    M: int
    L: int
    net_size: int
    failure_bound: float
    L_threshold: float
    exponent_per_n: float       # delta*L - C, the large-n slope of failure_bound/n
    log2_net_size: float


def net_size_bound(n, P, N, eps):
    """log2 of a volumetric bound on a sqrt(n eps)-net of S(0, sqrt(n(P-N)))."""
    return n * math.log2(1.0 + 2.0 * math.sqrt((P - N) / eps))


def witness_bounds(channel, L, eps, M=None, net_size=None):
    if L < 1:
        raise DomainError("L must be at least 1")
    n, P, N = channel.n, channel.P, channel.N
    mu = cap_fraction(n, P, N)
    if not mu > 0:
        raise DomainError("cap fraction underflows; use smaller n")
    lmu = math.log2(mu)
    if M is None:
        lM = n * channel.R
        M = int(math.floor(2.0 ** lM)) if lM < 1000 else None
        if M is not None and M >= 1:
            lM = math.log2(M)
    else:
        lM = math.log2(M)
    if net_size is None:
        lY = net_size_bound(n, P, N, eps)
        net_size = int(math.ceil(2.0 ** lY)) if lY < 1000 else None
    else:
        lY = math.log2(net_size)
    lL = math.log2(L)
    E = L * (lM - lL) + lY + L * lmu
    V = 2 * lY + lL + L * lM + (L + 1) * lmu
    fail = (2 * L + 1) * lL + (1 - L) * lmu - L * lM
    C = channel.C
    return WitnessStats(E, V, mu, M, L, net_size, fail, C / channel.delta,
                        channel.delta * L - C, lY)


def witness_threshold(channel):
    return channel.C / channel.delta


def empirical_witness(code, N, net, L, max_M=64, max_L=3, max_net=10_000):
    """W = number of (net center, L-subset of codewords) with the whole subset
    inside the ball of radius sqrt(nN) around the center."""
    net = np.atleast_2d(np.asarray(net, dtype=np.float64))
    if code.M > max_M or L > max_L or len(net) > max_net:
        raise BudgetExceeded("witness instance too large for the direct sum")
    r = math.sqrt(code.n * N)
    counts = kernels.count_within(code.points, net, r * r * (1 + MEMBER_TOL))
    return sum(math.comb(int(k), L) for k in counts)


def witness_monte_carlo(n, P, N, M, L, net, seeds):
    """Sample mean and variance of W over independent codes (one per seed)."""
    W = np.array([empirical_witness(SphericalCode(n, P, uniform_sphere(np.random.default_rng(s), M, n,
                                                                      math.sqrt(n * P))),
                                    N, net, L) for s in seeds], dtype=float)
    return W, float(W.mean()), float(W.var(ddof=1)) if len(W) > 1 else 0.0


def exact_mean_witness(M, L, net_size, mu):
    return math.comb(M, L) * net_size * mu ** L


def log_mu_floor(n, P, N):
    return log_mu_lower_bound(n, P, N) / math.log(2)
