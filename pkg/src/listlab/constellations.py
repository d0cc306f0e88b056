"""Periodic (alpha, M) constellations: M points in [0, alpha)^n repeated
over alpha*Z^n."""
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import binomtest

from . import kernels
from .errors import BudgetExceeded, DomainError
from .geometry import (MEMBER_TOL, ListReport, ball_volume, grid_net, log_ball_volume,
                       worst_case_list_size)


@dataclass(frozen=True, eq=False)
class PeriodicConstellation:
    alpha: float
    points: np.ndarray
    n: int

    def __post_init__(self):
        P = np.array(self.points, dtype=np.float64).reshape(-1, self.n)
        if np.any(P < 0) or np.any(P >= self.alpha):
            raise DomainError("representatives must lie in [0, alpha)^n")
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    @property
    def M(self):
        return len(self.points)

    @property
    def density(self):
        return self.M / self.alpha ** self.n

    @property
    def r_eff(self):
        return math.exp((self.n * math.log(self.alpha) - log_ball_volume(self.n) - math.log(self.M)) / self.n)


def sample_ic(alpha, M, n, rng):
    if not alpha > 0 or M < 1:
        raise DomainError("need alpha > 0 and M >= 1")
    # a row-major draw, so a smaller M sees a prefix of a larger one
    X = rng.random((M, n)) * alpha
    X[X >= alpha] = 0.0
    return PeriodicConstellation(float(alpha), X, n)


def points_for_ratio(alpha, n, N, delta):
    """M giving r_eff / sqrt(nN) = 2^delta, rounded to the nearest integer."""
    lm = n * math.log(alpha) - log_ball_volume(n, math.sqrt(n * N) * 2.0 ** delta)
    return max(1, int(round(math.exp(lm))))


def wrap_dist(ic, x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    a = ic.alpha
    best = np.min(np.abs(d[..., None] - a * np.array([-1.0, 0.0, 1.0])), axis=-1)
    return float(np.sqrt(np.sum(best ** 2)))


def enumerate_in_wrapped_ball(ic, center, r):
    """(representative index, shift k) with ||p + alpha*k - center|| <= r."""
    if r >= ic.alpha:
        raise DomainError(f"radius {r} must be below the period {ic.alpha}")
    idx, shifts, _ = kernels.wrapped_ball(ic.points, ic.alpha, center, r * r * (1 + MEMBER_TOL))
    return idx, shifts


def lift(ic, margin):
    """Copies p + alpha*k, k in {-1,0,1}^n, inside [-margin, alpha+margin)^n."""
    n, a = ic.n, ic.alpha
    K = np.array(list(itertools.product((-1, 0, 1), repeat=n)), dtype=np.int64)
    X = ic.points[:, None, :] + a * K[None, :, :]
    ok = np.all((X >= -margin) & (X < a + margin), axis=2)
    rep, kk = np.nonzero(ok)
    return X[rep, kk], rep, K[kk]


def analytic_ic_bound(delta):
    x = 3.0 / delta * math.log2(12.0 / delta)
    return int(math.ceil(x)) - 1


def ic_list_size(ic, N, mode="exact", delta=None, budget=50_000_000):
    """Largest number of constellation points in a ball of radius sqrt(nN)."""
    r = math.sqrt(ic.n * N)
    if not r < ic.alpha / 2:
        raise DomainError("need sqrt(nN) < alpha/2")
    if mode == "exact":
        X, rep, K = lift(ic, r * (1 + 1e-6))
        out = worst_case_list_size(X, r, "exact", budget=budget)
        slack = 0.0
        kind = "exact"
    else:
        if delta is None:
            raise DomainError("net mode needs delta")
        eps = math.sqrt(ic.n * N) * delta / 3
        eps = ic.alpha / math.ceil(ic.alpha / eps)
        centers = grid_net(ic.alpha, eps, ic.n)
        slack = 0.5 * eps * math.sqrt(ic.n)
        X, rep, K = lift(ic, (r + slack) * (1 + 1e-6))
        # explicit centers carry no slack, so count at the inflated radius
        out = worst_case_list_size(X, r + slack, "net", centers=centers)
        out = ListReport(out.list_size, out.witness_center, r, out.mode, out.witness_members, slack)
        kind = "net-approximate"
    c = np.mod(out.witness_center, ic.alpha)
    members = tuple(sorted((int(rep[i]), tuple(int(v) for v in K[i])) for i in out.witness_members))
    return ListReport(out.list_size, c, r, kind, members, slack, out.nodes)


def intersect_ball(ic, P, max_cells=1_000_000):
    """All periodic copies with norm <= sqrt(nP)."""
    R = math.sqrt(ic.n * P)
    cells = (2 * R / ic.alpha + 2) ** ic.n
    if cells > max_cells:
        raise BudgetExceeded(f"ball spans about {cells:.3g} cells (cap {max_cells})")
    idx, K, over = kernels.wrapped_ball(ic.points, ic.alpha, np.zeros(ic.n), R * R * (1 + MEMBER_TOL),
                                        cap=50_000_000)
    if over:
        raise BudgetExceeded("too many points in the ball")
    return ic.points[idx] + ic.alpha * K


def ball_rate_check(ic, P, delta):
    R = math.sqrt(ic.n * P)
    count = len(intersect_ball(ic, P))
    target = (R / ic.r_eff) ** ic.n
    return {
        "count": count,
        "target": target,
        "expected": ball_volume(ic.n, R) * ic.density,
        "lower": target * (1 - delta),
        "upper": target * (1 + delta),
        "inside": bool(target * (1 - delta) <= count <= target * (1 + delta)),
    }


# --------------------------------------------------------------------------
# greedy packing

def greedy_packing(alpha, n, grid_resolution):
    """Pick the first uncovered grid point (lexicographic order), cover the
    wrapped closed ball of radius 2 around it, repeat until the grid is covered."""
    if not alpha > 4:
        raise DomainError("greedy packing needs alpha > 4")
    h = float(grid_resolution)
    k = int(round(alpha / h))
    if abs(k * h - alpha) > 1e-9 * alpha:
        raise DomainError("grid resolution must divide alpha")
    w = int(math.ceil(2.0 / h))
    if 2 * w + 1 > k:
        raise DomainError("grid too coarse for the covering window")
    covered = np.zeros((k,) * n, dtype=bool)
    flat = covered.reshape(-1)
    offs = np.arange(-w, w + 1)
    thr = 4.0 * (1 + 1e-12)
    chosen = []
    while True:
        j = int(np.argmin(flat))
        if flat[j]:
            break
        g = np.array(np.unravel_index(j, covered.shape))
        chosen.append(g * h)
        axes = [np.mod(gi + offs, k) for gi in g]
        block = np.zeros((len(offs),) * n)
        for i in range(n):
            d = (offs * h) ** 2
            shape = [1] * n
            shape[i] = len(offs)
            block = block + d.reshape(shape)
        covered[np.ix_(*axes)] |= block < thr
    return PeriodicConstellation(float(alpha), np.array(chosen), n)


def greedy_lower_bound(alpha, n, grid_resolution):
    return alpha ** n / ball_volume(n, 2.0 + math.sqrt(n) * grid_resolution)


def min_wrap_distance(ic):
    """Smallest distance between distinct points of the periodic set."""
    best = ic.alpha
    if ic.M > 1:
        tree = cKDTree(ic.points, boxsize=ic.alpha)
        d, _ = tree.query(ic.points, k=2)
        best = min(best, float(d[:, 1].min()))
    return best


def packing_ratio(ic):
    return 0.5 * min_wrap_distance(ic) / ic.r_eff


# --------------------------------------------------------------------------
# Gaussian noise

@dataclass(frozen=True)
class ErrorEstimate:
    rate: float
    low: float
    high: float
    errors: int
    trials: int


def _self_shift_gain(z, alpha):
    # min over nonzero integer k of ||z - alpha k||^2 - ||z||^2, per coordinate
    k = np.maximum(np.round(np.abs(z) / alpha), 1.0)
    per = alpha * alpha * k * k - 2 * alpha * k * np.abs(z)
    return np.minimum(per, 0.0).sum(axis=1)


def awgn_errors(ic, X_idx, Z, method="scan"):
    """Boolean error indicators: is some other point strictly closer to x+z than x?"""
    a = ic.alpha
    Y = ic.points[X_idx] + Z
    z2 = np.sum(Z * Z, axis=1)
    g = MEMBER_TOL * z2
    if method == "scan":
        self_err = _self_shift_gain(Z, a) < -g
        other_err = np.zeros(len(Z), dtype=bool)
        if ic.M > 1:
            other_err = kernels.closer_point_exists(ic.points, a, np.mod(Y, a), z2 - g, X_idx)
        return self_err | other_err
    if method == "enumerate":
        out = np.zeros(len(Z), dtype=bool)
        for t in range(len(Z)):
            idx, K, _ = kernels.wrapped_ball(ic.points, a, Y[t], z2[t] - g[t])
            for i, k in zip(idx, K):
                if i != X_idx[t] or np.any(k != 0):
                    out[t] = True
                    break
        return out
    raise DomainError(f"unknown method {method!r}")


def awgn_error_mc(ic, sigma2, trials, rng, method="scan"):
    if not math.sqrt(ic.n * sigma2) < ic.alpha / 2:
        raise DomainError("need sqrt(n sigma2) < alpha/2")
    X_idx = rng.integers(0, ic.M, size=trials)
    Z = rng.standard_normal((trials, ic.n)) * math.sqrt(sigma2)
    errs = int(np.count_nonzero(awgn_errors(ic, X_idx, Z, method)))
    if trials == 0:
        return ErrorEstimate(0.0, 0.0, 1.0, 0, 0)
    ci = binomtest(errs, trials).proportion_ci(0.95, method="wilson")
    return ErrorEstimate(errs / trials, float(ci.low), float(ci.high), errs, trials)
