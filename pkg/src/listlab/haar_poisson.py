"""Random unimodular lattices from the diagonal/last-row ensemble, lattice
point counts in balls, Poisson helpers and the conditional list-size
calculators."""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError
from .geometry import MEMBER_TOL, ChannelParams, ball_volume, log_ball_volume
from .lattice import Lattice

OVERFLOW_GUARD = 1e12


@dataclass(frozen=True, eq=False)
class RogersSample:
    n: int
    omega: float
    thetas: np.ndarray
    lattice: Lattice


@dataclass(frozen=True)
class PoissonParams:
    lam: float
    V: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise DomainError("Poisson mean must be nonnegative")

    @classmethod
    def from_volume(cls, V):
        return cls(V / 2.0, V)


def _check(n, omega):
    if n < 2:
        raise DomainError("n must be at least 2")
    if not 0 < omega < 1:
        raise DomainError("omega must lie in (0, 1)")
    top = omega ** -(n - 1)
    if top > OVERFLOW_GUARD:
        raise DomainError(f"omega^-(n-1) = {top:.3g} exceeds the overflow guard {OVERFLOW_GUARD:g}")
    return top


def rogers_basis(omega, thetas):
    thetas = np.asarray(thetas, dtype=np.float64)
    n = len(thetas) + 1
    top = _check(n, omega)
    B = np.zeros((n, n))
    B[np.arange(n - 1), np.arange(n - 1)] = omega
    B[n - 1, :n - 1] = top * thetas
    B[n - 1, n - 1] = top
    return B


def rogers_sample(n, omega, rng):
    _check(n, omega)
    th = rng.random(n - 1)
    lat = Lattice(rogers_basis(omega, th), name=f"rogers(omega={omega:g})")
    # triangular, so the diagonal gives the determinant without QR round-off
    det = float(np.prod(np.diag(lat.basis)))
    if abs(det - 1.0) > 1e-12:
        raise AssertionError(f"determinant {det} is not 1")
    return RogersSample(n, float(omega), th, lat)


def radius_for_volume(n, V):
    return math.exp((math.log(V) - log_ball_volume(n)) / n) if V > 0 else 0.0


# --------------------------------------------------------------------------
# Siegel averages

@dataclass(frozen=True)
class SiegelResult:
    mean: float
    se: float
    volume: float
    omega: float
    samples: int


def _ball_counts(n, omega, center, r, samples, rng, chunk=50_000):
    _check(n, omega)
    center = np.zeros(n) if center is None else np.asarray(center, dtype=np.float64)
    out = []
    left = samples
    while left > 0:
        m = min(chunk, left)
        th = rng.random((m, n - 1))
        out.append(kernels.rogers_counts(th, omega, center, r * r * (1 + MEMBER_TOL), True))
        left -= m
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def siegel_mc(n, omega, center, r, samples, rng):
    """Mean number of nonzero lattice points in the ball B(center, r)."""
    if samples < 100:
        raise DomainError("need at least 100 samples")
    c = _ball_counts(n, omega, center, r, samples, rng).astype(np.float64)
    s1, s2 = c.sum(), (c * c).sum()
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
    return SiegelResult(float(mean), math.sqrt(var / samples), ball_volume(n, r), float(omega), samples)


def siegel_convergence(n, V, omegas, samples, rng):
    r = radius_for_volume(n, V)
    return [siegel_mc(n, w, None, r, samples, rng) for w in omegas]


# --------------------------------------------------------------------------
# Poisson

def _log_pmf(lam, k):
    return -lam + k * math.log(lam) - math.lgamma(k + 1)


def pois_pmf(lam, k):
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    if k < 0 or int(k) != k:
        return 0.0
    if lam == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(_log_pmf(lam, int(k)))


def pois_tail_exact(lam, ell):
    """Pr[p > ell], summed upward from the first integer above ell."""
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    if lam == 0:
        return 0.0
    k = max(0, int(math.floor(ell)) + 1)
    terms = []
    peak = -math.inf
    while True:
        t = _log_pmf(lam, k)
        peak = max(peak, t)
        terms.append(t)
        if k > lam and t < peak + math.log(1e-17):
            break
        k += 1
    return math.fsum(math.exp(t) for t in terms)


def pois_tail_bound(lam, ell):
    """e^-lam (e lam)^ell / ell^ell, valid for ell > lam."""
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    if not ell > lam:
        raise DomainError(f"bound needs ell > lambda (ell={ell}, lambda={lam})")
    if lam == 0:
        return 0.0
    return math.exp(-lam + ell * (1 + math.log(lam)) - ell * math.log(ell))


def pois_moment(lam, k):
    """E[p^k] by the series e^-lam sum i^k lam^i / i!."""
    if k < 0 or int(k) != k:
        raise DomainError("k must be a nonnegative integer")
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    if k == 0:
        return 1.0
    if lam == 0:
        return 0.0
    logs = []
    peak = -math.inf
    i = 1
    # the summand peaks near i = lam + k
    while True:
        t = k * math.log(i) + _log_pmf(lam, i)
        peak = max(peak, t)
        logs.append(t)
        if i > lam + k and t < peak + math.log(1e-15):
            break
        i += 1
    return math.exp(peak) * math.fsum(math.exp(t - peak) for t in logs)


# --------------------------------------------------------------------------
# Lambert W

def _w_newton(lx, w):
    # solve w + ln w = lx, which is w e^w = e^lx for w > 0
    for _ in range(100):
        step = (w + math.log(w) - lx) * w / (w + 1)
        w -= step
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    return w


def lambert_w_newton(x):
    """Principal branch of W on x > 0."""
    if not x > 0:
        raise DomainError("x must be positive")
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    if x > 1:
        lx = math.log(x)
        w0 = lx - math.log(lx) if x > math.e else lx / 1.5 + 0.4
        return _w_newton(lx, max(w0, 0.3))
    w = x / (1 + x)
    for _ in range(100):
        ew = math.exp(w)
        step = (w * ew - x) / (ew * (w + 1))
        w -= step
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    return w


def lambert_w_of_log(lx):
    """W(e^lx) for lx > 1, without forming e^lx."""
    if lx < 700:
        return lambert_w_newton(math.exp(lx))
    return _w_newton(lx, lx - math.log(lx))


def lambert_w_estimate(x):
    if not x > 1:
        raise DomainError("estimate needs x > 1")
    if x < math.e:
        warnings.warn("the large-x estimate is used below e", RuntimeWarning, stacklevel=2)
    return math.log(x) - math.log(math.log(x))


# --------------------------------------------------------------------------
# conditional list-size calculators

def _constants(channel, c1):
    P, N, d = channel.P, channel.N, channel.delta
    if not 0 < d < channel.C:
        raise DomainError(f"need 0 < delta < C = {channel.C:.6g}")
    c1 = 4.0 * N if c1 is None else float(c1)
    c3 = 1.0 / math.sqrt(N) - 1.0 / math.sqrt(c1)
    if not c3 > 0:
        raise DomainError(f"c3 = {c3:.6g} <= 0; c1 must exceed N")
    eps = c1 * d * d
    c2 = (math.sqrt(P) + math.sqrt(N) + math.sqrt(eps)) / math.sqrt(c1)
    return c1, c2, c3, eps


def _log_lambda(n, c3, eps):
    return -math.log(2) * c3 * math.sqrt(eps) * n - math.log(2 * math.sqrt(math.pi * n))


def conditional_list_dist(channel, c1=None):
    """Smallest L with c3 sqrt(c1) delta L > log2(c2/delta)."""
    c1, c2, c3, eps = _constants(channel, c1)
    d = channel.delta
    slope = c3 * math.sqrt(c1) * d
    target = math.log2(c2 / d)
    L = max(1, int(math.floor(target / slope)) + 1)
    trace = {
        "c1": c1, "c2": c2, "c3": c3, "eps": eps,
        "log_lambda": _log_lambda(channel.n, c3, eps),
        "exponent": slope * L - target,
        "exponent_prev": slope * (L - 1) - target,
        "shape": L * d / math.log2(1 / d) if d < 1 else float("nan"),
    }
    return L, trace


def moment_exponent(n, c, L, delta, c2, c3, eps):
    """D + c ln(L/2) - ln(c2/delta), with D = -f(j*)/n at the critical j*."""
    k = c * n
    ll = _log_lambda(n, c3, eps)
    w = lambert_w_of_log(math.log(k - 0.5) - ll)
    j = (k - 0.5) / w
    f = -j * math.log(j) + (ll + 1) * j + (k - 0.5) * math.log(j) - 0.5 * math.log(2 * math.pi)
    D = -f / n
    return D + c * math.log(L / 2) - math.log(c2 / delta), {"j_star": j, "f": f, "D": D, "log_lambda": ll}


def conditional_list_mmt(channel, c, margin=0.001, c1=None):
    """a = 1 + 1/c + margin and L = (1/delta)^a, with the exponent trace."""
    if not 0 < c < 1:
        raise DomainError("c must lie in (0, 1)")
    c1, c2, c3, eps = _constants(channel, c1)
    d = channel.delta
    a = 1.0 + 1.0 / c + margin
    L = (1.0 / d) ** a
    e, tr = moment_exponent(channel.n, c, L, d, c2, c3, eps)
    # large-n form: c ln L - (c+1) ln(1/delta) + const, so the delta -> 0
    # slope in ln(1/delta) is a c - c - 1
    const = c - c * math.log(2 * c / (math.log(2) * c3 * math.sqrt(c1))) - math.log(c2)
    trace = dict(tr, c1=c1, c2=c2, c3=c3, eps=eps, exponent=e,
                 asymptotic_exponent=c * math.log(L) - (c + 1) * math.log(1 / d) + const,
                 delta_slope=a * c - c - 1)
    return a, L, trace


# --------------------------------------------------------------------------
# empirical Poisson agreement

@dataclass(frozen=True)
class PoissonReport:
    tv: float
    chi2: float
    dof: int
    lam: float
    mean: float
    second_moment: float
    se_mean: float
    se_second: float
    hist: tuple


def _pooled_bins(expected, min_expected=5.0):
    """Group consecutive counts so every bin expects at least min_expected."""
    bins, cur, acc = [], [], 0.0
    for k, e in enumerate(expected):
        cur.append(k)
        acc += e
        if acc >= min_expected:
            bins.append(cur)
            cur, acc = [], 0.0
    if cur:
        if bins:
            bins[-1].extend(cur)
        else:
            bins.append(cur)
    return bins


def empirical_poissonianity(n, omega, V, samples, rng, body="ball", offset=None):
    """Half the nonzero point count in a symmetric body of volume V against Pois(V/2).

    body="ball": one origin-centred ball. body="pair": balls at +-offset*e_1
    with equal radii; they must not overlap, so the count in the union is
    twice the count in one of them.
    """
    if not 0 <= V <= 20:
        raise DomainError("V must lie in [0, 20]")
    lam = V / 2.0
    if body == "ball":
        r = radius_for_volume(n, V)
        counts = _ball_counts(n, omega, None, r, samples, rng)
        if np.any(counts % 2):
            raise AssertionError("nonzero count in a symmetric ball must be even")
        half = counts // 2
    elif body == "pair":
        r = radius_for_volume(n, V / 2)
        off = 1.5 * r if offset is None else float(offset)
        if off < r:
            raise DomainError("the two balls overlap")
        c = np.zeros(n)
        c[0] = off
        half = _ball_counts(n, omega, c, r, samples, rng)
    else:
        raise DomainError(f"unknown body {body!r}")
    kmax = int(max(half.max(initial=0), lam + 12 * math.sqrt(lam + 1) + 12))
    emp = np.bincount(half, minlength=kmax + 1)[:kmax + 1] / samples
    pmf = np.array([pois_pmf(lam, k) for k in range(kmax + 1)])
    tail = max(0.0, 1.0 - pmf.sum())
    tv = 0.5 * (float(np.abs(emp - pmf).sum()) + tail)
    obs = np.bincount(half, minlength=kmax + 1)[:kmax + 1].astype(float)
    exp = pmf * samples
    exp[-1] += tail * samples
    chi2 = 0.0
    bins = _pooled_bins(exp)
    for b in bins:
        o, e = obs[b].sum(), exp[b].sum()
        if e > 0:
            chi2 += (o - e) ** 2 / e
    x = half.astype(np.float64)
    m1, m2 = float(x.mean()), float((x * x).mean())
    se1 = float(x.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    se2 = float((x * x).std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return PoissonReport(tv, chi2, max(len(bins) - 1, 0), lam, m1, m2, se1, se2,
                         tuple(int(v) for v in obs))
