"""Nested Construction-A lattice codes."""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lattice as lt
from .errors import DomainError
from .finite_field import (LinearCodeFq, all_messages, encode, is_prime, next_prime,
                           random_code, rref_mod)
from .geometry import ChannelParams, ball_volume, worst_case_list_size


@dataclass(frozen=True)
class ConstructionAParams:
    channel: ChannelParams
    q: int
    kappa: int
    alpha: int
    coarse_scaling: float       # target covering radius of the coarse lattice

    @property
    def realized_rate(self):
        return self.kappa * math.log2(self.q) / self.channel.n


def _threshold(channel):
    return math.sqrt(channel.P / channel.N) / (2.0 ** (channel.delta / 8) - 1.0)


def select_params(channel, q=None, kappa=None):
    """Smallest admissible prime q, smallest integer alpha, kappa by rounding.

    q and kappa can be overridden to build scaled-down instances.
    """
    if channel.P <= channel.N:
        raise DomainError("need P > N")
    if channel.delta >= 0.9:
        warnings.warn(f"delta={channel.delta} is outside (0, 0.9); parameters computed anyway",
                      RuntimeWarning, stacklevel=2)
    t = _threshold(channel)
    if q is None:
        q = next_prime(t)
        # guard against t landing a hair above an integer prime
        while 1 + math.sqrt(channel.P / channel.N) / q > 2.0 ** (channel.delta / 8) * (1 + 1e-15):
            q = next_prime(q + 1)
    elif not is_prime(q):
        raise DomainError(f"q={q} is not prime")
    alpha = int(math.floor(t)) + 1
    if kappa is None:
        kappa = int(round(channel.n * channel.R / math.log2(q)))
    kappa = max(0, min(channel.n, kappa))
    return ConstructionAParams(channel, int(q), int(kappa), alpha,
                               math.sqrt(channel.n * channel.P))


def prime_bracket(channel):
    t = _threshold(channel)
    return t, 2 * t + 2


def build_construction_a(code):
    """The lattice Phi(C) + qZ^n as a Lattice with an n x n integer basis.

    Basis: the reduced-echelon generator rows of C together with q*e_j for
    every non-pivot coordinate j.
    """
    n, q = code.n, code.q
    if code.kappa == 0 or code.rank == 0:
        return lt.Lattice(q * np.eye(n), name=f"A({q})")
    R, piv = rref_mod(code.G.T, q)
    cols = [R[i].astype(float) for i in range(len(piv))]
    for j in range(n):
        if j not in piv:
            e = np.zeros(n)
            e[j] = q
            cols.append(e)
    B = np.column_stack(cols)
    return lt.Lattice(B, name=f"A({q})")


def in_construction_a(code, v, tol=1e-7):
    from .finite_field import in_code
    v = np.asarray(v, dtype=float)
    if np.max(np.abs(v - np.round(v))) > tol:
        return False
    return in_code(code, np.round(v).astype(np.int64))


@dataclass(frozen=True)
class NestedPair:
    coarse: lt.Lattice
    fine: lt.Lattice
    code: LinearCodeFq
    q: int
    flags: dict = field(default_factory=dict)


def scaled_coarse(coarse, target):
    """Scale so that the covering-radius upper bracket equals `target`."""
    return lt.scale(coarse, target / lt.covering_radius_upper(coarse))


def coarse_flags(coarse, delta, samples=500, rng=None):
    rep = lt.covering_radius_bounds(coarse, samples, rng)
    rcov_ratio = rep.r_cov_upper / rep.r_eff
    rpack_ratio = rep.r_pack / rep.r_eff
    return {
        "rcov_over_reff": rcov_ratio,
        "rpack_over_reff": rpack_ratio,
        "rcov_ok": bool(rcov_ratio <= 2.0 ** (delta / 8)),
        "rpack_ok": bool(rpack_ratio > 0.25),
        "rcov_method": rep.method["r_cov_upper"],
    }


def nest(coarse, code):
    A = build_construction_a(code)
    fine = lt.Lattice(coarse.basis @ A.basis / code.q, name="fine")
    return fine


def build_nested(params, coarse, rng, require_full_rank=True, flag_samples=200):
    code = random_code(params.q, params.channel.n, params.kappa, rng, require_full_rank)
    fine = nest(coarse, code)
    if not lt.sublattice_check(coarse, fine):
        raise AssertionError("coarse lattice is not contained in the fine lattice")
    flags = coarse_flags(coarse, params.channel.delta, flag_samples, np.random.default_rng(0))
    return NestedPair(coarse, fine, code, params.q, flags)


def encode_psi(pair, m):
    """Codeword of message m: reduce (1/q) G_c (G m mod q) into the coarse Voronoi cell."""
    c = encode(pair.code, m)
    return lt.mod_lattice(pair.coarse, pair.coarse.basis @ c / pair.q)


def codebook(pair):
    msgs = all_messages(pair.q, pair.code.kappa)
    return np.array([encode_psi(pair, m) for m in msgs]).reshape(len(msgs), pair.coarse.n)


def verify_count_sandwich(coarse, q, trials, rng, radii=None, rcov=None):
    """Check the two-sided count of (1/q)coarse points in random balls.

    Returns a dict with the number of violations and per-radius extremes of
    count / (q^n V_n r^n / det).
    """
    n = coarse.n
    rcov = lt.covering_radius_upper(coarse) if rcov is None else rcov
    rho = rcov / q
    if radii is None:
        radii = [1.5 * rho, 2 * rho, 3 * rho, 5 * rho]
    radii = [float(r) for r in radii]
    if min(radii) <= rho:
        raise DomainError("radius must exceed r_cov/q")
    fine = lt.scale(coarse, 1.0 / q)
    dens = q ** n / coarse.det
    vn = ball_volume(n, 1.0)
    violations = []
    ratios = {r: [] for r in radii}
    for t in range(trials):
        y = coarse.basis @ rng.random(n)
        for r in radii:
            k = lt.count_in_ball(fine, y, r)
            lo = dens * vn * (r - rho) ** n
            hi = dens * vn * (r + rho) ** n
            ratios[r].append(k / (dens * vn * r ** n))
            if not (lo * (1 - 1e-9) <= k <= hi * (1 + 1e-9)):
                violations.append((t, r, k, lo, hi))
    return {
        "violations": violations,
        "checks": trials * len(radii),
        "ratio_min": {r: min(v) for r, v in ratios.items()} if trials else {},
        "ratio_max": {r: max(v) for r, v in ratios.items()} if trials else {},
        "rcov": rcov,
    }


def analytic_nested_bound(params):
    """l = ceil((8/(5 delta)) log2(4 alpha)); the list bound is q^l - 1."""
    d = params.channel.delta
    ell = int(math.ceil(8.0 / (5.0 * d) * math.log2(4 * params.alpha)))
    return {"ell": ell, "L": params.q ** ell - 1, "log2_L": ell * math.log2(params.q)}


def nested_list_experiment(params, coarse, rng, trials, budget=50_000_000):
    """Yield (ListReport, info) per sampled nested code."""
    n = params.channel.n
    coarse = scaled_coarse(coarse, params.coarse_scaling)
    bound = analytic_nested_bound(params)
    r = math.sqrt(n * params.channel.N)
    for t in range(trials):
        pair = build_nested(params, coarse, rng)
        cb = codebook(pair)
        rep = worst_case_list_size(cb, r, "exact", budget=budget)
        info = dict(bound)
        info.update(trial=t, codebook_size=len(cb), kappa=params.kappa, q=params.q,
                    realized_rate=params.realized_rate, **pair.flags)
        yield rep, info
