"""One trial function per experiment.

Each function takes (cfg, trial, rng) and returns a list of
(metric_name, value, mode, extra) tuples.
"""
import math

import numpy as np

from . import constellations as ics
from . import construction_a as ca
from . import haar_poisson as hp
from . import lattice as lt
from . import spherical as sph
from .errors import BudgetExceeded, DomainError
from .geometry import cone_cover_count, worst_case_list_size


def _cap_samples(cfg, samples):
    if samples > cfg.budget:
        raise BudgetExceeded(f"{samples} samples exceed the budget {cfg.budget}")


def spherical_ls(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    code = sph.sample_spherical(ch.n, ch.P, ch.R, rng)
    _cap_samples(cfg, p["attack_budget"])
    rep = sph.spherical_list_mc(code, ch.N, p["strategy"], p["attack_budget"], rng)
    ex = {"M": code.M, "rate": ch.R}
    return [("list_size", rep.list_size, rep.mode, ex),
            ("L_threshold", sph.witness_threshold(ch), "analytic", {})]


def _coarse(name, n):
    if name == "cubic":
        return lt.cubic(n)
    if name == "hex" and n == 2:
        return lt.hexagonal()
    if name == "d4" and n == 4:
        return lt.d4()
    if name == "e8" and n == 8:
        return lt.e8()
    raise DomainError(f"coarse lattice {name!r} is not available in dimension {n}")


def ca_ls(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    params = ca.select_params(ch, p["q"] or None, None if p["kappa"] < 0 else p["kappa"])
    if params.q ** params.kappa > p["max_codebook"]:
        raise BudgetExceeded(f"codebook of size {params.q}^{params.kappa} exceeds max_codebook")
    rep, info = next(ca.nested_list_experiment(params, _coarse(p["coarse"], ch.n), rng, 1,
                                               budget=cfg.budget))
    ex = {k: info[k] for k in ("q", "kappa", "codebook_size", "realized_rate", "rcov_ok", "rpack_ok")}
    return [("list_size", rep.list_size, rep.mode, ex),
            ("analytic_log2_L", info["log2_L"], "analytic", {"ell": info["ell"]})]


def _alpha(p, n, var):
    return p["alpha"] if p["alpha"] > 0 else 4.0 * math.sqrt(n * var)


def ic_ls(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    alpha = _alpha(p, ch.n, ch.N)
    M = ics.points_for_ratio(alpha, ch.n, ch.N, ch.delta)
    ic = ics.sample_ic(alpha, M, ch.n, rng)
    rep = ics.ic_list_size(ic, ch.N, p["mode"], ch.delta, budget=cfg.budget)
    return [("list_size", rep.list_size, rep.mode, {"M": M, "alpha": alpha, "slack": rep.slack}),
            ("analytic_L", ics.analytic_ic_bound(ch.delta), "analytic", {})]


def ic_goodness(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    ic = ics.greedy_packing(p["alpha"], ch.n, p["grid"])
    ex = {"alpha": p["alpha"], "grid": p["grid"]}
    return [("packing_ratio", ics.packing_ratio(ic), "greedy", ex),
            ("min_distance", ics.min_wrap_distance(ic), "greedy", ex),
            ("points", ic.M, "greedy", ex),
            ("points_lower_bound", ics.greedy_lower_bound(p["alpha"], ch.n, p["grid"]), "analytic", ex)]


def awgn(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    var = p["sigma2"] if p["sigma2"] > 0 else ch.N
    alpha = _alpha(p, ch.n, var)
    M = ics.points_for_ratio(alpha, ch.n, var, ch.delta)
    _cap_samples(cfg, p["mc_trials"])
    ic = ics.sample_ic(alpha, M, ch.n, rng)
    est = ics.awgn_error_mc(ic, var, p["mc_trials"], rng)
    ex = {"M": M, "alpha": alpha, "sigma2": var, "low": est.low, "high": est.high, "errors": est.errors}
    return [("error_rate", est.rate, "monte-carlo", ex)]


def haar_siegel(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    _cap_samples(cfg, p["samples"])
    r = hp.radius_for_volume(ch.n, p["V"])
    res = hp.siegel_mc(ch.n, p["omega"], None, r, p["samples"], rng)
    ex = {"ensemble": "rogers", "omega": p["omega"], "volume": res.volume, "samples": res.samples}
    return [("mean_count", res.mean, "monte-carlo", ex),
            ("standard_error", res.se, "monte-carlo", ex)]


def haar_poisson(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    _cap_samples(cfg, p["samples"])
    rep = hp.empirical_poissonianity(ch.n, p["omega"], p["V"], p["samples"], rng, p["body"])
    ex = {"ensemble": "rogers", "omega": p["omega"], "body": p["body"], "dof": rep.dof,
          "mean": rep.mean, "second_moment": rep.second_moment, "lambda": rep.lam}
    return [("tv_distance", rep.tv, "monte-carlo", ex),
            ("chi_square", rep.chi2, "monte-carlo", ex)]


def bounds_calc(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    rows = [("L_threshold", sph.witness_threshold(ch), "analytic", {"C": ch.C}),
            ("ic_analytic_L", ics.analytic_ic_bound(ch.delta), "analytic", {})]
    params = ca.select_params(ch)
    nb = ca.analytic_nested_bound(params)
    rows.append(("nested_ell", nb["ell"], "analytic", {"q": params.q, "alpha": params.alpha}))
    rows.append(("nested_log2_L", nb["log2_L"], "analytic", {"q": params.q}))
    c1 = p["c1"] if p["c1"] > 0 else None
    try:
        L, tr = hp.conditional_list_dist(ch, c1)
        rows.append(("conditional_dist_L", L, "analytic", {"c2": tr["c2"], "c3": tr["c3"]}))
        a, Lm, tr = hp.conditional_list_mmt(ch, p["c"], c1=c1)
        rows.append(("conditional_mmt_a", a, "analytic", {"c": p["c"]}))
        rows.append(("conditional_mmt_exponent", tr["exponent"], "analytic", {"L": Lm}))
    except DomainError as e:
        rows.append(("conditional_skipped", 1, "analytic", {"reason": str(e)}))
    return rows


def _ball_code(rng, M, n, R):
    g = rng.standard_normal((M, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (R * rng.random(M) ** (1.0 / n))[:, None]


def reduction_check(cfg, trial, rng):
    ch = cfg.channel
    p = cfg.params
    M = int(rng.integers(p["M_min"], p["M_max"] + 1))
    X = _ball_code(rng, M, ch.n, math.sqrt(ch.n * ch.P))
    r = math.sqrt(ch.n * ch.N)
    Lb = worst_case_list_size(X, r, "exact", budget=cfg.budget).list_size
    Ls = worst_case_list_size(sph.project_to_sphere(X, ch.P).points, r, "exact",
                              budget=cfg.budget).list_size
    k = cone_cover_count(ch.P, ch.N)
    ex = {"M": M, "factor": k}
    return [("L_ball", Lb, "exact", ex), ("L_sphere", Ls, "exact", ex),
            ("violation", int(Ls > k * Lb), "exact", ex)]


# name -> (trial function, experiment-specific defaults)
EXPERIMENTS = {
    "spherical-ls": (spherical_ls, {"strategy": "meb-refined", "attack_budget": 2000}),
    "ca-ls": (ca_ls, {"q": 0, "kappa": -1, "coarse": "cubic", "max_codebook": 4096}),
    "ic-ls": (ic_ls, {"alpha": 0.0, "mode": "exact"}),
    "ic-goodness": (ic_goodness, {"alpha": 8.0, "grid": 0.05}),
    "awgn": (awgn, {"alpha": 0.0, "sigma2": 0.0, "mc_trials": 10000}),
    "haar-siegel": (haar_siegel, {"omega": 0.05, "V": 2.0, "samples": 10000}),
    "haar-poisson": (haar_poisson, {"omega": 0.05, "V": 2.0, "samples": 10000, "body": "ball"}),
    "bounds-calc": (bounds_calc, {"c1": 0.0, "c": 0.9}),
    "reduction-check": (reduction_check, {"M_min": 5, "M_max": 30}),
}
