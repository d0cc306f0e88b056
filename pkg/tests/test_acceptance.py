"""Acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line. Run directly for the same
lines without pytest:  python3 tests/test_acceptance.py
"""
import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from listlab import cli
from listlab import constellations as ics
from listlab import construction_a as ca
from listlab import haar_poisson as hp
from listlab import lattice as lt
from listlab import spherical as sph
from listlab.experiments import EXPERIMENTS
from listlab.finite_field import all_messages
from listlab.geometry import ChannelParams, ball_volume, worst_case_list_size

from oracles import box_enumerate, grid_list_bounds, touchard_moments


def _report(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {detail}"
    print(line, flush=True)
    return ok


def _run(argv):
    cfg = cli.parse_config(argv)
    return cfg, cli.run(cfg)


def _values(rows, name):
    return [r.metric_value for r in rows if r.metric_name == name]


# --------------------------------------------------------------------------

def check_enumeration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    bad = 0
    total = 0
    for i in range(200):
        n = 2 + i % 4
        while True:
            # redraw bases whose coefficient box would be too large to scan
            L = lt.Lattice(rng.standard_normal((n, n)) + 1.5 * np.eye(n))
            r = float(rng.uniform(0.5, 2.5)) * lt.effective_radius(L)
            w = 2 * r * np.linalg.norm(np.linalg.inv(L.basis), axis=1) + 3
            if np.prod(w) <= 2e6:
                break
        c = rng.standard_normal(n) * 3
        got = {tuple(int(v) for v in a) for a in lt.enumerate_coeffs(L, c, r)}
        want = box_enumerate(L, c, r)
        bad += got != want
        total += len(want)
    dt = time.perf_counter() - t0
    return bad == 0 and dt < 60, f"200 lattices, {total} points, {bad} mismatches, {dt:.1f}s"


def check_integer_sandwich():
    rng = np.random.default_rng(102)
    bad = checks = 0
    for n in range(2, 7):
        Z = lt.cubic(n)
        vn = ball_volume(n, 1.0)
        h = math.sqrt(n) / 2
        for _ in range(100):
            y = rng.uniform(-50, 50, n)
            for extra in (0.1, 0.5, 1.0, 2.0, 3.0):
                r = h + extra
                k = lt.count_in_ball(Z, y, r)
                checks += 1
                bad += not ((r - h) ** n * vn <= k <= (r + h) ** n * vn)
    return bad == 0, f"{checks} balls, {bad} violations"


def check_count_sandwich():
    rng = np.random.default_rng(103)
    bad = checks = 0
    for coarse in (lt.cubic(2), lt.cubic(2, 2.0), lt.hexagonal()):
        for q in (2, 3, 5):
            rep = ca.verify_count_sandwich(coarse, q, 1000, rng)
            bad += len(rep["violations"])
            checks += rep["checks"]
    return bad == 0, f"{checks} balls over 3 coarse lattices x q in {{2,3,5}}, {bad} violations"


def check_construction_a():
    fails = []
    for q, kappa, n in ((2, 2, 3), (3, 2, 4), (5, 1, 4)):
        ch = ChannelParams(n, 4.0, 1.0, 0.5)
        params = ca.ConstructionAParams(ch, q, kappa, 1, math.sqrt(4.0 * n))
        coarse = ca.scaled_coarse(lt.cubic(n), math.sqrt(4.0 * n))
        for s in range(10):
            pair = ca.build_nested(params, coarse, np.random.default_rng(1000 * q + s))
            if not lt.sublattice_check(pair.coarse, pair.fine):
                fails.append((q, kappa, n, s, "nesting"))
            if abs(pair.fine.det * q ** kappa - pair.coarse.det) > 1e-8 * pair.coarse.det:
                fails.append((q, kappa, n, s, "det"))
            msgs = all_messages(q, kappa)
            cb = np.array([ca.encode_psi(pair, m) for m in msgs])
            # injective: distinct images; onto the q^kappa cosets: all in the fine
            # lattice and already reduced mod the coarse one
            distinct = len(np.unique(np.round(cb, 8), axis=0))
            reduced = all(np.allclose(lt.mod_lattice(pair.coarse, x), x) for x in cb)
            inside = all(lt.contains(pair.fine, x) for x in cb)
            if len(cb) != q ** kappa or distinct != q ** kappa or not (reduced and inside):
                fails.append((q, kappa, n, s, "psi"))
    return not fails, f"30 nested pairs, failures: {fails or 'none'}"


def check_list_size_oracle():
    rng = np.random.default_rng(105)
    bad = []
    tight = 0
    for i in range(70):
        n = 2 if i < 50 else 3
        M = int(rng.integers(4, 13 if n == 2 else 9))
        X = rng.random((M, n)) * (3.0 if n == 2 else 1.5)
        r = float(rng.uniform(0.4, 1.0) if n == 2 else rng.uniform(0.3, 0.5))
        k = worst_case_list_size(X, r).list_size
        lo, hi = grid_list_bounds(X, r, 0.01)
        tight += lo == hi
        if not lo <= k <= hi:
            bad.append((i, k, lo, hi))
    return not bad, f"50 2-D + 20 3-D instances, {tight} with a tight grid bracket, mismatches: {bad or 'none'}"


def check_reduction():
    rows = []
    for n, P, N in ((2, 4.0, 1.0), (2, 9.0, 1.0), (3, 4.0, 1.0), (3, 16.0, 1.0)):
        _, r = _run(["reduction-check", "--n", str(n), "--P", str(P), "--N", str(N), "--delta", "0.5",
                     "--seed", "106", "--trials", "25", "--set", "M_max=20"])
        rows += r
    v = _values(rows, "violation")
    return len(v) == 100 and sum(v) == 0, f"{len(v)} instances, {int(sum(v))} violations"


def check_ic():
    want = {0.25: 67, 0.5: 27, 1.0: 10}
    wired = all(ics.analytic_ic_bound(d) == math.ceil(3 / d * math.log2(12 / d)) - 1 == want[d] for d in want)
    meds = {}
    ok_pos = True
    for n in (2, 3):
        meds[n] = []
        for d in (0.25, 0.5, 1.0):
            _, rows = _run(["ic-ls", "--n", str(n), "--P", "4", "--N", "1", "--delta", str(d),
                            "--seed", "107", "--trials", "30"])
            Ls = _values(rows, "list_size")
            ok_pos &= len(Ls) == 30 and min(Ls) >= 1
            meds[n].append(float(np.median(Ls)))
    trend = all(m[0] >= m[1] >= m[2] for m in meds.values())
    return wired and ok_pos and trend, f"analytic L {want}, medians by n over delta=0.25,0.5,1 {meds}"


def check_greedy():
    t0 = time.perf_counter()
    out = []
    ok = True
    for n, a in ((2, 8.0), (3, 6.0)):
        ic = ics.greedy_packing(a, n, 0.05)
        d = ics.min_wrap_distance(ic)
        ratio = ics.packing_ratio(ic)
        ok &= d >= 2.0 and ratio >= 0.45
        out.append(f"n={n} alpha={a:g} M={ic.M} dmin={d:.4f} ratio={ratio:.3f}")
    dt = time.perf_counter() - t0
    return ok and dt < 120, "; ".join(out) + f"; {dt:.1f}s"


def check_awgn():
    meds = []
    for n in (4, 8, 12):
        _, rows = _run(["awgn", "--n", str(n), "--P", "4", "--N", "1", "--delta", "0.5",
                        "--seed", "109", "--trials", "20", "--set", "mc_trials=10000"])
        meds.append(float(np.median(_values(rows, "error_rate"))))
    return meds[0] >= meds[1] >= meds[2], f"median error rate at n=4,8,12: {meds}"


def check_siegel():
    t0 = time.perf_counter()
    r = hp.radius_for_volume(3, 2.0)
    a = hp.siegel_mc(3, 0.05, None, r, 10_000, np.random.default_rng(110))
    b = hp.siegel_mc(3, 0.05, None, r, 100_000, np.random.default_rng(111))
    dt = time.perf_counter() - t0
    ok = abs(a.mean - 2) <= 0.2 and abs(b.mean - 2) <= 0.1 and dt < 300
    return ok, f"1e4: {a.mean:.4f}+-{a.se:.4f}, 1e5: {b.mean:.4f}+-{b.se:.4f}, {dt:.1f}s"


def check_poisson():
    bad = 0
    for lam in np.linspace(0.05, 5, 100):
        for ell in np.linspace(lam + 0.01, lam + 10, 100):
            bad += hp.pois_tail_bound(lam, ell) < hp.pois_tail_exact(lam, ell)
    mom = 0.0
    for lam in (0.01, 0.5, 1.0, 3.0, 12.0, 40.0):
        ref = touchard_moments(lam, 10)
        mom = max(mom, max(abs(hp.pois_moment(lam, k) - ref[k]) / ref[k] for k in range(11)))
    res = 0.0
    for x in np.logspace(-6, 250, 300):
        w = hp.lambert_w_newton(x)
        res = max(res, abs(w * math.exp(w) - x) / x)
    est = max(abs(hp.lambert_w_estimate(x) - hp.lambert_w_newton(x)) / hp.lambert_w_newton(x)
              for x in np.logspace(4, 200, 200))
    ok = bad == 0 and mom <= 1e-9 and res < 1e-10 and est < 0.05
    return ok, (f"tail violations {bad}/10000, moment rel err {mom:.1e}, "
                f"W residual {res:.1e}, estimate err {est:.3f} for x>=1e4")


def _works(P, N, d, L):
    # independent recomputation of the distribution-assumption condition
    c1 = 4 * N
    eps = c1 * d * d
    c2 = (math.sqrt(P) + math.sqrt(N) + math.sqrt(eps)) / math.sqrt(c1)
    c3 = 1 / math.sqrt(N) - 1 / math.sqrt(c1)
    return c3 * math.sqrt(c1) * d * L > math.log2(c2 / d)


def check_calculators():
    bad = []
    for P in (2.0, 4.0, 10.0):
        for d in (0.02, 0.05, 0.1, 0.2):
            ch = ChannelParams(100, P, 1.0, d)
            if d >= ch.C:
                continue
            L, _ = hp.conditional_list_dist(ch)
            if not (_works(P, 1.0, d, L) and (L == 1 or not _works(P, 1.0, d, L - 1))):
                bad.append((P, d, L))
    ch = ChannelParams(100, 4.0, 1.0, 0.1)
    a_vals = [hp.conditional_list_mmt(ch, 1 / (1 + g))[0] for g in (1e-1, 1e-2, 1e-4, 1e-6)]
    a_ok = all(abs(a - (2.001 + g)) < 1e-9 for a, g in zip(a_vals, (1e-1, 1e-2, 1e-4, 1e-6)))
    thr = sph.witness_threshold(ch)
    ok = not bad and a_ok and thr == ch.C / ch.delta and abs(thr - 10) < 1e-12
    return ok, (f"dist minimality failures {bad or 'none'}, a(c->1) {[round(a, 6) for a in a_vals]}, "
                f"threshold {thr!r}")


SMALL = {
    "spherical-ls": ["--n", "6", "--set", "attack_budget=40"],
    "ca-ls": ["--n", "3", "--set", "q=3", "--set", "kappa=1"],
    "ic-ls": ["--n", "2"],
    "ic-goodness": ["--n", "2", "--set", "alpha=5.0", "--set", "grid=0.1"],
    "awgn": ["--n", "2", "--set", "mc_trials=500"],
    "haar-siegel": ["--n", "3", "--set", "samples=500"],
    "haar-poisson": ["--n", "3", "--set", "samples=500"],
    "bounds-calc": ["--n", "50"],
    "reduction-check": ["--n", "2", "--set", "M_max=10"],
}


def check_reproducible():
    differ = []
    assert set(SMALL) == set(EXPERIMENTS)
    for exp, extra in SMALL.items():
        texts = set()
        for w in (1, 2, 8):
            cfg = cli.parse_config([exp, "--P", "4", "--N", "1", "--delta", "0.5", "--seed", "113",
                                    "--trials", "3", "--workers", str(w), *extra])
            texts.add(cli.render_csv(cfg, cli.run(cfg)).encode())
        if len(texts) != 1:
            differ.append(exp)
    return not differ, f"{len(SMALL)} experiments x workers 1,2,8, differing: {differ or 'none'}"


CRITERIA = [check_enumeration, check_integer_sandwich, check_count_sandwich, check_construction_a,
            check_list_size_oracle, check_reduction, check_ic, check_greedy, check_awgn,
            check_siegel, check_poisson, check_calculators, check_reproducible]


@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    with capsys.disabled():
        _report(k, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = [_report(k, *f()) for k, f in enumerate(CRITERIA, 1)]
    sys.exit(0 if all(results) else 1)
