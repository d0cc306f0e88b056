import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from listlab import spherical as sph
from listlab.errors import BudgetExceeded, DomainError
from listlab.geometry import (ChannelParams, cap_fraction, mu_lower_bound, uniform_sphere,
                              worst_case_list_size)

STRATS = ("random-cap", "codeword-seeded", "meb-refined")


def test_sample_spherical():
    assert sph.sample_spherical(10, 4.0, 0.0, np.random.default_rng(0)).M == 1
    c = sph.sample_spherical(100, 4.0, 0.1, np.random.default_rng(0))
    assert c.M == 1024
    assert np.allclose(np.linalg.norm(c.points, axis=1), math.sqrt(400), rtol=1e-9)
    with pytest.raises(BudgetExceeded):
        sph.sample_spherical(100, 4.0, 0.5, np.random.default_rng(0))


def test_inner_products_concentrate():
    n = 100
    c = sph.sample_spherical(n, 1.0, 0.08, np.random.default_rng(1))
    U = c.points / math.sqrt(n)
    G = U @ U.T
    off = G[np.triu_indices(c.M, 1)]
    assert abs(off.mean()) < 0.01
    assert off.std() == pytest.approx(1 / math.sqrt(n), rel=0.1)


def test_projection():
    n, P = 3, 4.0
    x = np.array([[math.sqrt(n * P) / 2, 0, 0]])
    assert np.allclose(sph.project_to_sphere(x, P).points, 2 * x)
    S = uniform_sphere(np.random.default_rng(0), 20, n, math.sqrt(n * P))
    assert np.allclose(sph.project_to_sphere(S, P).points, S)
    with pytest.raises(DomainError, match=r"\[1\]"):
        sph.project_to_sphere([[1, 0, 0], [0, 0, 0]], P)


@pytest.mark.parametrize("strategy", STRATS)
def test_attack_single_codeword(strategy):
    c = sph.sample_spherical(5, 4.0, 0.0, np.random.default_rng(0))
    assert sph.spherical_list_mc(c, 1.0, strategy, 20, np.random.default_rng(1)).list_size == 1


def test_attack_whole_code_when_noise_large():
    n, P = 4, 1.0
    N = 4.0 * P
    assert 2 * math.sqrt(n * P) <= math.sqrt(n * N)
    c = sph.SphericalCode(n, P, uniform_sphere(np.random.default_rng(2), 12, n, math.sqrt(n * P)))
    assert sph.spherical_list_mc(c, N, "meb-refined", 5, np.random.default_rng(3)).list_size == 12


@pytest.mark.parametrize("strategy", STRATS)
def test_attack_monotone_in_budget(strategy):
    c = sph.sample_spherical(8, 4.0, 0.6, np.random.default_rng(4))
    vals = [sph.spherical_list_mc(c, 1.0, strategy, b, np.random.default_rng(5)).list_size
            for b in (1, 10, 50, 200)]
    assert vals == sorted(vals)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 3), st.integers(2, 30))
def test_attack_is_lower_bound(seed, n, M):
    rng = np.random.default_rng(seed)
    P, N = 4.0, 1.0
    c = sph.SphericalCode(n, P, uniform_sphere(rng, M, n, math.sqrt(n * P)))
    exact = worst_case_list_size(c.points, math.sqrt(n * N)).list_size
    for s in STRATS:
        rep = sph.spherical_list_mc(c, N, s, 50, rng)
        assert 1 <= rep.list_size <= exact
        assert len(rep.witness_members) == rep.list_size


def test_witness_threshold_and_sign():
    ch = ChannelParams(100, 4.0, 1.0, 0.1)
    assert sph.witness_threshold(ch) == pytest.approx(10.0)
    w = sph.witness_bounds(ch, 5, 0.01)
    assert w.L_threshold == pytest.approx(10.0)
    assert w.exponent_per_n < 0
    assert w.mu == cap_fraction(100, 4.0, 1.0)
    assert w.mu >= mu_lower_bound(100, 4.0, 1.0)


def test_witness_bounds_direct():
    # tiny parameters: compare log-domain values with direct arithmetic
    ch = ChannelParams(6, 4.0, 1.0, 0.5)
    for L in (1, 2, 3):
        for M in (4, 7, 10):
            w = sph.witness_bounds(ch, L, 0.5, M=M, net_size=50)
            mu = cap_fraction(6, 4.0, 1.0)
            assert 2 ** w.E_W_lower == pytest.approx((M / L) ** L * 50 * mu ** L, rel=1e-9)
            assert 2 ** w.Var_W_upper == pytest.approx(50 ** 2 * L * M ** L * mu ** (L + 1), rel=1e-9)
            assert 2 ** w.failure_bound == pytest.approx(L ** (2 * L + 1) * mu ** (1 - L) * M ** (-L),
                                                         rel=1e-9)


def test_witness_net_size_default():
    ch = ChannelParams(6, 4.0, 1.0, 0.5)
    w = sph.witness_bounds(ch, 2, 0.5)
    assert w.log2_net_size == pytest.approx(6 * math.log2(1 + 2 * math.sqrt(3 / 0.5)))
    assert w.M == math.floor(2 ** (6 * ch.R))


def test_empirical_witness_degenerate():
    n, P, N = 3, 4.0, 1.0
    R = math.sqrt(n * P)
    net = uniform_sphere(np.random.default_rng(0), 40, n, math.sqrt(n * (P - N)))
    pts = uniform_sphere(np.random.default_rng(1), 8, n, R)
    code = sph.SphericalCode(n, P, pts)
    counts = [int(np.sum(np.linalg.norm(pts - y, axis=1) <= math.sqrt(n * N) * (1 + 1e-9))) for y in net]
    assert sph.empirical_witness(code, N, net, 1) == sum(counts)
    same = sph.SphericalCode(n, P, np.repeat(pts[:1], 5, axis=0))
    reach = sum(np.linalg.norm(pts[0] - y) <= math.sqrt(n * N) for y in net)
    assert sph.empirical_witness(same, N, net, 2) == reach * math.comb(5, 2)
    with pytest.raises(BudgetExceeded):
        sph.empirical_witness(code, N, net, 4)


def test_empirical_witness_mean_above_lower_bound():
    n, P, N, M, L = 6, 4.0, 1.0, 16, 2
    net = uniform_sphere(np.random.default_rng(123), 400, n, math.sqrt(n * (P - N)))
    W, mean, var = sph.witness_monte_carlo(n, P, N, M, L, net, range(100))
    ch = ChannelParams(n, P, N, 0.5)
    w = sph.witness_bounds(ch, L, 0.5, M=M, net_size=len(net))
    se = math.sqrt(var / len(W))
    assert mean >= 2 ** w.E_W_lower - 2 * se
    # the exact mean is C(M, L) |Y| mu^L since every center sits on the cap sphere
    exact = sph.exact_mean_witness(M, L, len(net), cap_fraction(n, P, N))
    assert abs(mean - exact) < 4 * se


def test_delta_scan_trend():
    # n = 16 stands in for n = 100, whose codebooks are far beyond memory
    med = []
    for d in (0.4, 0.2, 0.1):
        vals = []
        for s in range(20):
            rng = np.random.default_rng(s)
            c = sph.sample_spherical(16, 4.0, 1.0 - d, rng)
            vals.append(sph.spherical_list_mc(c, 1.0, "meb-refined", 100, rng).list_size)
        med.append(np.median(vals))
    assert med[0] <= med[1] <= med[2]
