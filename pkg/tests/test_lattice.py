import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from listlab import lattice as lt
from listlab.errors import BudgetExceeded, DomainError
from listlab.geometry import ball_volume

from oracles import box_enumerate


def _random_lattice(rng, n):
    while True:
        B = rng.integers(-3, 4, size=(n, n)).astype(float) + rng.uniform(-0.5, 0.5, (n, n))
        if abs(np.linalg.det(B)) > 0.5:
            return lt.Lattice(B)


def test_gram_factor_and_det():
    rng = np.random.default_rng(1)
    for n in range(2, 6):
        L = _random_lattice(rng, n)
        R = L.gram_factor
        G = L.basis.T @ L.basis
        assert np.allclose(R.T @ R, G, rtol=1e-9, atol=1e-9 * np.abs(G).max())
        assert L.det == pytest.approx(abs(np.linalg.det(L.basis)), rel=1e-9)
    with pytest.raises(DomainError):
        lt.Lattice([[1, 2], [2, 4]])


def test_enumeration_examples():
    Z2 = lt.cubic(2)
    pts = {tuple(p) for p in lt.enumerate_in_ball(Z2, [0.5, 0.5], 1.0)}
    assert pts == {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert lt.enumerate_in_ball(Z2, [0, 0], 0).tolist() == [[0, 0]]
    pts = {tuple(p) for p in lt.enumerate_in_ball(lt.cubic(2, 2), [0, 0], 2)}
    assert pts == {(0, 0), (2, 0), (-2, 0), (0, 2), (0, -2)}


def test_enumeration_lexicographic():
    A = lt.enumerate_coeffs(lt.hexagonal(), [0.3, 0.1], 3.0)
    assert [tuple(a) for a in A] == sorted(tuple(a) for a in A)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 5))
def test_enumeration_matches_box_scan(seed, n):
    rng = np.random.default_rng(seed)
    L = _random_lattice(rng, n)
    c = rng.uniform(-3, 3, n)
    r = float(rng.uniform(0.5, 1.0) * (60 * L.det / ball_volume(n, 1)) ** (1 / n))
    got = {tuple(int(v) for v in a) for a in lt.enumerate_coeffs(L, c, r)}
    assert got == box_enumerate(L, c, r)


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        lt.enumerate_in_ball(lt.cubic(4), np.zeros(4), 100.0, cap=1000)


def test_quantize_examples():
    Z2 = lt.cubic(2)
    assert np.allclose(lt.quantize(Z2, [0.4, -0.3]), [0, 0])
    assert np.allclose(lt.mod_lattice(Z2, [0.4, -0.3]), [0.4, -0.3])
    assert lt.quantize(lt.cubic(1), [0.5]).tolist() == [0.0]
    assert lt.quantize(lt.cubic(1), [-0.5]).tolist() == [-1.0]
    L = lt.Lattice([[2, 1], [0, 1]])
    x = np.array([2.1, 0.9])
    res = np.linalg.norm(lt.mod_lattice(L, x))
    a0 = np.round(L.coords(x)).astype(int)
    for d in np.ndindex(5, 5):
        v = L.point(a0 + np.array(d) - 2)
        assert res <= np.linalg.norm(x - v) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 5))
def test_quantize_optimal(seed, n):
    rng = np.random.default_rng(seed)
    L = _random_lattice(rng, n)
    x = rng.uniform(-5, 5, n)
    q = lt.quantize(L, x)
    m = lt.mod_lattice(L, x)
    assert np.allclose(q + m, x, atol=1e-12)
    assert lt.contains(L, q)
    a = lt.quantize_coeffs(L, x)
    for d in np.ndindex(*([3] * n)):
        v = L.point(a + np.array(d) - 1)
        assert np.linalg.norm(m) <= np.linalg.norm(x - v) * (1 + 1e-9) + 1e-12


def test_radii_named():
    for n in (1, 2, 3, 5):
        rep = lt.covering_radius_bounds(lt.cubic(n), 200, np.random.default_rng(0))
        assert rep.r_pack == pytest.approx(0.5)
        assert rep.r_eff == pytest.approx(ball_volume(n, 1) ** (-1 / n))
        assert rep.r_cov_upper == pytest.approx(math.sqrt(n) / 2)
        assert rep.r_cov_lower <= rep.r_cov_upper
        assert rep.r_pack <= rep.r_eff <= rep.r_cov_upper
    assert lt.packing_radius(lt.cubic(2, 3)) == pytest.approx(1.5)
    h = lt.hexagonal()
    assert lt.packing_radius(h) == pytest.approx(0.5)
    assert lt.effective_radius(h) == pytest.approx(math.sqrt(math.sqrt(3) / (2 * math.pi)))
    assert h.det == pytest.approx(math.sqrt(3) / 2)
    assert lt.packing_radius(lt.d4()) == pytest.approx(math.sqrt(2) / 2)
    assert lt.packing_radius(lt.e8()) == pytest.approx(math.sqrt(2) / 2)
    assert lt.e8().det == pytest.approx(1.0)
    assert lt.d4().det == pytest.approx(2.0)


def test_covering_bracket_general():
    rng = np.random.default_rng(4)
    for n in (2, 3, 4):
        L = _random_lattice(rng, n)
        rep = lt.covering_radius_bounds(L, 300, rng)
        assert rep.r_cov_lower <= rep.r_cov_upper + 1e-12
        assert rep.r_pack <= rep.r_eff <= rep.r_cov_upper
        assert rep.method["r_cov_upper"] == "gram-schmidt-diagonal"
        # Babai residuals never exceed the Gram-Schmidt half diagonal
        for x in rng.uniform(-4, 4, (50, n)):
            e = x - L.point(lt.babai(L, x))
            assert np.linalg.norm(e) <= rep.r_cov_upper * (1 + 1e-9)


def test_scale_radii():
    L = lt.Lattice([[1.0, 0.3], [0.2, 1.4]])
    for c in (2.0, -0.5):
        S = lt.scale(L, c)
        assert lt.packing_radius(S) == pytest.approx(abs(c) * lt.packing_radius(L))
        assert lt.effective_radius(S) == pytest.approx(abs(c) * lt.effective_radius(L))
        assert lt.covering_radius_upper(S) == pytest.approx(abs(c) * lt.covering_radius_upper(L))
    with pytest.raises(DomainError):
        lt.scale(L, 0)


def test_contains_and_sublattice():
    assert lt.contains(lt.cubic(2), [3, -7])
    assert not lt.contains(lt.cubic(2, 2), [1, 0])
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert lt.contains(lt.cubic(2), [3 + 5e-8, 1])
        assert any("deviation" in str(x.message) for x in w)
    assert lt.sublattice_check(lt.cubic(3, 2), lt.cubic(3))
    assert not lt.sublattice_check(lt.cubic(3), lt.cubic(3, 2))


def test_integer_count_sandwich_small():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        for _ in range(20):
            y = rng.uniform(-10, 10, n)
            r = math.sqrt(n) / 2 + rng.uniform(0.1, 3)
            k = lt.count_in_ball(lt.cubic(n), y, r)
            vn = ball_volume(n, 1)
            assert (r - math.sqrt(n) / 2) ** n * vn <= k <= (r + math.sqrt(n) / 2) ** n * vn
