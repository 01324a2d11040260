import itertools
import math

import numpy as np
import pytest
from scipy import integrate, stats

from latpoisson.lattice import (
    HaarChain,
    NumericalAbort,
    UnimodularLattice,
    enumerate_in_ball,
    fundamental_domain_2d,
    haar_sample,
    haar_sample_exact_2d,
    is_lll_reduced,
    lattice_configs,
    lll_reduce,
    restrict_to_region,
    shortest_vector_length,
)
from latpoisson.regions import HalfBall, half_ball_with_volume


def brute_force_ball(basis: np.ndarray, radius: float) -> set[tuple[int, ...]]:
    """All nonzero coefficient vectors c with |B c| <= radius.

    x = B c gives c_i = <row_i(B^-1), x>, so |c_i| <= radius * |row_i(B^-1)|:
    the norms of the dual basis vectors bound the coefficient box.
    """
    dual = np.linalg.inv(basis)
    bounds = [int(math.floor(radius * np.linalg.norm(row) + 1e-9)) for row in dual]
    out = set()
    for c in itertools.product(*[range(-b, b + 1) for b in bounds]):
        if any(c) and np.linalg.norm(basis @ np.array(c, dtype=float)) <= radius:
            out.add(c)
    return out


def gram_schmidt_oracle(basis):
    cols = basis.T
    ortho, mu = [], np.eye(len(cols))
    for i, v in enumerate(cols):
        w = v.astype(float).copy()
        for j, u in enumerate(ortho):
            mu[i, j] = v @ u / (u @ u)
            w = w - mu[i, j] * u
        ortho.append(w)
    return np.array([u @ u for u in ortho]), mu


def test_lattice_rejects_bad_determinant():
    with pytest.raises(ValueError):
        UnimodularLattice(np.diag([2.0, 1.0]))
    with pytest.raises(ValueError):
        UnimodularLattice(np.ones((2, 3)))


def test_lattice_is_read_only():
    lat = UnimodularLattice(np.eye(3))
    with pytest.raises(ValueError):
        lat.basis[0, 0] = 2.0


@pytest.mark.parametrize("radius, expected", [
    (1.2, {(-1, 0), (0, -1), (0, 1), (1, 0)}),
    (1.5, {(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)}),
])
def test_enumerate_z2(radius, expected):
    pts = enumerate_in_ball(UnimodularLattice(np.eye(2)), radius)
    assert {p.coeffs for p in pts} == expected
    assert [p.coeffs for p in pts] == sorted(p.coeffs for p in pts)


def test_enumerate_matches_brute_force_3d():
    lat = HaarChain(3, np.random.default_rng(4)).sample(1)[0]
    pts = enumerate_in_ball(lat, 1.3)
    assert {p.coeffs for p in pts} == brute_force_ball(lat.basis, 1.3)
    for p in pts:
        assert np.allclose(lat.basis @ np.array(p.coeffs), p.coords, atol=1e-9)


def test_enumerate_unreduced_basis():
    # a badly skewed basis of Z^3 still yields the 6 unit vectors
    U = np.array([[1, 7, -40], [0, 1, 9], [0, 0, 1]], dtype=float)
    pts = enumerate_in_ball(UnimodularLattice(U), 1.0)
    assert len(pts) == 6
    for p in pts:
        assert np.isclose(np.linalg.norm(p.coords), 1.0)


def test_enumerate_cap():
    with pytest.raises(NumericalAbort):
        enumerate_in_ball(UnimodularLattice(np.eye(3)), 10.0, cap=100)
    with pytest.raises(ValueError):
        enumerate_in_ball(UnimodularLattice(np.eye(3)), 0.0)


def test_restrict_examples():
    pts = enumerate_in_ball(UnimodularLattice(np.eye(2)), 1.2)
    cfg = restrict_to_region(pts, HalfBall(2, 1.2), radius=1.2)
    assert cfg.coeffs == ((1, 0),)
    assert len(restrict_to_region([], HalfBall(2, 1.2))) == 0
    with pytest.raises(ValueError):
        restrict_to_region(pts, HalfBall(2, 1.2), radius=1.0)


def test_restricted_points_are_asymmetric():
    region = half_ball_with_volume(3, 2.0)
    chain = HaarChain(3, np.random.default_rng(5))
    for lat in chain.sample(50):
        cfg = restrict_to_region(enumerate_in_ball(lat, region.circumradius()), region)
        kept = set(cfg.coeffs)
        assert not any(tuple(-c for c in co) in kept for co in kept)


def test_lattice_configs_agree_with_single_path():
    region = half_ball_with_volume(4, 1.0)
    bases = HaarChain(4, np.random.default_rng(6)).sample_bases(100)
    batch = lattice_configs(bases, region)
    for b, cfg in zip(bases, batch):
        single = restrict_to_region(enumerate_in_ball(UnimodularLattice(b), region.circumradius()), region)
        assert single.coeffs == cfg.coeffs


def test_lll_identity_unchanged():
    assert np.array_equal(lll_reduce(UnimodularLattice(np.eye(3))).basis, np.eye(3))


def test_lll_skewed_z2():
    lat = lll_reduce(UnimodularLattice(np.array([[1.0, 1000.0], [0.0, 1.0]]).T))
    assert np.linalg.norm(lat.basis[:, 0]) == pytest.approx(1.0)
    # still a basis of Z^2: integer entries, determinant one, both vectors of norm one
    assert np.allclose(lat.basis, np.round(lat.basis))
    assert np.allclose(np.linalg.norm(lat.basis, axis=0), 1.0)
    assert lat.det() == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_lll_postconditions(n, rng):
    # random unimodular change of basis of a random lattice
    base = haar_sample(n, rng, steps=1000).basis
    U = np.eye(n)
    for _ in range(3 * n):
        i, j = rng.choice(n, 2, replace=False)
        U[:, i] += int(rng.integers(-3, 4)) * U[:, j]
    lat = UnimodularLattice(base @ U)
    red = lll_reduce(lat)
    change = np.linalg.solve(lat.basis, red.basis)
    assert np.allclose(change, np.round(change), atol=1e-6)
    assert round(abs(np.linalg.det(np.round(change)))) == 1
    assert red.det() == pytest.approx(lat.det(), abs=1e-9)
    bb, mu = gram_schmidt_oracle(red.basis)
    assert np.all(np.abs(np.tril(mu, -1)) <= 0.5 + 1e-9)
    for k in range(1, n):
        assert bb[k] >= (0.99 - mu[k, k - 1] ** 2) * bb[k - 1] * (1 - 1e-9)
    assert is_lll_reduced(red.basis)


def test_fundamental_domain_membership():
    x, y = fundamental_domain_2d(np.random.default_rng(1), 100_000)
    assert np.all(np.abs(x) <= 0.5)
    assert np.all(x * x + y * y >= 1.0)


def test_fundamental_domain_tail_probability():
    # P(y > 2) = (area above y = 2) / (total area), both under dx dy / y^2
    total = integrate.dblquad(lambda y, x: y ** -2, -0.5, 0.5, lambda x: math.sqrt(1 - x * x), lambda x: math.inf)[0]
    assert total == pytest.approx(math.pi / 3, rel=1e-8)
    p = 0.5 / total
    _, y = fundamental_domain_2d(np.random.default_rng(2), 100_000)
    hit = y > 2
    assert abs(hit.mean() - p) <= 4 * hit.std(ddof=1) / math.sqrt(len(y))


def test_exact_2d_determinant():
    for lat in haar_sample_exact_2d(np.random.default_rng(3), 1000):
        assert abs(np.linalg.det(lat.basis) - 1) <= 1e-12


def test_chain_outputs_have_unit_determinant():
    for lat in HaarChain(4, np.random.default_rng(7), burnin=1000, thin=10).sample(200):
        assert abs(lat.det() - 1) <= 1e-9
        assert np.all(lat.gram_schmidt_norms() > 0)


def test_chain_is_deterministic():
    a = HaarChain(3, np.random.default_rng(8), burnin=500, thin=5).sample_bases(20)
    b = HaarChain(3, np.random.default_rng(8), burnin=500, thin=5).sample_bases(20)
    assert np.array_equal(a, b)


def test_haar_sample_minimum_steps():
    with pytest.raises(ValueError):
        haar_sample(3, np.random.default_rng(0), steps=10)
    with pytest.raises(ValueError):
        HaarChain(1, np.random.default_rng(0))


def test_shortest_vector_matches_domain():
    # for a reduced planar basis the shortest vector has length y^(-1/2)
    rng = np.random.default_rng(11)
    for lat in haar_sample_exact_2d(rng, 200):
        assert shortest_vector_length(lat) == pytest.approx(np.linalg.norm(lat.basis[:, 0]), rel=1e-12)


def test_chain_shortest_vector_ks_against_exact_sampler():
    m = 10_000
    chain = HaarChain(2, np.random.default_rng(12))
    mcmc = [float(np.min(np.linalg.norm(b, axis=0))) for b in chain.sample_bases(m)]
    _, y = fundamental_domain_2d(np.random.default_rng(13), m)
    exact = 1 / np.sqrt(y)
    res = stats.ks_2samp(mcmc, exact)
    assert res.statistic < 1.949 * math.sqrt(2 / m)


def test_siegel_mean_n2():
    region = half_ball_with_volume(2, 0.5)
    bases = HaarChain(2, np.random.default_rng(14)).sample_bases(100_000)
    counts = np.array([len(c) for c in lattice_configs(bases, region)])
    assert abs(counts.mean() - 0.5) <= 4 * counts.std(ddof=1) / math.sqrt(len(counts))


@pytest.mark.parametrize("n", [3, 4])
def test_pair_identity(n):
    # ordered independent pairs in L ∩ S have mean lambda^2
    from latpoisson.sieve import VectorFamily, rho

    lam = 1.0
    region = half_ball_with_volume(n, lam)
    bases = HaarChain(n, np.random.default_rng(15 + n)).sample_bases(50_000)
    pairs = np.array([2 * rho(VectorFamily(c.coeffs), None, 2, 2) if len(c) >= 2 else 0
                      for c in lattice_configs(bases, region)], dtype=float)
    assert abs(pairs.mean() - lam ** 2) <= 4 * pairs.std(ddof=1) / math.sqrt(len(pairs))


def test_change_of_basis_invariance():
    region = half_ball_with_volume(3, 1.0)
    bases = HaarChain(3, np.random.default_rng(16)).sample_bases(2000)
    U = np.array([[1, 2, 0], [0, 1, -3], [1, 2, 1]], dtype=float)
    assert round(np.linalg.det(U)) == 1
    plain = [len(c) for c in lattice_configs(bases, region)]
    moved = [len(c) for c in lattice_configs(bases @ U, region)]
    assert plain == moved


def test_burnin_sensitivity():
    # many short chains, each contributing only its first samples, so burn-in matters
    region = half_ball_with_volume(3, 1.0)
    means, ses = [], []
    for burnin in (1000, 5000):
        rng = np.random.default_rng(burnin)
        bases = np.concatenate([HaarChain(3, rng, burnin=burnin).sample_bases(5) for _ in range(1000)])
        counts = np.array([len(c) for c in lattice_configs(bases, region)], dtype=float)
        means.append(counts.mean())
        ses.append(counts.std(ddof=1) / math.sqrt(len(counts)))
    assert abs(means[0] - means[1]) <= 4 * math.hypot(*ses)
    assert all(abs(m - 1.0) <= 4 * s for m, s in zip(means, ses))
