import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latpoisson.sieve import (
    HypothesisError,
    SizeCapError,
    TestFunctional,
    VectorFamily,
    approx_rank,
    bareiss_rank,
    check_lemma_schmidt,
    check_prop_sieve,
    classic_inclusion_exclusion_bounds,
    count_dk,
    iota,
    rank,
    rank_deficiency,
    rho,
    sieve_coefficients,
    sieve_sets,
    sigma_tau,
)
from latpoisson.sievecheck import random_family, run_battery

E1, E2, E3 = (1, 0, 0), (0, 1, 0), (0, 0, 1)


def fam(*vecs):
    return VectorFamily(vecs)


def sympy_free_rank(vectors):
    """Rank over Q by Gaussian elimination on Fractions."""
    rows = [[Fraction(x) for x in v] for v in vectors]
    r = 0
    cols = len(rows[0]) if rows else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c] / rows[r][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


vectors = st.integers(1, 5).flatmap(
    lambda d: st.lists(st.lists(st.integers(-3, 3), min_size=d, max_size=d).map(tuple), min_size=0, max_size=8))


@pytest.mark.parametrize("vecs, expected", [
    ([(1, 0), (0, 1)], 2),
    ([(1, 0), (2, 0)], 1),
    ([(1, 2, 3), (2, 4, 6), (0, 1, 1), (1, 3, 4)], 2),
    ([], 0),
    ([(0, 0, 0)], 0),
])
def test_rank_examples(vecs, expected):
    assert bareiss_rank(vecs) == expected
    if vecs:
        assert rank(VectorFamily(vecs)) == expected


@settings(max_examples=300, deadline=None)
@given(vectors)
def test_rank_matches_rational_elimination(vecs):
    assert bareiss_rank(vecs) == sympy_free_rank(vecs)
    if vecs:
        f = VectorFamily(vecs)
        assert rank(f) == sympy_free_rank(vecs)
        for sub in itertools.combinations(range(len(vecs)), min(3, len(vecs))):
            assert rank(f, sub) == sympy_free_rank([vecs[i] for i in sub])


def test_rank_big_integers():
    big = 10 ** 40
    assert bareiss_rank([(big, 1), (big + 1, 1)]) == 2
    assert bareiss_rank([(big, 2 * big), (3, 6)]) == 1


@settings(max_examples=100, deadline=None)
@given(vectors, st.integers(0, 2 ** 32 - 1))
def test_rank_invariant_under_unimodular_change(vecs, seed):
    if not vecs:
        return
    d = len(vecs[0])
    rng = np.random.default_rng(seed)
    U = np.eye(d, dtype=np.int64)
    for _ in range(2 * d):
        if d > 1:
            i, j = rng.choice(d, 2, replace=False)
            U[:, i] += int(rng.integers(-2, 3)) * U[:, j]
    moved = [tuple(int(x) for x in np.array(v) @ U) for v in vecs]
    assert bareiss_rank(moved) == bareiss_rank(vecs)


def test_rank_deficiency_examples():
    assert rank_deficiency(fam(E1, E2)) == 0
    assert rank_deficiency(fam((0, 0))) == 1
    assert rank_deficiency(fam(E1, (2, 0, 0), E2)) == 1
    assert rank_deficiency(fam(E1, E2), []) == 0


def test_iota_examples():
    f = fam((1, 0), (0, 1), (1, 1), (0, 0))
    assert iota(f, []) == 1
    assert iota(f, [3]) == 0
    assert iota(f, [0, 1, 2]) == 0
    assert iota(f, [0, 2]) == 1


def test_rho_examples():
    f = fam((1, 0), (2, 0), (0, 1))
    assert rho(f, None, 2, 2) == 2
    assert rho(f, None, 2, 1) == 1
    assert rho(f, None, 0, 0) == 1
    with pytest.raises(ValueError):
        rho(f, None, 1, 2)


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_rho_rows_sum_to_binomials(vecs):
    if not vecs:
        return
    f = VectorFamily(vecs)
    for k in range(len(vecs) + 1):
        assert sum(rho(f, None, k, j) for j in range(k + 1)) == math.comb(len(vecs), k)
        independent = sum(iota(f, s) for s in itertools.combinations(range(len(vecs)), k))
        assert rho(f, None, k, k) == independent


def test_rho_size_cap():
    f = VectorFamily([(1,)] * 26)
    with pytest.raises(SizeCapError):
        rho(f, None, 3, 1)
    # pairs use the uncapped direction count
    assert rho(f, None, 2, 2) == 0


def test_count_dk_examples():
    assert count_dk(fam((1, 0), (2, 0), (0, 1)), None, 1) == 2
    assert count_dk(fam((1, 0), (0, 1)), None, 1) == 0


@settings(max_examples=300, deadline=None)
@given(vectors)
def test_dk_bound(vecs):
    if not vecs:
        return
    f = VectorFamily(vecs)
    for k in range(len(vecs)):
        assert count_dk(f, None, k) <= (k + 1) * rho(f, None, k + 1, k)


def test_sieve_sets_examples():
    f = fam((1, 0), (0, 1), (1, 1))
    assert sieve_sets(f, None, 1, 1, "S") == 3
    assert sieve_sets(f, None, 1, 1, "T") == 3
    assert sieve_sets(f, None, 2, 2, "S") == 0
    with pytest.raises(ValueError):
        sieve_sets(f, None, 1, 1, "U")


def test_sigma_tau_example():
    f = fam((1, 0), (0, 1), (0, 2))
    t = sigma_tau(f, [0], None, 2)
    assert t.sigma == (1, 2, 0)
    assert t.tau == (1, 2, 1)
    assert t.p[0] == 1
    assert t.c == (1, -1, 0)  # (-1)^r binom(N-1, r) with N = 2
    assert t.invariant_violations() == []


def test_sigma_tau_a_equals_b():
    f = fam((1, 0, 0), (0, 1, 0))
    t = sigma_tau(f, [0, 1], [0, 1], 4)
    assert t.sigma == (1, 0, 0, 0, 0)
    assert t.tau == (1, 0, 0, 0, 0)


def test_sigma_tau_rejects_dependent_a():
    f = fam((1, 0), (2, 0))
    with pytest.raises(HypothesisError):
        sigma_tau(f, [0, 1], None, 2)
    with pytest.raises(HypothesisError):
        sigma_tau(f, [0], [1], 2)


def test_lemma_example():
    f = fam((1, 0), (0, 1), (0, 2))
    res = check_lemma_schmidt(f, [0], None, 1, 2)
    assert (res.lower, res.indicator, res.upper, res.ok) == (-1, 0, 0, True)


@pytest.mark.parametrize("R1, R2", [(1, 0), (3, 2), (5, 4)])
def test_lemma_a_equals_b(R1, R2):
    f = fam((1, 0, 0), (0, 1, 0), (1, 1, 1))
    res = check_lemma_schmidt(f, [0, 1, 2], None, R1, R2)
    assert res.lower == res.upper == res.indicator == 1


def test_lemma_rejects_bad_orders():
    f = fam((1, 0), (0, 1))
    with pytest.raises(HypothesisError):
        check_lemma_schmidt(f, [0], None, 2, 2)
    with pytest.raises(HypothesisError):
        check_lemma_schmidt(f, [0], None, 1, 1)


@st.composite
def lemma_instances(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    f = random_family(rng, draw(st.integers(2, 5)), draw(st.integers(1, 8)))
    order = list(range(len(f)))
    rng.shuffle(order)
    a = []
    for i in order:
        if rng.random() < 0.6 and iota(f, a + [i]):
            a.append(i)
    return f, a


@settings(max_examples=300, deadline=None)
@given(lemma_instances(), st.sampled_from([1, 3, 5, 7]), st.sampled_from([0, 2, 4, 6]))
def test_lemma_always_holds(inst, R1, R2):
    f, a = inst
    assert check_lemma_schmidt(f, a, None, R1, R2).ok
    assert sigma_tau(f, a, None, 7).invariant_violations() == []


def test_table_against_direct_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(200):
        f = random_family(rng, 3, 7)
        a = [i for i in range(len(f)) if iota(f, [i])][:1]
        t = sigma_tau(f, a, None, 6)
        rest = [i for i in range(len(f)) if i not in a]
        for r in range(min(6, len(rest)) + 1):
            subs = list(itertools.combinations(rest, r))
            P = sum(rank_deficiency(f, a + list(z)) == 0 for z in subs)
            Q = sum(rank_deficiency(f, a + list(z)) <= 1 for z in subs)
            assert (t.P[r], t.Q[r]) == (P, Q)
            assert t.p[r] == Fraction(P, len(subs))


def test_functional_validation():
    f = fam((1, 0), (2, 0), (0, 1))
    with pytest.raises(HypothesisError):
        TestFunctional(f, {(0, 1): 1})
    with pytest.raises(HypothesisError):
        TestFunctional(f, {(0, 2): -1})
    phi = TestFunctional(f, {(0, 2): Fraction(1, 3)})
    assert phi([2, 0]) == Fraction(1, 3)
    assert phi([1, 2]) == 0


def test_prop_zero_functional():
    f = fam((1, 0), (2, 0), (0, 1))
    res = check_prop_sieve(f, None, 1, 1, 2, TestFunctional(f, {}))
    assert res.L == res.mid == res.U == 0


def test_prop_full_independent_set():
    f = fam((1, 0, 0), (0, 1, 0))
    phi = TestFunctional(f, {(0, 1): 1})
    res = check_prop_sieve(f, None, 2, 1, 0, phi)
    assert res.L <= 1 <= res.U and res.mid == 1 and res.ok


@st.composite
def prop_instances(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    f = random_family(rng, draw(st.integers(2, 5)), draw(st.integers(1, 7)))
    k = draw(st.integers(0, min(3, len(f))))
    vals = {}
    for y in itertools.combinations(range(len(f)), k):
        if iota(f, y) and rng.random() < 0.7:
            vals[y] = Fraction(int(rng.integers(0, 5)), int(rng.integers(1, 4)))
    return f, k, TestFunctional(f, vals)


@settings(max_examples=200, deadline=None)
@given(prop_instances(), st.sampled_from([1, 3, 5]), st.sampled_from([0, 2, 4]))
def test_prop_always_holds(inst, R1, R2):
    f, k, phi = inst
    assert check_prop_sieve(f, None, k, R1, R2, phi).ok


@settings(max_examples=100, deadline=None)
@given(prop_instances(), st.integers(0, 5))
def test_coefficient_extraction(inst, R):
    f, k, _ = inst
    coef = sieve_coefficients(f, None, k, R, "S")
    for y in itertools.combinations(range(len(f)), k):
        if not iota(f, y):
            continue
        table = sigma_tau(f, list(y), None, R)
        mask = f.mask(y)
        assert coef.get(mask, 0) == table.sigma_partial[R]


@pytest.mark.parametrize("Nb, R1, R2, expected", [
    (0, 1, 0, (1, 1, 1)),
    (3, 1, 0, (-2, 0, 1)),
    (5, 1, 2, (-4, 0, 6)),
])
def test_classic_examples(Nb, R1, R2, expected):
    assert classic_inclusion_exclusion_bounds(Nb, R1, R2) == expected


def test_approx_rank():
    pts = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    assert approx_rank(pts) == 2
    assert approx_rank(np.random.default_rng(0).normal(size=(4, 6))) == 4
    assert approx_rank(np.zeros((0, 3))) == 0


def test_battery_is_clean_and_deterministic():
    a = run_battery(trials=200, seed=5)
    b = run_battery(trials=200, seed=5)
    assert a == b
    assert a["ok"] and a["total_violations"] == 0
    assert a["lemma"]["instances_with_deficiency_one"] > 0
