"""Randomised property battery for the exact sieve statements.

Generic integer vectors are almost surely independent, so the generator is
biased toward dependent families: repeated vectors, multiples, zero vectors
and vectors drawn from a low-dimensional sublattice.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .sieve import (
    MAX_SET_FUNCTIONAL,
    TestFunctional,
    VectorFamily,
    _bits,
    _k_subsets,
    check_lemma_schmidt,
    check_prop_sieve,
    classic_inclusion_exclusion_bounds,
    count_dk,
    rho,
    sieve_terms,
    sigma_tau,
)

SCHEMA = "latpoisson.sieve-check/1"
ENTRY = 3
R1_VALUES = (1, 3, 5)
R2_VALUES = (0, 2, 4)


def _fits(v) -> bool:
    return all(-ENTRY <= x <= ENTRY for x in v)


def random_family(rng: np.random.Generator, dim: int, size: int) -> VectorFamily:
    """Integer vectors in [-3, 3]^dim with a strong bias toward dependencies."""
    gens = [tuple(int(x) for x in rng.integers(-ENTRY, ENTRY + 1, dim)) for _ in range(int(rng.integers(1, 4)))]
    vecs: list[tuple[int, ...]] = []
    for _ in range(size):
        u = rng.random()
        v = None
        if u < 0.3 or not vecs:
            v = tuple(int(x) for x in rng.integers(-ENTRY, ENTRY + 1, dim))
        elif u < 0.45:
            v = vecs[int(rng.integers(len(vecs)))]
        elif u < 0.6:
            w = vecs[int(rng.integers(len(vecs)))]
            s = int(rng.choice([-3, -2, -1, 2, 3]))
            v = tuple(s * x for x in w)
            if not _fits(v):
                v = tuple(-x for x in w)
        elif u < 0.68:
            v = (0,) * dim
        elif u < 0.82 and len(vecs) >= 2:
            i, j = rng.choice(len(vecs), 2, replace=False)
            s = int(rng.choice([-1, 1]))
            v = tuple(a + s * b for a, b in zip(vecs[i], vecs[j]))
        if v is None or not _fits(v):
            cs = rng.integers(-1, 2, len(gens))
            v = tuple(int(sum(int(c) * g[t] for c, g in zip(cs, gens))) for t in range(dim))
            if not _fits(v):
                v = gens[int(rng.integers(len(gens)))]
        vecs.append(v)
    return VectorFamily(vecs)


def random_independent_subset(rng: np.random.Generator, fam: VectorFamily, b: int) -> int:
    order = _bits(b)
    rng.shuffle(order)
    target = int(rng.integers(0, len(order) + 1))
    a = 0
    for i in order:
        if a.bit_count() >= target:
            break
        if fam.deficiency_mask(a | (1 << i)) == 0:
            a |= 1 << i
    return a


def random_functional(rng: np.random.Generator, fam: VectorFamily, b: int, k: int) -> TestFunctional:
    vals = {}
    density = 0.3 + 0.7 * rng.random()
    for y in _k_subsets(b, k):
        if fam.deficiency_mask(y) == 0 and rng.random() < density:
            vals[y] = Fraction(int(rng.integers(0, 6)), int(rng.integers(1, 5)))
    return TestFunctional(fam, vals, masks=True)


def _dims(rng, dim_max):
    return int(rng.integers(2, max(2, dim_max) + 1))


def run_battery(trials: int = 10_000, dim_max: int = 6, set_max: int = 10, seed: int = 0,
                parts=("lemma", "prop", "dk", "classic")) -> dict:
    """Run the property battery; returns a JSON-ready report with a failure list."""
    set_max = min(set_max, MAX_SET_FUNCTIONAL)
    ss = np.random.SeedSequence(seed)
    streams = dict(zip(("lemma", "prop", "dk"), ss.spawn(3)))
    report: dict = {"schema": SCHEMA, "seed": seed, "trials": trials, "dim_max": dim_max, "set_max": set_max}
    failures: list[dict] = []

    if "lemma" in parts:
        rng = np.random.default_rng(streams["lemma"])
        checks = table_bad = hit_def1 = a_eq_b = 0
        for t in range(trials):
            fam = random_family(rng, _dims(rng, dim_max), int(rng.integers(1, set_max + 1)))
            b = fam.full
            a = random_independent_subset(rng, fam, b)
            A, B = _bits(a), _bits(b)
            table = sigma_tau(fam, A, B, max(max(R1_VALUES), max(R2_VALUES)))
            if any(qr > pr for pr, qr in zip(table.P, table.Q)):
                hit_def1 += 1
            a_eq_b += a == b
            bad = table.invariant_violations()
            if bad:
                table_bad += 1
                failures.append({"part": "table", "trial": t, "family": fam.vectors, "A": A, "why": bad[:3]})
            for R1 in R1_VALUES:
                for R2 in R2_VALUES:
                    res = check_lemma_schmidt(fam, A, B, R1, R2, table=table)
                    checks += 1
                    if not res.ok:
                        failures.append({"part": "lemma", "trial": t, "family": fam.vectors, "A": A,
                                         "R1": R1, "R2": R2, "lower": res.lower, "upper": res.upper})
        report["lemma"] = {"instances": trials, "checks": checks, "violations": sum(f["part"] == "lemma" for f in failures),
                           "table_violations": table_bad, "instances_with_deficiency_one": hit_def1,
                           "instances_with_A_equal_B": a_eq_b}

    if "prop" in parts:
        rng = np.random.default_rng(streams["prop"])
        checks = hit_def1 = nonzero = 0
        for t in range(trials):
            dim = _dims(rng, dim_max)
            fam = random_family(rng, dim, int(rng.integers(1, set_max + 1)))
            b = fam.full
            k = int(rng.integers(0, min(len(fam), dim) + 1))
            phi = random_functional(rng, fam, b, k)
            nonzero += bool(phi.values)
            if any(fam.deficiency_mask(x) == 1 for x in _k_subsets(b, min(len(fam), k + 1))):
                hit_def1 += 1
            terms = sieve_terms(fam, None, k, max(max(R1_VALUES), max(R2_VALUES)), phi)
            for R1 in R1_VALUES:
                for R2 in R2_VALUES:
                    res = check_prop_sieve(fam, None, k, R1, R2, phi, terms=terms)
                    checks += 1
                    if not res.ok:
                        failures.append({"part": "prop", "trial": t, "family": fam.vectors, "k": k, "R1": R1,
                                         "R2": R2, "L": str(res.L), "mid": str(res.mid), "U": str(res.U)})
        report["prop"] = {"instances": trials, "checks": checks, "violations": sum(f["part"] == "prop" for f in failures),
                          "instances_with_deficiency_one": hit_def1, "nonzero_functionals": nonzero}

    if "dk" in parts:
        rng = np.random.default_rng(streams["dk"])
        checks = positive = 0
        for t in range(trials):
            fam = random_family(rng, _dims(rng, dim_max), int(rng.integers(1, set_max + 1)))
            for k in range(0, len(fam)):
                dk = count_dk(fam, None, k)
                bound = (k + 1) * rho(fam, None, k + 1, k)
                checks += 1
                positive += dk > 0
                if dk > bound:
                    failures.append({"part": "dk", "trial": t, "family": fam.vectors, "k": k, "dk": dk, "bound": bound})
        report["dk"] = {"instances": trials, "checks": checks, "violations": sum(f["part"] == "dk" for f in failures),
                        "positive_dk": positive}

    if "classic" in parts:
        checks = 0
        bad = 0
        for nb in range(13):
            for R1 in range(1, 13, 2):
                for R2 in range(0, 13, 2):
                    lo, ind, up = classic_inclusion_exclusion_bounds(nb, R1, R2)
                    checks += 1
                    if not lo <= ind <= up:
                        bad += 1
                        failures.append({"part": "classic", "Nb": nb, "R1": R1, "R2": R2})
        report["classic"] = {"checks": checks, "violations": bad}

    report["failures"] = [_jsonable(f) for f in failures[:50]]
    report["total_violations"] = len(failures)
    report["ok"] = not failures
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj
