"""Exact rank-deficiency combinatorics and the two-sided rank sieve.

Everything here is exact: vectors are Python integers, ranks come from
fraction-free elimination and the sieve probabilities are ``Fraction``s.
Subsets of a family are handled internally as bitmasks over its indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MAX_SET",
    "MAX_SET_FUNCTIONAL",
    "SizeCapError",
    "HypothesisError",
    "VectorFamily",
    "SieveTable",
    "TestFunctional",
    "LemmaCheck",
    "PropCheck",
    "bareiss_rank",
    "approx_rank",
    "rank",
    "rank_deficiency",
    "iota",
    "rho",
    "count_dk",
    "sieve_sets",
    "sigma_tau",
    "check_lemma_schmidt",
    "check_prop_sieve",
    "classic_inclusion_exclusion_bounds",
    "sieve_coefficients",
]

MAX_SET = 25
MAX_SET_FUNCTIONAL = 20
APPROX_RTOL = 1e-9


class SizeCapError(ValueError):
    """Subset enumeration requested over a set larger than the cap."""


class HypothesisError(ValueError):
    """Input violates a hypothesis of the sieve statement (parity, independence, ...)."""


def bareiss_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    m = [[int(v) for v in r] for r in rows]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    prev = 1
    rk = 0
    for col in range(ncols):
        piv = next((r for r in range(rk, nrows) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        p = m[rk][col]
        for r in range(rk + 1, nrows):
            f = m[r][col]
            row = m[r]
            top = m[rk]
            for c in range(col + 1, ncols):
                # exact division is the Bareiss invariant
                row[c] = (p * row[c] - f * top[c]) // prev
            row[col] = 0
        prev = p
        rk += 1
        if rk == nrows:
            break
    return rk


def approx_rank(vectors, rtol: float = APPROX_RTOL) -> int:
    """Numerical rank of real vectors by column-pivoted elimination.

    Pivots below ``rtol`` times the largest entry count as zero. Only for
    Poisson draws, where independence holds almost surely.
    """
    a = np.array(vectors, dtype=float)
    if a.size == 0:
        return 0
    a = a.reshape(len(a), -1).copy()
    scale = np.abs(a).max()
    if scale == 0:
        return 0
    tol = rtol * scale
    rk = 0
    rows, cols = a.shape
    for _ in range(min(rows, cols)):
        sub = np.abs(a[rk:, rk:])
        r, c = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[r, c] <= tol:
            break
        r += rk
        c += rk
        a[[rk, r]] = a[[r, rk]]
        a[:, [rk, c]] = a[:, [c, rk]]
        a[rk + 1:] -= np.outer(a[rk + 1:, rk] / a[rk, rk], a[rk])
        rk += 1
        if rk == rows or rk == cols:
            break
    return rk


def _reduce(row: tuple[int, ...], echelon: tuple) -> tuple[int, ...] | None:
    v = list(row)
    for pivot, e in echelon:
        if v[pivot]:
            a, b = e[pivot], v[pivot]
            v = [a * x - b * y for x, y in zip(v, e)]
            g = math.gcd(*v)
            if g > 1:
                v = [x // g for x in v]
    return tuple(v) if any(v) else None


class VectorFamily:
    """An indexed family of integer vectors with memoised exact subset ranks.

    The echelon form of a subset is obtained from the subset minus its
    highest index by one fraction-free insertion, so enumerating subsets in
    increasing mask order costs O(rank * dim) per subset.
    """

    def __init__(self, vectors: Iterable[Sequence[int]]):
        vecs = []
        for v in vectors:
            if any(isinstance(x, float) and not float(x).is_integer() for x in v):
                raise TypeError("exact families take integer vectors; use approx_rank for real data")
            vecs.append(tuple(int(x) for x in v))
        dims = {len(v) for v in vecs}
        if len(dims) > 1:
            raise ValueError("all vectors must have the same length")
        self.vectors: tuple[tuple[int, ...], ...] = tuple(vecs)
        self.dim = dims.pop() if dims else 0
        self._echelon: dict[int, tuple] = {0: ()}

    def __len__(self) -> int:
        return len(self.vectors)

    def __repr__(self) -> str:
        return f"VectorFamily({list(self.vectors)!r})"

    @property
    def full(self) -> int:
        return (1 << len(self.vectors)) - 1

    def mask(self, subset: Iterable[int] | None) -> int:
        if subset is None:
            return self.full
        m = 0
        for i in subset:
            if not 0 <= i < len(self.vectors):
                raise IndexError(f"index {i} outside family of size {len(self.vectors)}")
            m |= 1 << i
        return m

    def echelon(self, mask: int) -> tuple:
        e = self._echelon.get(mask)
        if e is not None:
            return e
        top = mask.bit_length() - 1
        base = self.echelon(mask ^ (1 << top))
        if len(base) == self.dim:
            e = base
        else:
            v = _reduce(self.vectors[top], base)
            if v is None:
                e = base
            else:
                lead = next(i for i, x in enumerate(v) if x)
                e = tuple(sorted(base + ((lead, v),)))
        self._echelon[mask] = e
        return e

    def rank_mask(self, mask: int) -> int:
        return len(self.echelon(mask))

    def deficiency_mask(self, mask: int) -> int:
        return mask.bit_count() - len(self.echelon(mask))


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _k_subsets(mask: int, k: int):
    for combo in combinations(_bits(mask), k):
        m = 0
        for i in combo:
            m |= 1 << i
        yield m


def _cap(mask: int, limit: int = MAX_SET) -> None:
    if mask.bit_count() > limit:
        raise SizeCapError(f"set of size {mask.bit_count()} exceeds the enumeration cap {limit}")


def rank(family: VectorFamily, subset: Iterable[int] | None = None) -> int:
    return family.rank_mask(family.mask(subset))


def rank_deficiency(family: VectorFamily, subset: Iterable[int] | None = None) -> int:
    return family.deficiency_mask(family.mask(subset))


def iota(family: VectorFamily, subset: Iterable[int] | None = None) -> int:
    """1 if the vectors are linearly independent (the empty set included), else 0."""
    return int(rank_deficiency(family, subset) == 0)


def _direction(v: tuple[int, ...]) -> tuple[int, ...]:
    g = math.gcd(*v)
    d = tuple(x // g for x in v)
    first = next(x for x in d if x)
    return d if first > 0 else tuple(-x for x in d)


def _rho_small(family: VectorFamily, b: int, k: int, j: int) -> int:
    # k <= 2: zero vectors have rank 0, and two nonzero vectors are
    # dependent iff they share a primitive direction
    idx = _bits(b)
    zeros = sum(1 for i in idx if not any(family.vectors[i]))
    m = len(idx) - zeros
    if k == 0:
        return int(j == 0)
    if k == 1:
        return m if j == 1 else zeros
    groups: dict[tuple[int, ...], int] = {}
    for i in idx:
        v = family.vectors[i]
        if any(v):
            d = _direction(v)
            groups[d] = groups.get(d, 0) + 1
    independent = math.comb(m, 2) - sum(math.comb(c, 2) for c in groups.values())
    if j == 2:
        return independent
    if j == 0:
        return math.comb(zeros, 2)
    return math.comb(len(idx), 2) - independent - math.comb(zeros, 2)


def rho(family: VectorFamily, B: Iterable[int] | None, k: int, j: int) -> int:
    """Number of k-subsets of B whose rank is exactly j.

    For k <= 2 the count comes from grouping vectors by direction and has
    no size cap; larger k enumerate subsets.
    """
    b = family.mask(B)
    if not 0 <= j <= k:
        raise ValueError("need 0 <= j <= k")
    if k <= 2:
        return _rho_small(family, b, k, j)
    _cap(b)
    return sum(1 for x in _k_subsets(b, k) if family.rank_mask(x) == j)


def count_dk(family: VectorFamily, B: Iterable[int] | None, k: int) -> int:
    """Independent k-subsets Y of B lying in a strictly larger subset of B of rank k.

    Such a superset exists iff some element of B outside Y lies in span(Y).
    """
    b = family.mask(B)
    _cap(b)
    total = 0
    for y in _k_subsets(b, k):
        if family.rank_mask(y) != k:
            continue
        for i in _bits(b & ~y):
            if family.rank_mask(y | (1 << i)) == k:
                total += 1
                break
    return total


def _threshold(variant: str, r: int) -> int:
    if variant == "S":
        return r & 1
    if variant == "T":
        return 1 - (r & 1)
    raise ValueError("variant must be 'S' or 'T'")


def sieve_sets(family: VectorFamily, B: Iterable[int] | None, k: int, r: int, variant: str = "S") -> int:
    """Size of S_{k,r}(B) (variant ``"S"``) or T_{k,r}(B) (variant ``"T"``).

    Both collect the (k+r)-subsets X of B with deficiency(X) at most 1 or 0;
    S allows deficiency one for odd r, T for even r.
    """
    if k < 0 or r < 0:
        raise ValueError("k and r must be nonnegative")
    b = family.mask(B)
    _cap(b)
    lim = _threshold(variant, r)
    return sum(1 for x in _k_subsets(b, k + r) if family.deficiency_mask(x) <= lim)


@dataclass(frozen=True)
class SieveTable:
    """Completion counts of an independent set A inside B (N = |B \\ A|).

    ``P[r]`` / ``Q[r]`` count r-subsets Z of B \\ A with deficiency(A ∪ Z)
    equal to 0 / at most 1; ``p``, ``q`` are those counts over binom(N, r).
    """

    N: int
    R: int
    P: tuple[int, ...]
    Q: tuple[int, ...]
    sigma: tuple[int, ...]
    tau: tuple[int, ...]
    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]
    c: tuple[int, ...]
    sigma_partial: tuple[int, ...] = field(repr=False)
    tau_partial: tuple[int, ...] = field(repr=False)

    def invariant_violations(self) -> list[str]:
        bad = []
        N = self.N
        for r in range(N + 1):
            if not 0 <= self.p[r] <= self.q[r] <= 1:
                bad.append(f"0 <= p_{r} <= q_{r} <= 1 fails")
        for r in range(N):
            if self.p[r] < self.p[r + 1] or self.q[r] < self.q[r + 1]:
                bad.append(f"monotonicity fails at r={r}")
            if self.p[r] > self.q[r + 1]:
                bad.append(f"p_{r} <= q_{r + 1} fails")
        if N >= 1:
            for r, cr in enumerate(self.c):
                if cr != (-1) ** r * math.comb(N - 1, r):
                    bad.append(f"c_{r} closed form fails")
        return bad


def sigma_tau(family: VectorFamily, A: Iterable[int], B: Iterable[int] | None, R: int | None = None) -> SieveTable:
    """Tabulate the completion counts sigma_r, tau_r for r = 0..R (default N)."""
    a, b = family.mask(A), family.mask(B)
    _cap(b)
    if a & ~b:
        raise HypothesisError("A must be a subset of B")
    if family.deficiency_mask(a):
        raise HypothesisError("A must consist of linearly independent vectors")
    rest = b & ~a
    N = rest.bit_count()
    R = N if R is None else R
    if R < 0:
        raise ValueError("R must be nonnegative")
    P = [0] * (N + 1)
    Q = [0] * (N + 1)
    bits = _bits(rest)
    for sub in range(1 << N):
        z = 0
        for pos, i in enumerate(bits):
            if sub >> pos & 1:
                z |= 1 << i
        d = family.deficiency_mask(a | z)
        r = sub.bit_count()
        if d == 0:
            P[r] += 1
        if d <= 1:
            Q[r] += 1
    Pe = P + [0] * max(0, R - N)
    Qe = Q + [0] * max(0, R - N)
    sigma = [Pe[r] if r % 2 == 0 else Qe[r] for r in range(R + 1)]
    tau = [Qe[r] if r % 2 == 0 else Pe[r] for r in range(R + 1)]
    p = [Fraction(P[r], math.comb(N, r)) for r in range(N + 1)]
    q = [Fraction(Q[r], math.comb(N, r)) for r in range(N + 1)]
    c, acc = [], 0
    for r in range(R + 1):
        acc += (-1) ** r * math.comb(N, r)
        c.append(acc)
    sp, tp, s_acc, t_acc = [], [], 0, 0
    for r in range(R + 1):
        s_acc += (-1) ** r * sigma[r]
        t_acc += (-1) ** r * tau[r]
        sp.append(s_acc)
        tp.append(t_acc)
    return SieveTable(N, R, tuple(P), tuple(Q), tuple(sigma), tuple(tau), tuple(p), tuple(q),
                      tuple(c), tuple(sp), tuple(tp))


@dataclass(frozen=True)
class LemmaCheck:
    lower: int
    indicator: int
    upper: int
    ok: bool


def _check_orders(R1: int, R2: int) -> None:
    if R1 < 0 or R1 % 2 != 1:
        raise HypothesisError("R1 must be odd")
    if R2 < 0 or R2 % 2 != 0:
        raise HypothesisError("R2 must be even and nonnegative")


def check_lemma_schmidt(family: VectorFamily, A: Iterable[int], B: Iterable[int] | None,
                        R1: int, R2: int, table: SieveTable | None = None) -> LemmaCheck:
    """Evaluate ``sum_{r<=R1} (-1)^r sigma_r <= 1{A=B} <= sum_{r<=R2} (-1)^r tau_r``."""
    _check_orders(R1, R2)
    a, b = family.mask(A), family.mask(B)
    if table is None or table.R < max(R1, R2):
        table = sigma_tau(family, A, B, max(R1, R2))
    lower = table.sigma_partial[R1]
    upper = table.tau_partial[R2]
    ind = int(a == b)
    return LemmaCheck(lower, ind, upper, lower <= ind <= upper)


class TestFunctional:
    """Nonnegative rational function on subsets of a family, zero on dependent sets.

    Keys are index collections (or masks when ``masks=True``); absent
    subsets map to zero.
    """

    __test__ = False  # not a pytest class

    def __init__(self, family: VectorFamily, values: Mapping, masks: bool = False):
        self.family = family
        self.values: dict[int, Fraction] = {}
        for key, val in values.items():
            m = int(key) if masks else family.mask(key)
            v = Fraction(val)
            if v < 0:
                raise HypothesisError("test functional must be nonnegative")
            if v and family.deficiency_mask(m):
                raise HypothesisError("test functional must vanish on linearly dependent subsets")
            if v:
                self.values[m] = v

    def __call__(self, subset: Iterable[int]) -> Fraction:
        return self.values.get(self.family.mask(subset), Fraction(0))

    def at_mask(self, mask: int) -> Fraction:
        return self.values.get(mask, Fraction(0))


@dataclass(frozen=True)
class PropCheck:
    L: Fraction
    mid: Fraction
    U: Fraction
    ok: bool


def _inner_sum(phi: TestFunctional, x: int, k: int) -> Fraction:
    if not phi.values:
        return Fraction(0)
    if len(phi.values) < math.comb(x.bit_count(), k):
        return sum((v for m, v in phi.values.items() if m & x == m and m.bit_count() == k), Fraction(0))
    return sum((phi.at_mask(y) for y in _k_subsets(x, k)), Fraction(0))


def sieve_terms(family: VectorFamily, B: Iterable[int] | None, k: int, R: int,
                phi: TestFunctional) -> tuple[list[Fraction], list[Fraction]]:
    """Per-r inner sums over S_{k,r}(B) and T_{k,r}(B), r = 0..R (unsigned)."""
    b = family.mask(B)
    _cap(b, MAX_SET_FUNCTIONAL)
    s_terms, t_terms = [], []
    for r in range(R + 1):
        s_acc = Fraction(0)
        t_acc = Fraction(0)
        if k + r <= b.bit_count():
            for x in _k_subsets(b, k + r):
                d = family.deficiency_mask(x)
                if d > 1:
                    continue
                inner = _inner_sum(phi, x, k)
                if d <= (r & 1):
                    s_acc += inner
                if d <= 1 - (r & 1):
                    t_acc += inner
        s_terms.append(s_acc)
        t_terms.append(t_acc)
    return s_terms, t_terms


def check_prop_sieve(family: VectorFamily, B: Iterable[int] | None, k: int, R1: int, R2: int,
                     phi: TestFunctional, terms=None) -> PropCheck:
    """Two-sided rank sieve for a test functional, evaluated exactly.

    ``terms`` may carry a precomputed ``sieve_terms`` result reaching
    order max(R1, R2), so several truncation orders share one pass.
    """
    _check_orders(R1, R2)
    if phi.family is not family:
        raise HypothesisError("test functional belongs to a different family")
    b = family.mask(B)
    if terms is None or len(terms[0]) <= max(R1, R2):
        terms = sieve_terms(family, B, k, max(R1, R2), phi)
    s_terms, t_terms = terms
    L = sum(((-1) ** r * s_terms[r] for r in range(R1 + 1)), Fraction(0))
    U = sum(((-1) ** r * t_terms[r] for r in range(R2 + 1)), Fraction(0))
    mid = phi.at_mask(b) if b.bit_count() == k else Fraction(0)
    return PropCheck(L, mid, U, L <= mid <= U)


def sieve_coefficients(family: VectorFamily, B: Iterable[int] | None, k: int, R: int,
                       variant: str = "S") -> dict[int, int]:
    """Coefficient of phi(Y) in the truncated sieve sum, for every k-subset Y.

    Accumulated term by term from the sets X of S_{k,r}(B) or T_{k,r}(B);
    keys are masks.
    """
    b = family.mask(B)
    _cap(b, MAX_SET_FUNCTIONAL)
    coef: dict[int, int] = {}
    for r in range(R + 1):
        lim = _threshold(variant, r)
        sign = -1 if r & 1 else 1
        for x in _k_subsets(b, k + r):
            if family.deficiency_mask(x) <= lim:
                for y in _k_subsets(x, k):
                    coef[y] = coef.get(y, 0) + sign
    return coef


def classic_inclusion_exclusion_bounds(Nb: int, R1: int, R2: int) -> tuple[int, int, int]:
    """``(sum_{j<=R1} (-1)^j C(Nb,j), 1{Nb=0}, sum_{j<=R2} (-1)^j C(Nb,j))``."""
    _check_orders(R1, R2)
    if Nb < 0:
        raise ValueError("Nb must be nonnegative")
    lower = sum((-1) ** j * math.comb(Nb, j) for j in range(R1 + 1))
    upper = sum((-1) ** j * math.comb(Nb, j) for j in range(R2 + 1))
    return lower, int(Nb == 0), upper
