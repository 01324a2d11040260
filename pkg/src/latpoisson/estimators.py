"""Monte Carlo comparison of lattice and Poisson configurations in a region.

Trials are grouped into fixed-size chunks. Chunk ``c`` of experiment
``label`` on side ``s`` (0 = lattice, 1 = Poisson) draws from the stream
``SeedSequence([seed, crc32(label), s, c])``; lattice chunks run one Haar
chain each. Results are concatenated in chunk order, so they do not depend
on how chunks are spread over workers.
"""

from __future__ import annotations

import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import combinations
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from .lattice import DEFAULT_BURNIN, DEFAULT_THIN, HaarChain, lattice_configs
from .pointprocess import Config, poisson_pmf, sample_poisson_batch
from .regions import HalfBall, Region, region_from_dict
from .sieve import VectorFamily, approx_rank, classic_inclusion_exclusion_bounds, rho

log = logging.getLogger(__name__)

__all__ = [
    "C0",
    "KINDS",
    "GuardError",
    "McReport",
    "ExperimentPlan",
    "Functional",
    "Partition",
    "schmidt_bound",
    "estimate_rho_kk",
    "estimate_rho_k_km1",
    "verify_prop11",
    "estimate_kim_event",
    "estimate_tv_lower_bound",
    "poisson_reference",
    "tv_plugin",
    "truncation_chain",
    "run_plan",
    "aggregate",
]

C0 = 1 / 200
DEFAULT_GATE = 4.0
KINDS = ("rho_kk", "rho_k_km1", "prop11", "kim_event", "tv_lower", "poisson_ref")
LATTICE, POISSON = 0, 1


class GuardError(ValueError):
    """Plan outside the guarded regime lambda <= c0 * n."""


@dataclass
class McReport:
    """One Monte Carlo estimate with its verdict.

    ``sided`` is ``"two"`` for equality targets (pass iff |z| <= gate) and
    ``"upper"`` for one-sided bounds (pass iff z <= gate, i.e. mean <=
    target + gate * stderr).
    """

    label: str
    kind: str
    n: int
    lam: float
    k: int | None
    trials: int
    mean: float
    stderr: float
    ci95: tuple[float, float]
    target: float | None = None
    zscore: float | None = None
    verdict: str = "informational"
    gate: float = DEFAULT_GATE
    sided: str = "two"
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, label, kind, n, lam, k, values, target=None, gate=DEFAULT_GATE,
                     sided="two", gated=True, extras=None) -> "McReport":
        values = np.asarray(values, dtype=float)
        trials = len(values)
        mean = float(values.mean()) if trials else math.nan
        se = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
        return cls.build(label, kind, n, lam, k, trials, mean, se, target, gate, sided, gated, extras)

    @classmethod
    def build(cls, label, kind, n, lam, k, trials, mean, se, target=None, gate=DEFAULT_GATE,
              sided="two", gated=True, extras=None) -> "McReport":
        z = None
        verdict = "informational"
        if target is not None:
            diff = mean - target
            if se > 0:
                z = diff / se
            else:
                z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
            if gated:
                ok = abs(z) <= gate if sided == "two" else z <= gate
                verdict = "pass" if ok else "fail"
        ci = (mean - 1.96 * se, mean + 1.96 * se)
        return cls(label, kind, n, lam, k, trials, mean, se, ci, target, z, verdict, gate, sided, extras or {})

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "McReport":
        d = dict(d)
        d["ci95"] = tuple(d["ci95"])
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


@dataclass(frozen=True)
class Functional:
    """Built-in test functionals ``f(X)``, all supported on ``|X| = k``.

    ``card``: 1. ``norm_product``: prod |x| / r over X, with r the region's
    circumradius. ``angle``: 1 when every pairwise angle is at least
    ``theta`` radians.
    """

    name: str = "card"
    k: int = 1
    theta: float = math.pi / 3

    def __post_init__(self):
        if self.name not in ("card", "norm_product", "angle"):
            raise ValueError(f"unknown functional {self.name!r}")
        if self.k < 0:
            raise ValueError("k must be nonnegative")

    def value(self, pts: np.ndarray, region: Region) -> float:
        if self.name == "card":
            return 1.0
        if self.name == "norm_product":
            return float(np.prod(np.linalg.norm(pts, axis=1) / region.circumradius()))
        norms = np.linalg.norm(pts, axis=1)
        cos_max = math.cos(self.theta)
        for i, j in combinations(range(len(pts)), 2):
            c = float(pts[i] @ pts[j]) / (norms[i] * norms[j])
            if c > cos_max + 1e-15:
                return 0.0
        return 1.0


@dataclass(frozen=True)
class Partition:
    """Split of a region into 1-4 disjoint cells.

    ``whole``: one cell. ``halves``: sign of x_2. ``quadrants``: signs of
    x_2 and x_3. ``radial``: ``cells`` equal-volume shells of a half-ball.
    """

    kind: str = "halves"
    cells: int = 2

    def __post_init__(self):
        expected = {"whole": 1, "halves": 2, "quadrants": 4}
        if self.kind in expected:
            object.__setattr__(self, "cells", expected[self.kind])
        elif self.kind != "radial":
            raise ValueError(f"unknown partition {self.kind!r}")
        if not 1 <= self.cells <= 4:
            raise ValueError("partition must have 1 to 4 cells")

    def validate(self, region: Region) -> None:
        if self.kind == "halves" and region.dim < 2 or self.kind == "quadrants" and region.dim < 3:
            raise ValueError(f"{self.kind} partition needs more dimensions")
        if self.kind == "radial" and not isinstance(region, HalfBall):
            raise ValueError("radial partition is defined for half-balls only")

    def assign(self, pts: np.ndarray, region: Region) -> np.ndarray:
        if len(pts) == 0 or self.kind == "whole":
            return np.zeros(len(pts), dtype=np.int64)
        if self.kind == "halves":
            return (pts[:, 1] > 0).astype(np.int64)
        if self.kind == "quadrants":
            return (pts[:, 1] > 0).astype(np.int64) * 2 + (pts[:, 2] > 0)
        # shells with radii r (i/m)^(1/n) have equal volume
        frac = (np.linalg.norm(pts, axis=1) / region.circumradius()) ** region.dim
        return np.minimum((frac * self.cells).astype(np.int64), self.cells - 1)

    def counts(self, cfg: Config, region: Region) -> tuple[int, ...]:
        return tuple(np.bincount(self.assign(cfg.points, region), minlength=self.cells).tolist())


@dataclass
class ExperimentPlan:
    """Parameters of one experiment; ``region`` defaults to a half-ball of volume ``lam``."""

    kind: str
    label: str
    n: int
    lam: float
    trials: int = 10_000
    seed: int = 0
    region: dict = field(default_factory=dict)
    burnin: int = DEFAULT_BURNIN
    thin: int = DEFAULT_THIN
    k: list[int] = field(default_factory=lambda: [1])
    R1: int = 1
    R2: int = 2
    gate: float = DEFAULT_GATE
    guard: bool = True
    c0: float = C0
    functional: str = "card"
    theta: float = math.pi / 3
    partition: str = "halves"
    cells: int = 2
    bootstrap: int = 200
    min_bin: int = 5
    chunk: int = 1000
    kmax: int = 4
    max_points: int = 24

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment type {self.kind!r}; expected one of {KINDS}")
        if isinstance(self.k, int):
            self.k = [self.k]
        self.k = [int(v) for v in self.k]
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.trials < 100:
            raise ValueError("trials must be at least 100")
        if self.R1 % 2 != 1 or self.R2 % 2 != 0 or self.R2 < 0:
            raise ValueError("R1 must be odd and R2 even")
        if self.chunk < 1:
            raise ValueError("chunk must be positive")
        if self.guard and self.lam > self.c0 * self.n * (1 + 1e-12):
            raise GuardError(f"{self.label}: lambda={self.lam} exceeds c0*n={self.c0 * self.n:g}; "
                             "set guard = false to run outside the guarded regime")
        vol = self.build_region().volume()
        if abs(vol - self.lam) > 1e-9 * self.lam:
            raise ValueError(f"{self.label}: region volume {vol} does not match lambda {self.lam}")

    def build_region(self) -> Region:
        params = dict(self.region)
        params.setdefault("shape", "half_ball")
        params.setdefault("n", self.n)
        if int(params["n"]) != self.n:
            raise ValueError("region dimension differs from n")
        explicit = {"radius", "r_out", "edges"} & params.keys()
        if "target_volume" not in params and not explicit:
            params["target_volume"] = self.lam
        return region_from_dict(params)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["type"] = d.pop("kind")
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict, defaults: dict | None = None) -> "ExperimentPlan":
        d = {**(defaults or {}), **d}
        d = dict(d)
        if "type" in d:
            d["kind"] = d.pop("type")
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**d)


def schmidt_bound(n: int, lam: float, k: int) -> float:
    """Upper bound on E rho_k^{k-1}(L ∩ S): lam^{k-1}/(k-1)! [3^k (3/4)^{n/2} + 5^k 2^{-n}]."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return lam ** (k - 1) / math.factorial(k - 1) * (3 ** k * 0.75 ** (n / 2) + 5 ** k * 2.0 ** (-n))


# --- per-trial statistics -------------------------------------------------

def _family(cfg: Config) -> VectorFamily:
    return VectorFamily(cfg.coeffs)


def _stat_rho(plan: ExperimentPlan, region: Region, cfg: Config, side: int) -> list[float]:
    # columns: |X|, aborted, then one value per k; k <= 2 has an uncapped exact path
    m = len(cfg)
    if m > plan.max_points and any(3 <= k <= m for k in plan.k):
        return [m, 1] + [math.nan] * len(plan.k)
    fam = _family(cfg)
    out: list[float] = [m, 0]
    for k in plan.k:
        j = k if plan.kind == "rho_kk" else k - 1
        out.append(rho(fam, None, k, j) if k <= m else 0)
    return out


def _stat_prop11(plan: ExperimentPlan, region: Region, cfg: Config, side: int) -> list[float]:
    f = Functional(plan.functional, plan.k[0], plan.theta)
    m = len(cfg)
    if m > plan.max_points:
        return [math.nan, 1, 0]
    total = 0.0
    fam = _family(cfg) if side == LATTICE and m else None
    for idx in combinations(range(m), f.k):
        if fam is not None and fam.deficiency_mask(sum(1 << i for i in idx)):
            continue
        total += f.value(cfg.points[list(idx)], region)
    bad = 0
    if side == POISSON:
        bad = int(not truncation_chain(m, f.k, plan.R2, lambda idx: f.value(cfg.points[list(idx)], region) > 0))
    return [total, 0, bad]


def _stat_kim(plan: ExperimentPlan, region: Region, cfg: Config, side: int) -> list[float]:
    m = len(cfg)
    exact = _family(cfg).rank_mask((1 << m) - 1) if m else 0
    approx = approx_rank(cfg.points) if m else 0
    event = m <= plan.n / 10 and exact == m
    return [float(event), float(exact == approx), m]


def _stat_cells(plan: ExperimentPlan, region: Region, cfg: Config, side: int) -> list[float]:
    return list(Partition(plan.partition, plan.cells).counts(cfg, region))


def _stat_poisson(plan: ExperimentPlan, region: Region, cfg: Config, side: int) -> list[float]:
    return [len(cfg)]


_STATS: dict[str, Callable] = {
    "rho_kk": _stat_rho,
    "rho_k_km1": _stat_rho,
    "prop11": _stat_prop11,
    "kim_event": _stat_kim,
    "tv_lower": _stat_cells,
    "poisson_ref": _stat_poisson,
}


def truncation_chain(m: int, k: int, R: int, in_event: Callable[[tuple[int, ...]], bool]) -> bool:
    """Check the truncated sieve inequality exactly for one configuration of m independent points.

    ``A`` is the family of k-subsets accepted by ``in_event`` and R is even.
    The left side ``sum_{r<=R} (-1)^r sum_{|X|=k+r} #{Y ⊆ X : Y ∈ A}`` is
    compared with ``1{config ∈ A} + sum_{|X|=k+R} #{Y ⊆ X : Y ∈ A}``. The
    last term is the r = R summand of the left side, and the step between
    them is the classic bound with R1 = R - 1 applied to each Y ∈ A with
    ``B = config minus Y``. Both the intermediate step and the final
    inequality are checked in integer arithmetic.
    """
    if R % 2:
        raise ValueError("R must be even")
    hits = sum(1 for y in combinations(range(m), k) if in_event(y)) if m >= k else 0
    # each Y in A lies in binom(m-k, r) supersets of size k+r
    terms = [hits * math.comb(m - k, r) if m >= k else 0 for r in range(R + 1)]
    lhs = sum((-1) ** r * t for r, t in enumerate(terms))
    whole = int(m == k and hits > 0)
    if R >= 2:
        lo, _, _ = classic_inclusion_exclusion_bounds(m - k if m >= k else 0, R - 1, R)
        if hits * lo > hits * int(m == k) or lhs - terms[R] != hits * lo:
            return False
    return lhs <= whole + terms[R]


# --- chunked runner -------------------------------------------------------

def _rng(seed: int, label: str, side: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(label.encode()), side, chunk]))


def _chunk_configs(plan: ExperimentPlan, region: Region, side: int, chunk: int, size: int) -> list[Config]:
    rng = _rng(plan.seed, plan.label, side, chunk)
    if side == LATTICE:
        chain = HaarChain(plan.n, rng, plan.burnin, plan.thin, seed_tag=(plan.seed, chunk))
        return lattice_configs(chain.sample_bases(size), region)
    return sample_poisson_batch(region, rng, size)


def _run_chunk(args) -> np.ndarray:
    plan, side, chunk, size = args
    region = plan.build_region()
    stat = _STATS[plan.kind]
    return np.array([stat(plan, region, cfg, side) for cfg in _chunk_configs(plan, region, side, chunk, size)],
                    dtype=float)


def run_side(plan: ExperimentPlan, side: int, workers: int = 1, trials: int | None = None) -> np.ndarray:
    """Per-trial statistics for one side, shape (trials, m), in trial order."""
    trials = plan.trials if trials is None else trials
    jobs = []
    for c in range(math.ceil(trials / plan.chunk)):
        size = min(plan.chunk, trials - c * plan.chunk)
        jobs.append((plan, side, c, size))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return np.concatenate(parts, axis=0)


# --- experiments ----------------------------------------------------------

def _histogram(counts: np.ndarray) -> dict[str, int]:
    vals, freq = np.unique(counts.astype(np.int64), return_counts=True)
    return {str(int(v)): int(f) for v, f in zip(vals, freq)}


def _split_aborted(data: np.ndarray) -> tuple[np.ndarray, int]:
    bad = data[:, 1] != 0
    if bad.any():
        log.warning("%d trials aborted: configuration above the point cap", int(bad.sum()))
    return data[~bad], int(bad.sum())


def estimate_rho_kk(plan: ExperimentPlan, workers: int = 1) -> list[McReport]:
    """E rho_k^k(L ∩ S) against lam^k / k!, one report per k."""
    for k in plan.k:
        if not 0 <= k <= plan.n - 1:
            raise ValueError("rho_kk needs 0 <= k <= n-1")
    data = run_side(plan, LATTICE, workers)
    keep, aborted = _split_aborted(data)
    out = []
    for i, k in enumerate(plan.k):
        extras = {"aborted": aborted}
        if i == 0:
            extras["count_histogram"] = _histogram(data[:, 0])
        out.append(McReport.from_samples(f"{plan.label}/k={k}", plan.kind, plan.n, plan.lam, k, keep[:, i + 2],
                                         target=plan.lam ** k / math.factorial(k), gate=plan.gate, extras=extras))
    return out


def estimate_rho_k_km1(plan: ExperimentPlan, workers: int = 1) -> list[McReport]:
    """E rho_k^{k-1}(L ∩ S) against the Schmidt bound; one-sided."""
    for k in plan.k:
        if not 1 <= k <= plan.n - 1:
            raise ValueError("rho_k_km1 needs 1 <= k <= n-1")
    data = run_side(plan, LATTICE, workers)
    keep, aborted = _split_aborted(data)
    out = []
    for i, k in enumerate(plan.k):
        bound = schmidt_bound(plan.n, plan.lam, k)
        rep = McReport.from_samples(f"{plan.label}/k={k}", plan.kind, plan.n, plan.lam, k, keep[:, i + 2],
                                    target=bound, gate=plan.gate, sided="upper",
                                    extras={"aborted": aborted, "ratio_to_bound": None})
        rep.extras["ratio_to_bound"] = rep.mean / bound
        out.append(rep)
    return out


def verify_prop11(plan: ExperimentPlan, f: Functional | None = None, workers: int = 1) -> McReport:
    """Lattice side E sum f(X) iota(X) against Poisson side E sum f(X); two-sample z."""
    if f is not None:
        plan = ExperimentPlan.from_dict({**plan.to_dict(), "functional": f.name, "k": [f.k], "theta": f.theta})
    f = Functional(plan.functional, plan.k[0], plan.theta)
    if f.k >= plan.n:
        raise ValueError("functional must vanish on sets of n or more points (need k < n)")
    if f.k > plan.kmax:
        raise ValueError(f"subset sums are enumerated up to kmax={plan.kmax}")
    lat = run_side(plan, LATTICE, workers)
    poi = run_side(plan, POISSON, workers)
    sides = {}
    for name, arr in (("lattice", lat), ("poisson", poi)):
        keep = arr[:, 1] == 0
        vals = arr[keep, 0]
        sides[name] = {
            "mean": float(vals.mean()),
            "stderr": float(vals.std(ddof=1) / math.sqrt(len(vals))),
            "trials": int(len(vals)),
            "aborted": int((~keep).sum()),
        }
    diff = sides["lattice"]["mean"] - sides["poisson"]["mean"]
    se = math.hypot(sides["lattice"]["stderr"], sides["poisson"]["stderr"])
    chain_bad = int(poi[:, 2].sum())
    extras = {**{f"{s}_{k}": v for s, d in sides.items() for k, v in d.items()},
              "functional": f.name, "truncation_violations": chain_bad, "truncation_R": plan.R2}
    if f.name == "card":
        extras["poisson_closed_form"] = plan.lam ** f.k / math.factorial(f.k)
    rep = McReport.build(f"{plan.label}/{f.name}/k={f.k}", plan.kind, plan.n, plan.lam, f.k, plan.trials, diff, se,
                         target=0.0, gate=plan.gate, extras=extras)
    if chain_bad:
        rep.verdict = "fail"
    return rep


def estimate_kim_event(plan: ExperimentPlan, workers: int = 1) -> McReport:
    """Frequency of {|L ∩ S| <= n/10 and L ∩ S linearly independent}; informational."""
    if plan.lam > plan.n / 30:
        log.warning("%s: lambda=%g is above n/30=%g", plan.label, plan.lam, plan.n / 30)
    data = run_side(plan, LATTICE, workers)
    rep = McReport.from_samples(f"{plan.label}", plan.kind, plan.n, plan.lam, None, data[:, 0], gated=False)
    rep.extras = {"complement_frequency": 1.0 - rep.mean, "rank_paths_agree": int(data[:, 1].sum()),
                  "rank_paths_disagree": int((data[:, 1] == 0).sum()), "count_histogram": _histogram(data[:, 2])}
    if rep.extras["rank_paths_disagree"]:
        rep.verdict = "fail"
    return rep


def tv_plugin(a: Sequence[tuple], b: Sequence[tuple], min_count: int = 5):
    """Plug-in total variation between two samples of hashable outcomes.

    Outcomes seen fewer than ``min_count`` times in both samples share a
    single pooled bin. Returns (tv, bin counts of a, bin counts of b).
    """
    keys_a: dict = {}
    keys_b: dict = {}
    for x in a:
        keys_a[x] = keys_a.get(x, 0) + 1
    for x in b:
        keys_b[x] = keys_b.get(x, 0) + 1
    kept = sorted(x for x in set(keys_a) | set(keys_b)
                  if keys_a.get(x, 0) >= min_count or keys_b.get(x, 0) >= min_count)
    ca = [keys_a.get(x, 0) for x in kept]
    cb = [keys_b.get(x, 0) for x in kept]
    ca.append(len(a) - sum(ca))
    cb.append(len(b) - sum(cb))
    ca_arr, cb_arr = np.array(ca, dtype=float), np.array(cb, dtype=float)
    tv = 0.5 * float(np.abs(ca_arr / len(a) - cb_arr / len(b)).sum())
    return tv, ca_arr, cb_arr


def estimate_tv_lower_bound(plan: ExperimentPlan, partition: Partition | None = None, workers: int = 1) -> McReport:
    """Plug-in TV between cell-count vectors of L ∩ S and P ∩ S, with bootstrap CI."""
    if partition is not None:
        plan = ExperimentPlan.from_dict({**plan.to_dict(), "partition": partition.kind, "cells": partition.cells})
    part = Partition(plan.partition, plan.cells)
    region = plan.build_region()
    part.validate(region)
    lat = [tuple(int(v) for v in row) for row in run_side(plan, LATTICE, workers)]
    poi = [tuple(int(v) for v in row) for row in run_side(plan, POISSON, workers)]
    tv, ca, cb = tv_plugin(lat, poi, plan.min_bin)
    rng = _rng(plan.seed, plan.label, 2, 0)
    boots = np.empty(plan.bootstrap)
    for i in range(plan.bootstrap):
        ra = rng.multinomial(len(lat), ca / ca.sum())
        rb = rng.multinomial(len(poi), cb / cb.sum())
        boots[i] = 0.5 * np.abs(ra / len(lat) - rb / len(poi)).sum()
    se = float(boots.std(ddof=1)) if plan.bootstrap > 1 else 0.0
    rep = McReport.build(plan.label, plan.kind, plan.n, plan.lam, None, plan.trials, tv, se, gated=False)
    rep.extras = {"bootstrap": plan.bootstrap, "partition": part.kind, "cells": part.cells, "bins": len(ca),
                  "bootstrap_percentile_ci": [float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975))]}
    return rep


def poisson_reference(plan: ExperimentPlan, workers: int = 1) -> list[McReport]:
    """P(|P ∩ S| = 0) against e^{-lam}, chi-square fit, and E binom(N, m) = lam^m/m!."""
    counts = run_side(plan, POISSON, workers)[:, 0]
    lam = plan.lam
    top = max(2, int(lam + 6 * math.sqrt(lam) + 4))
    obs = np.array([np.sum(counts == j) for j in range(top)] + [np.sum(counts >= top)], dtype=float)
    probs = np.array([poisson_pmf(lam, j) for j in range(top)])
    probs = np.append(probs, max(0.0, 1.0 - probs.sum()))
    exp = probs * len(counts)
    # merge sparse tail bins so every expected count is at least 5
    while len(exp) > 2 and exp[-1] < 5:
        exp[-2] += exp[-1]
        obs[-2] += obs[-1]
        exp, obs = exp[:-1], obs[:-1]
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    pval = float(stats.chi2.sf(chi2, len(exp) - 1))
    zero = McReport.from_samples(f"{plan.label}/P(N=0)", plan.kind, plan.n, lam, 0, counts == 0,
                                 target=math.exp(-lam), gate=plan.gate,
                                 extras={"chi2": chi2, "chi2_dof": len(exp) - 1, "chi2_pvalue": pval})
    if pval <= 1e-3:
        zero.verdict = "fail"
    out = [zero]
    for m in plan.k:
        vals = np.array([math.comb(int(c), m) for c in counts], dtype=float)
        out.append(McReport.from_samples(f"{plan.label}/binom(N,{m})", plan.kind, plan.n, lam, m, vals,
                                         target=lam ** m / math.factorial(m), gate=plan.gate))
    return out


def run_plan(plan: ExperimentPlan, workers: int = 1) -> list[McReport]:
    if plan.kind == "rho_kk":
        return estimate_rho_kk(plan, workers)
    if plan.kind == "rho_k_km1":
        return estimate_rho_k_km1(plan, workers)
    if plan.kind == "prop11":
        return [verify_prop11(plan, workers=workers)]
    if plan.kind == "kim_event":
        return [estimate_kim_event(plan, workers)]
    if plan.kind == "tv_lower":
        return [estimate_tv_lower_bound(plan, workers=workers)]
    return poisson_reference(plan, workers)


@dataclass
class Summary:
    reports: list[McReport]
    exit_code: int
    message: str
    counts: dict[str, int]


def aggregate(reports: Sequence[McReport]) -> Summary:
    """Exit 0 iff every gated report passes, 1 on any failure, 2 for an empty suite."""
    reports = list(reports)
    counts = {v: sum(r.verdict == v for r in reports) for v in ("pass", "fail", "informational")}
    if not reports:
        return Summary(reports, 2, "no experiments", counts)
    if counts["fail"]:
        failed = ", ".join(r.label for r in reports if r.verdict == "fail")
        return Summary(reports, 1, f"{counts['fail']} failed: {failed}", counts)
    return Summary(reports, 0, f"{counts['pass']} passed, {counts['informational']} informational", counts)
