"""Unit-intensity Poisson process restricted to a region, and the Config carrier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .regions import Region

__all__ = ["Config", "poisson_pmf", "sample_poisson_count", "sample_poisson", "INVERSION_MAX_LAMBDA"]

INVERSION_MAX_LAMBDA = 30.0
SOURCES = ("lattice", "poisson", "synthetic")


@dataclass(frozen=True, eq=False)
class Config:
    """A finite point configuration in a region.

    ``points`` has shape (m, n). ``coeffs`` holds the exact integer
    coefficient vectors of lattice points (empty for Poisson draws).
    """

    points: np.ndarray
    coeffs: tuple[tuple[int, ...], ...] = ()
    source: str = "synthetic"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown config source {self.source!r}")
        if self.coeffs and len(self.coeffs) != len(self.points):
            raise ValueError("coeffs and points differ in length")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def has_coeffs(self) -> bool:
        return len(self.coeffs) == len(self.points) and (len(self.points) > 0 or self.source == "lattice")

    def sorted(self) -> "Config":
        if len(self) == 0:
            return self
        order = np.lexsort(self.points.T[::-1])
        coeffs = tuple(self.coeffs[i] for i in order) if self.coeffs else ()
        return Config(self.points[order], coeffs, self.source)


def poisson_pmf(lam: float, k: int) -> float:
    """``e^{-lam} lam^k / k!`` evaluated in log space."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if k < 0:
        return 0.0
    return math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1))


def sample_poisson_count(lam: float, rng: np.random.Generator, size: int | None = None):
    """Poisson(lam) counts; sequential CDF inversion when ``lam <= 30``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if lam > INVERSION_MAX_LAMBDA:
        return rng.poisson(lam, size)
    m = 1 if size is None else size
    u = rng.random(m)
    # cdf table up to where the tail is below double precision
    kmax = int(lam + 40 * math.sqrt(lam) + 40)
    pmf = np.array([poisson_pmf(lam, k) for k in range(kmax + 1)])
    cdf = np.cumsum(pmf)
    counts = np.searchsorted(cdf, u, side="right")
    counts = np.minimum(counts, kmax)
    return int(counts[0]) if size is None else counts.astype(np.int64)


def sample_poisson(region: Region, rng: np.random.Generator) -> Config:
    """``P ∩ S``: a Poisson(vol S) number of independent uniform points of S."""
    m = sample_poisson_count(region.volume(), rng)
    return Config(region.sample_uniform(rng, m), (), "poisson")


def sample_poisson_batch(region: Region, rng: np.random.Generator, count: int) -> list[Config]:
    ms = sample_poisson_count(region.volume(), rng, count)
    pts = region.sample_uniform(rng, int(ms.sum()))
    out = []
    pos = 0
    for m in ms:
        out.append(Config(pts[pos:pos + m], (), "poisson"))
        pos += m
    return out
