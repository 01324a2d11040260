"""Asymmetric regions S of R^n with exact volume, membership and uniform sampling.

Three parametric families are supported. Each one lies in the open half-space
``x_1 > 0``, so ``S`` and ``-S`` are disjoint by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

__all__ = [
    "Region",
    "HalfBall",
    "HalfShell",
    "ShiftedBox",
    "volume",
    "membership",
    "sample_uniform",
    "half_ball_with_volume",
    "unit_ball_volume",
    "region_from_dict",
    "region_to_dict",
]


def unit_ball_volume(n: int) -> float:
    """Volume of the unit Euclidean ball in R^n, pi^(n/2) / Gamma(n/2 + 1)."""
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0))


class Region:
    """Common interface of the region families."""

    dim: int

    def volume(self) -> float:
        raise NotImplementedError

    def contains(self, x: np.ndarray) -> np.ndarray | bool:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def circumradius(self) -> float:
        """Radius of the smallest origin-centred ball containing the region."""
        raise NotImplementedError

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"point of dimension {x.shape[-1]} tested against a {self.dim}-dimensional region")
        return x

    def sample_uniform(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Uniform points in the region by rejection from the bounding box.

        The expected number of box draws per accepted point is
        ``box volume / volume()``; see ``rejection_factor``.
        """
        m = 1 if size is None else int(size)
        lo, hi = self.bounding_box()
        out = np.empty((m, self.dim))
        filled = 0
        accept = 1.0 / self.rejection_factor()
        while filled < m:
            need = m - filled
            batch = max(16, int(1.2 * need / accept) + 8)
            cand = lo + (hi - lo) * rng.random((batch, self.dim))
            ok = cand[self.contains(cand)]
            take = min(len(ok), need)
            out[filled:filled + take] = ok[:take]
            filled += take
        return out[0] if size is None else out

    def rejection_factor(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.prod(hi - lo)) / self.volume()


@dataclass(frozen=True)
class HalfBall(Region):
    """``{x : |x| < radius, x_1 > 0}``; rejection factor ``2^n / unit_ball_volume(n)``."""

    dim: int
    radius: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise ValueError("radius must be a positive finite number")

    def volume(self) -> float:
        return 0.5 * self.radius ** self.dim * unit_ball_volume(self.dim)

    def contains(self, x):
        x = self._check(x)
        return (x[..., 0] > 0) & (np.einsum("...i,...i->...", x, x) < self.radius ** 2)

    def bounding_box(self):
        lo = np.full(self.dim, -self.radius)
        lo[0] = 0.0
        return lo, np.full(self.dim, self.radius)

    def circumradius(self) -> float:
        return self.radius


@dataclass(frozen=True)
class HalfShell(Region):
    """``{x : r_in < |x| < r_out, x_1 > 0}``."""

    dim: int
    r_in: float
    r_out: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if not 0 < self.r_in < self.r_out or not math.isfinite(self.r_out):
            raise ValueError("half shell needs 0 < r_in < r_out")

    def volume(self) -> float:
        return 0.5 * (self.r_out ** self.dim - self.r_in ** self.dim) * unit_ball_volume(self.dim)

    def contains(self, x):
        x = self._check(x)
        sq = np.einsum("...i,...i->...", x, x)
        return (x[..., 0] > 0) & (sq < self.r_out ** 2) & (sq > self.r_in ** 2)

    def bounding_box(self):
        lo = np.full(self.dim, -self.r_out)
        lo[0] = 0.0
        return lo, np.full(self.dim, self.r_out)

    def circumradius(self) -> float:
        return self.r_out


@dataclass(frozen=True)
class ShiftedBox(Region):
    """Open box ``prod (lower_i, lower_i + edges_i)`` with ``lower_1 > 0``."""

    dim: int
    lower: tuple[float, ...]
    edges: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "edges", tuple(float(v) for v in self.edges))
        if len(self.lower) != self.dim or len(self.edges) != self.dim:
            raise ValueError("lower corner and edges must have length dim")
        if not self.lower[0] > 0:
            raise ValueError("shifted box must lie in x_1 > 0")
        if not all(e > 0 and math.isfinite(e) for e in self.edges):
            raise ValueError("box edges must be positive")

    def volume(self) -> float:
        return math.prod(self.edges)

    def contains(self, x):
        x = self._check(x)
        lo, hi = self.bounding_box()
        return np.all((x > lo) & (x < hi), axis=-1)

    def bounding_box(self):
        lo = np.array(self.lower)
        return lo, lo + np.array(self.edges)

    def circumradius(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.sqrt(np.sum(np.maximum(np.abs(lo), np.abs(hi)) ** 2)))


def volume(region: Region) -> float:
    return region.volume()


def membership(region: Region, x) -> bool:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("membership takes a single point")
    return bool(region.contains(x))


def sample_uniform(region: Region, rng: np.random.Generator) -> np.ndarray:
    return region.sample_uniform(rng)


def half_ball_with_volume(n: int, lam: float) -> HalfBall:
    """Half-ball ``{|x| < r, x_1 > 0}`` in R^n whose volume is ``lam``."""
    if n < 1:
        raise ValueError("dimension must be positive")
    if not lam > 0:
        raise ValueError("volume must be positive")
    r = math.exp((math.log(2.0 * lam) - math.log(unit_ball_volume(n))) / n)
    return HalfBall(n, r)


def _scale_to_volume(region: Region, lam: float) -> Region:
    s = (lam / region.volume()) ** (1.0 / region.dim)
    if isinstance(region, HalfBall):
        return HalfBall(region.dim, region.radius * s)
    if isinstance(region, HalfShell):
        return HalfShell(region.dim, region.r_in * s, region.r_out * s)
    return ShiftedBox(region.dim, tuple(v * s for v in region.lower), tuple(v * s for v in region.edges))


def region_from_dict(params: dict[str, Any], dim: int | None = None) -> Region:
    """Build a region from a config table.

    Recognised keys: ``shape`` (``half_ball``, ``half_shell`` or ``shifted_box``),
    ``n`` (or the ``dim`` argument), the shape parameters, and optionally
    ``target_volume``, which rescales the shape about the origin.
    """
    params = dict(params)
    shape = params.get("shape", "half_ball")
    n = int(params.get("n", dim if dim is not None else 0))
    if n < 1:
        raise ValueError("region table needs a positive dimension n")
    target = params.get("target_volume")
    if shape == "half_ball":
        if "radius" in params:
            region: Region = HalfBall(n, float(params["radius"]))
        elif target is not None:
            return half_ball_with_volume(n, float(target))
        else:
            raise ValueError("half_ball needs radius or target_volume")
    elif shape == "half_shell":
        r_out = float(params.get("r_out", 1.0))
        r_in = float(params.get("r_in", r_out * float(params.get("inner_ratio", 0.5))))
        region = HalfShell(n, r_in, r_out)
    elif shape == "shifted_box":
        lower = params.get("lower", [1.0] + [0.0] * (n - 1))
        edges = params.get("edges", [1.0] * n)
        region = ShiftedBox(n, tuple(lower), tuple(edges))
    else:
        raise ValueError(f"unknown region shape {shape!r}")
    if target is not None:
        region = _scale_to_volume(region, float(target))
    return region


def region_to_dict(region: Region) -> dict[str, Any]:
    if isinstance(region, HalfBall):
        return {"shape": "half_ball", "n": region.dim, "radius": region.radius}
    if isinstance(region, HalfShell):
        return {"shape": "half_shell", "n": region.dim, "r_in": region.r_in, "r_out": region.r_out}
    if isinstance(region, ShiftedBox):
        return {"shape": "shifted_box", "n": region.dim, "lower": list(region.lower), "edges": list(region.edges)}
    raise TypeError(f"not a region: {region!r}")
