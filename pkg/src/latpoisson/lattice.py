"""Covolume-one lattices: Haar sampling, LLL reduction and ball enumeration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .pointprocess import Config
from .regions import Region

__all__ = [
    "DEFAULT_BURNIN",
    "DEFAULT_THIN",
    "MIN_STEPS",
    "LOVASZ_DELTA",
    "NumericalAbort",
    "Provenance",
    "UnimodularLattice",
    "LatticePoint",
    "HaarChain",
    "haar_sample",
    "haar_sample_exact_2d",
    "fundamental_domain_2d",
    "lll_reduce",
    "is_lll_reduced",
    "enumerate_in_ball",
    "restrict_to_region",
    "shortest_vector_length",
]

DEFAULT_BURNIN = 5000
DEFAULT_THIN = 50
MIN_STEPS = 1000
REDUCE_EVERY = 10
SHEAR_SCALE = 2.0
LOVASZ_DELTA = 0.99
DEFAULT_ENUM_CAP = 100_000


class NumericalAbort(RuntimeError):
    """Determinant drift in the walk or an enumeration over its point cap."""


@dataclass(frozen=True)
class Provenance:
    sampler: str
    seed: tuple[int, ...] = ()
    burnin: int = 0
    thin: int = 0
    index: int = 0


@dataclass(frozen=True, eq=False)
class UnimodularLattice:
    """Lattice ``basis @ Z^n`` of covolume one; columns of ``basis`` span it."""

    basis: np.ndarray
    provenance: Provenance = field(default_factory=lambda: Provenance("explicit"))

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("basis must be a square matrix")
        d = float(np.linalg.det(b))
        if abs(abs(d) - 1.0) > 1e-9:
            raise ValueError(f"basis has determinant {d!r}, expected covolume one")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    def det(self) -> float:
        return float(np.linalg.det(self.basis))

    def gram_schmidt_norms(self) -> np.ndarray:
        _, _, bb = _kernels.gram_schmidt(self.basis)
        return np.sqrt(bb)


@dataclass(frozen=True, eq=False)
class LatticePoint:
    coords: np.ndarray
    coeffs: tuple[int, ...]


class HaarChain:
    """Markov chain on covolume-one lattices whose stationary law is Haar.

    Left multiplication by any element of SL_n(R) preserves the Haar
    probability measure, so the randomly rotated shears applied by the walk
    leave it invariant; burn-in and thinning control how close the emitted
    lattices are to independent Haar draws. The chain starts from Z^n.
    """

    def __init__(self, n: int, rng: np.random.Generator, burnin: int = DEFAULT_BURNIN,
                 thin: int = DEFAULT_THIN, seed_tag: tuple[int, ...] = ()):
        if n < 2:
            raise ValueError("Haar chain needs n >= 2")
        if burnin < 0 or thin < 1:
            raise ValueError("burn-in must be >= 0 and thinning >= 1")
        self.n = n
        self.rng = rng
        self.burnin = burnin
        self.thin = thin
        self.seed_tag = seed_tag
        self._basis = np.eye(n)
        self._burned = False
        self._emitted = 0

    def _run(self, burnin: int, nout: int) -> np.ndarray:
        total = burnin + self.thin * nout
        z = self.rng.standard_normal((total, 2 * self.n + 1))
        out, basis, status = _kernels.walk(self._basis, z, burnin, self.thin, nout,
                                           REDUCE_EVERY, LOVASZ_DELTA, SHEAR_SCALE)
        if status != _kernels.WALK_OK:
            raise NumericalAbort(f"determinant drifted beyond {_kernels.DET_TOL} at step {status}")
        self._basis = basis
        return out

    def sample_bases(self, count: int) -> np.ndarray:
        """Next ``count`` thinned bases as a (count, n, n) array."""
        burnin = 0 if self._burned else self.burnin
        self._burned = True
        out = self._run(burnin, count)
        self._emitted += count
        return out

    def sample(self, count: int) -> list[UnimodularLattice]:
        start = self._emitted
        bases = self.sample_bases(count)
        return [
            UnimodularLattice(b, Provenance("mcmc", self.seed_tag, self.burnin, self.thin, start + i))
            for i, b in enumerate(bases)
        ]


def haar_sample(n: int, rng: np.random.Generator, steps: int = DEFAULT_BURNIN) -> UnimodularLattice:
    """One approximately Haar-distributed lattice: ``steps`` walk steps from Z^n."""
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be at least {MIN_STEPS}")
    chain = HaarChain(n, rng, burnin=steps - 1, thin=1)
    basis = chain.sample_bases(1)[0]
    return UnimodularLattice(basis, Provenance("mcmc", (), steps, 1, 0))


def fundamental_domain_2d(rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Points (x, y) of ``|x| <= 1/2, x^2 + y^2 >= 1`` with density ∝ dx dy / y^2.

    Rejection from the strip ``y >= sqrt(3)/2``; acceptance rate
    ``(pi/3) / (2/sqrt(3)) ~ 0.907``.
    """
    y0 = math.sqrt(3.0) / 2.0
    xs = np.empty(size)
    ys = np.empty(size)
    filled = 0
    while filled < size:
        m = int((size - filled) * 1.15) + 8
        x = rng.random(m) - 0.5
        y = y0 / (1.0 - rng.random(m))
        ok = x * x + y * y >= 1.0
        take = min(int(ok.sum()), size - filled)
        xs[filled:filled + take] = x[ok][:take]
        ys[filled:filled + take] = y[ok][:take]
        filled += take
    return xs, ys


def _bases_from_domain(x: np.ndarray, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    s = 1.0 / np.sqrt(y)
    base = np.zeros((len(x), 2, 2))
    base[:, 0, 0] = s
    base[:, 0, 1] = x * s
    base[:, 1, 1] = y * s
    c, t = np.cos(theta), np.sin(theta)
    rot = np.stack([np.stack([c, -t], -1), np.stack([t, c], -1)], -2)
    return rot @ base


def haar_sample_exact_2d(rng: np.random.Generator, size: int | None = None):
    """Exact Haar draw on covolume-one planar lattices.

    The shape ``tau = x + i y`` is drawn from the modular fundamental domain
    with hyperbolic density and the lattice ``Z + tau Z`` (scaled to
    covolume one) is turned by a uniform rotation.
    """
    m = 1 if size is None else size
    x, y = fundamental_domain_2d(rng, m)
    theta = 2.0 * np.pi * rng.random(m)
    bases = _bases_from_domain(x, y, theta)
    lats = [UnimodularLattice(b, Provenance("exact2d", (), 0, 0, i)) for i, b in enumerate(bases)]
    return lats[0] if size is None else lats


def lll_reduce(lat: UnimodularLattice, delta: float = LOVASZ_DELTA) -> UnimodularLattice:
    reduced, _ = _kernels.lll(np.array(lat.basis), delta)
    return UnimodularLattice(reduced, lat.provenance)


def is_lll_reduced(basis: np.ndarray, delta: float = LOVASZ_DELTA, eps: float = 1e-9) -> bool:
    _, mu, bb = _kernels.gram_schmidt(np.asarray(basis, dtype=float))
    n = len(bb)
    for i in range(n):
        for j in range(i):
            if abs(mu[i, j]) > 0.5 + eps:
                return False
    return all(bb[k] >= (delta - mu[k, k - 1] ** 2) * bb[k - 1] * (1 - eps) for k in range(1, n))


def enumerate_in_ball(lat: UnimodularLattice, radius: float,
                      cap: int = DEFAULT_ENUM_CAP) -> list[LatticePoint]:
    """Every nonzero lattice point with ``|x| <= radius``, lexicographic in coefficients.

    Raises:
        NumericalAbort: if the expected number of points (the ball volume,
            since the covolume is one) or the actual count exceeds ``cap``.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    n = lat.n
    expected = math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1)) * radius ** n
    if expected > cap:
        raise NumericalAbort(f"about {expected:.3g} points expected, cap is {cap}")
    coeffs, coords, count = _kernels.enumerate_ball(np.array(lat.basis), float(radius), cap, LOVASZ_DELTA)
    if count < 0:
        raise NumericalAbort(f"more than {cap} lattice points within radius {radius}")
    return [LatticePoint(coords[i], tuple(int(v) for v in coeffs[i])) for i in range(count)]


def restrict_to_region(points, region: Region, radius: float | None = None) -> Config:
    """The configuration ``L ∩ S`` from points enumerated in a ball of ``radius``.

    ``radius`` is the enumeration radius; when given it must cover the region.
    """
    if radius is not None and radius < region.circumradius() * (1 - 1e-12):
        raise ValueError("region is not contained in the enumeration ball")
    points = list(points)
    if not points:
        return Config(np.zeros((0, region.dim)), (), "lattice")
    coords = np.array([p.coords for p in points])
    keep = region.contains(coords)
    kept = [p for p, k in zip(points, keep) if k]
    return Config(
        np.array([p.coords for p in kept]).reshape(len(kept), region.dim),
        tuple(p.coeffs for p in kept),
        "lattice",
    )


def shortest_vector_length(lat: UnimodularLattice) -> float:
    reduced, _ = _kernels.lll(np.array(lat.basis), LOVASZ_DELTA)
    r = float(np.linalg.norm(reduced[:, 0]))
    pts = enumerate_in_ball(UnimodularLattice(reduced), r * (1 + 1e-9))
    return min(float(np.linalg.norm(p.coords)) for p in pts)


def lattice_configs(bases: np.ndarray, region: Region, cap: int = DEFAULT_ENUM_CAP) -> list[Config]:
    """``L ∩ S`` for a stack of bases, sharing one compiled enumeration pass."""
    radius = region.circumradius()
    offsets, coeffs, coords, bad = _kernels.enumerate_batch(np.ascontiguousarray(bases), radius, cap, LOVASZ_DELTA)
    if bad >= 0:
        raise NumericalAbort(f"more than {cap} lattice points within radius {radius}")
    keep = region.contains(coords) if len(coords) else np.zeros(0, dtype=bool)
    out = []
    for t in range(len(bases)):
        a, b = offsets[t], offsets[t + 1]
        sel = np.nonzero(keep[a:b])[0] + a
        if len(sel) == 0:
            out.append(Config(np.zeros((0, region.dim)), (), "lattice"))
        else:
            out.append(Config(coords[sel], tuple(tuple(int(v) for v in coeffs[i]) for i in sel), "lattice"))
    return out
