"""Symbols on the sphere: smooth callables, zonal profiles, and piecewise-constant
functions on arrangements of spherical caps (boolean combinations included)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import as_unit, from_spherical, spherical_coords

NORTH = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class Cap:
    """Open cap {x : d(x, center) < radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_unit(np.asarray(self.center, dtype=float), tol=1e-9)
        object.__setattr__(self, "center", c / np.linalg.norm(c))

    @classmethod
    def polar(cls, theta: float, phi: float, radius: float) -> "Cap":
        return cls(from_spherical(math.cos(theta), phi), radius)

    def contains(self, points: np.ndarray) -> np.ndarray:
        d = np.arccos(np.clip(np.asarray(points) @ self.center, -1.0, 1.0))
        return d < self.radius

    @property
    def zonal(self) -> bool:
        return abs(abs(self.center[2]) - 1.0) < 1e-15

    def u_extent(self) -> tuple[float, float]:
        """cos(theta) of the two latitudes where a ring is tangent to the boundary circle."""
        theta_c = math.acos(max(-1.0, min(1.0, self.center[2])))
        far = theta_c + self.radius
        if far > math.pi:
            far = 2 * math.pi - far
        return math.cos(far), math.cos(abs(theta_c - self.radius))

    @property
    def measure(self) -> float:
        """Normalized area (total sphere = 1)."""
        return (1.0 - math.cos(min(self.radius, math.pi))) / 2.0


class Region:
    """Membership predicate built from caps with complement/intersection/union."""

    def caps(self) -> list[Cap]:
        raise NotImplementedError

    def from_bits(self, bits: dict[int, np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return self.from_bits({id(c): c.contains(pts) for c in self.caps()})

    @property
    def zonal(self) -> bool:
        return all(c.zonal for c in self.caps())

    def __invert__(self) -> "Region":
        return Complement(self)

    def __and__(self, other: "Region") -> "Region":
        return Intersection((self, other))

    def __or__(self, other: "Region") -> "Region":
        return Union((self, other))

    def indicator(self) -> "PiecewiseSymbol":
        return PiecewiseSymbol.from_regions([self], [1.0])


@dataclass(frozen=True, eq=False)
class CapRegion(Region):
    cap: Cap

    def caps(self):
        return [self.cap]

    def from_bits(self, bits):
        return bits[id(self.cap)]


@dataclass(frozen=True, eq=False)
class Everything(Region):
    def caps(self):
        return []

    def from_bits(self, bits):
        n = len(next(iter(bits.values()))) if bits else 1
        return np.ones(n, dtype=bool)

    def contains(self, points):
        return np.ones(len(np.atleast_2d(points)), dtype=bool)


@dataclass(frozen=True, eq=False)
class Complement(Region):
    inner: Region

    def caps(self):
        return self.inner.caps()

    def from_bits(self, bits):
        return ~self.inner.from_bits(bits)

    def contains(self, points):
        return ~self.inner.contains(points)


@dataclass(frozen=True, eq=False)
class Intersection(Region):
    parts: tuple[Region, ...]

    def caps(self):
        return _unique_caps(p.caps() for p in self.parts)

    def from_bits(self, bits):
        out = self.parts[0].from_bits(bits)
        for p in self.parts[1:]:
            out = out & p.from_bits(bits)
        return out


@dataclass(frozen=True, eq=False)
class Union(Region):
    parts: tuple[Region, ...]

    def caps(self):
        return _unique_caps(p.caps() for p in self.parts)

    def from_bits(self, bits):
        out = self.parts[0].from_bits(bits)
        for p in self.parts[1:]:
            out = out | p.from_bits(bits)
        return out


def _unique_caps(groups) -> list[Cap]:
    seen, out = set(), []
    for g in groups:
        for c in g:
            if id(c) not in seen:
                seen.add(id(c))
                out.append(c)
    return out


def cap(center, radius: float) -> CapRegion:
    return CapRegion(Cap(np.asarray(center, dtype=float), float(radius)))


def polar_cap(theta: float, phi: float, radius: float) -> CapRegion:
    return CapRegion(Cap.polar(theta, phi, radius))


def hemisphere(center=NORTH) -> CapRegion:
    return cap(center, math.pi / 2)


def empty_region() -> Region:
    return Complement(Everything())


def whole_sphere() -> Region:
    return Everything()


class Symbol:
    """A real function on the sphere. Subclasses carry the structure the
    quantizer can exploit (``kind`` is "smooth", "zonal" or "piecewise")."""

    kind = "smooth"

    def __call__(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class SmoothSymbol(Symbol):
    func: Callable[[np.ndarray], np.ndarray]
    kind = "smooth"

    def __call__(self, points):
        return np.asarray(self.func(np.atleast_2d(points)), dtype=float)


@dataclass(frozen=True, eq=False)
class ZonalSymbol(Symbol):
    """f(x) = profile(cos theta). ``breakpoints`` lists the u-values where the
    profile is not smooth; between breakpoints it should be a polynomial of
    degree <= ``degree`` for the exact quantizer to be exact."""

    profile: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...] = ()
    degree: int = 8
    kind = "zonal"

    def __call__(self, points):
        u, _ = spherical_coords(np.atleast_2d(points))
        return np.asarray(self.profile(u), dtype=float) * np.ones_like(u)


def constant(c: float) -> ZonalSymbol:
    return ZonalSymbol(lambda u: np.full_like(np.asarray(u, dtype=float), c), (), 0)


def zonal_indicator(u0: float, above: bool = True) -> ZonalSymbol:
    """Indicator of {cos theta > u0} (or < u0)."""
    if above:
        return ZonalSymbol(lambda u: (np.asarray(u) > u0).astype(float), (u0,), 0)
    return ZonalSymbol(lambda u: (np.asarray(u) < u0).astype(float), (u0,), 0)


@dataclass(frozen=True, eq=False)
class PiecewiseSymbol(Symbol):
    """Piecewise-constant function on the arrangement of ``caps``.

    ``value`` maps a boolean membership matrix (n_points x n_caps) to values.
    """

    caps: tuple[Cap, ...]
    value: Callable[[np.ndarray], np.ndarray]
    kind = "piecewise"

    def __call__(self, points):
        pts = np.atleast_2d(points)
        if not self.caps:
            return np.asarray(self.value(np.zeros((len(pts), 0), dtype=bool)), dtype=float)
        bits = np.stack([c.contains(pts) for c in self.caps], axis=1)
        return np.asarray(self.value(bits), dtype=float)

    @property
    def zonal(self) -> bool:
        return all(c.zonal for c in self.caps)

    @classmethod
    def from_regions(cls, regions: Sequence[Region], weights: Sequence[float]) -> "PiecewiseSymbol":
        """Simple function sum_i w_i * chi_{A_i}."""
        caps = tuple(_unique_caps(r.caps() for r in regions))
        weights = [float(w) for w in weights]

        def value(bits, caps=caps, regions=tuple(regions), weights=weights):
            lookup = {id(c): bits[:, i] for i, c in enumerate(caps)}
            out = np.zeros(len(bits))
            for r, w in zip(regions, weights):
                if isinstance(r, Everything):
                    out += w
                else:
                    out += w * r.from_bits(lookup)
            return out

        return cls(caps, value)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "PiecewiseSymbol":
        """Pointwise image, e.g. ``sym.map(np.sqrt)``."""
        inner = self.value
        return PiecewiseSymbol(self.caps, lambda bits: fn(inner(bits)))

    def __mul__(self, other: "PiecewiseSymbol") -> "PiecewiseSymbol":
        caps = tuple(_unique_caps([self.caps, other.caps]))
        ia = [caps.index(c) for c in self.caps]
        ib = [caps.index(c) for c in other.caps]
        va, vb = self.value, other.value
        return PiecewiseSymbol(caps, lambda bits: va(bits[:, ia]) * vb(bits[:, ib]))

    def scale(self, c: float) -> "PiecewiseSymbol":
        return self.map(lambda v: c * v)


def product(symbols: Sequence[PiecewiseSymbol]) -> PiecewiseSymbol:
    out = symbols[0]
    for s in symbols[1:]:
        out = out * s
    return out


def cover_partition(regions: Sequence[Region]) -> list[PiecewiseSymbol]:
    """f_i = chi_i / chi with chi = sum_j chi_j (zero where nothing covers)."""
    caps = tuple(_unique_caps(r.caps() for r in regions))
    regions = tuple(regions)

    def member_matrix(bits):
        lookup = {id(c): bits[:, i] for i, c in enumerate(caps)}
        return np.stack([r.from_bits(lookup) if not isinstance(r, Everything)
                         else np.ones(len(bits), dtype=bool) for r in regions], axis=1)

    def make(i):
        def value(bits):
            m = member_matrix(bits)
            chi = m.sum(axis=1)
            return np.where(chi > 0, m[:, i] / np.maximum(chi, 1), 0.0)
        return PiecewiseSymbol(caps, value)

    return [make(i) for i in range(len(regions))]


def cover_multiplicity(regions: Sequence[Region]) -> PiecewiseSymbol:
    return PiecewiseSymbol.from_regions(regions, [1.0] * len(regions))
