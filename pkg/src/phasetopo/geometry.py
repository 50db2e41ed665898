"""Metric geometry of the unit 2-sphere: distances, sensor nets, partitions of unity."""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

UNIT_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid geometric input or violated admissibility condition."""


def as_unit(p, *, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate that ``p`` holds unit 3-vectors (last axis) and return it as an array."""
    v = np.asarray(p, dtype=float)
    if v.shape[-1] != 3:
        raise GeometryError(f"expected 3-vectors, got shape {v.shape}")
    norms = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise GeometryError("points must be unit vectors")
    return v


def chord_to_angle(chord):
    return 2.0 * np.arcsin(np.clip(np.asarray(chord) / 2.0, 0.0, 1.0))


def angle_to_chord(angle):
    return 2.0 * np.sin(np.asarray(angle) / 2.0)


def geodesic_distance(p, q) -> float:
    """Great-circle distance in radians between two unit vectors."""
    p = as_unit(p)
    q = as_unit(q)
    return float(np.arccos(np.clip(np.dot(p, q), -1.0, 1.0)))


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    g = np.clip(points @ points.T, -1.0, 1.0)
    d = np.arccos(g)
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def spherical_coords(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (u, phi) with u = cos(theta) = z and phi in [0, 2pi)."""
    u = np.clip(points[..., 2], -1.0, 1.0)
    phi = np.mod(np.arctan2(points[..., 1], points[..., 0]), 2 * np.pi)
    return u, phi


def from_spherical(u, phi) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    return np.stack([s * np.cos(phi), s * np.sin(phi), u * np.ones_like(phi)], axis=-1)


@dataclass(frozen=True, eq=False)
class SensorNet:
    points: np.ndarray
    distances: np.ndarray = field(repr=False)
    net_radius: float | None = None

    @classmethod
    def from_points(cls, points, net_radius: float | None = None) -> "SensorNet":
        pts = as_unit(np.atleast_2d(np.asarray(points, dtype=float)), tol=1e-9)
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        off = np.abs(norms - 1.0) > 4e-16  # leave unit rows bit-identical (CSV round trips)
        pts = np.where(off, pts / norms, pts)
        if len(pts) == 0:
            raise GeometryError("a sensor net needs at least one point")
        pts.setflags(write=False)
        dist = pairwise_distances(pts)
        dist.setflags(write=False)
        return cls(pts, dist, net_radius)

    def __len__(self) -> int:
        return len(self.points)

    @functools.cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def nearest_distance(self, probes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        chord, idx = self.tree.query(probes)
        return chord_to_angle(chord), idx

    def fingerprint(self) -> str:
        import hashlib

        return hashlib.sha256(np.ascontiguousarray(self.points).tobytes()).hexdigest()[:16]

    def with_radius(self, rho: float) -> "SensorNet":
        return SensorNet(self.points, self.distances, rho)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z"])
            for p in self.points:
                w.writerow([repr(float(c)) for c in p])

    @classmethod
    def from_csv(cls, path) -> "SensorNet":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "x":
                    continue
                rows.append([float(c) for c in row[:3]])
        if not rows:
            raise GeometryError(f"no sensors found in {path}")
        return cls.from_points(np.array(rows))


def fibonacci_net(n: int) -> SensorNet:
    """Golden-angle spiral of ``n`` points, equal-area in latitude."""
    if n < 1:
        raise GeometryError("fibonacci_net needs n >= 1")
    if n == 1:
        return SensorNet.from_points([[0.0, 0.0, 1.0]])
    i = np.arange(n) + 0.5
    u = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + math.sqrt(5.0)) * i
    return SensorNet.from_points(from_spherical(u, phi))


@functools.lru_cache(maxsize=4)
def icosphere(level: int) -> np.ndarray:
    """Vertices of the icosahedron refined ``level`` times (10*4**level + 2 points)."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    faces = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    for _ in range(level):
        e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        e.sort(axis=1)
        uniq, inv = np.unique(e, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        mid = verts[uniq[:, 0]] + verts[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        base = len(verts)
        verts = np.vstack([verts, mid])
        m = len(faces)
        a, b, c = (inv[:m] + base, inv[m:2 * m] + base, inv[2 * m:] + base)
        faces = np.concatenate([
            np.stack([faces[:, 0], a, c], 1),
            np.stack([faces[:, 1], b, a], 1),
            np.stack([faces[:, 2], c, b], 1),
            np.stack([a, b, c], 1),
        ])
    verts.setflags(write=False)
    return verts


def probe_grid(min_points: int = 100_000) -> np.ndarray:
    level = 0
    while 10 * 4 ** level + 2 < min_points:
        level += 1
    return icosphere(level)


@dataclass(frozen=True)
class NetCheck:
    ok: bool
    max_distance: float
    witness: np.ndarray


def net_covering_radius(net: SensorNet, min_points: int = 100_000) -> NetCheck:
    probes = probe_grid(min_points)
    dist, _ = net.nearest_distance(probes)
    i = int(np.argmax(dist))
    return NetCheck(True, float(dist[i]), probes[i].copy())


def verify_net_radius(net: SensorNet, rho: float, min_points: int = 100_000) -> NetCheck:
    """Check that every probe of a dense icosahedral grid lies within ``rho`` of a sensor."""
    if rho <= 0:
        raise GeometryError("rho must be positive")
    if net is None or len(net) == 0:
        raise GeometryError("empty net")
    worst = net_covering_radius(net, min_points)
    return NetCheck(worst.max_distance < rho, worst.max_distance, worst.witness)


@dataclass(frozen=True)
class AdmissibleRange:
    r: float
    r_prime: float
    lam: float
    m: float
    strict: bool
    a: float | None = None
    b: float | None = None
    needs_disjointness: bool = False
    violations: tuple[str, ...] = ()

    @property
    def interval(self) -> tuple[float, float]:
        return (2 * self.r * self.lam, 2 * self.r_prime / self.lam)

    @property
    def max_r(self) -> float:
        return self.r_prime / (4 * self.lam ** 4)

    @property
    def min_b(self) -> float | None:
        return None if self.a is None else 4 * self.lam ** 2 * self.a


def admissible_range(r: float, r_prime: float, lam: float, m: float = 0.5, strict: bool = True,
                     a: float | None = None, b: float | None = None) -> AdmissibleRange:
    """Validate the sensor-scale constants.

    In strict mode every inequality is enforced and a violation raises; in relaxed
    mode only the basic sanity conditions (lam > 1, 0 < r < r', a < b) raise and
    the remaining violations are recorded on the returned object.
    """
    if not lam > 1:
        raise GeometryError("lambda must exceed 1")
    if not 0 < r < r_prime:
        raise GeometryError("need 0 < r < r'")
    if a is not None and b is not None and not 0 < a < b:
        raise GeometryError("need 0 < a < b")
    violations = []
    if not r_prime / r > 4 * lam ** 4:
        violations.append(f"r'/r > 4*lambda^4 fails: {r_prime / r:.6g} <= {4 * lam ** 4:.6g}")
    if not 4 * r_prime < math.pi / 2:
        violations.append(f"4r' < pi/2 fails: 4r' = {4 * r_prime:.6g}")
    lo, hi = 2 * r * lam, 2 * r_prime / lam
    for name, val in (("a", a), ("b", b)):
        if val is not None and not lo < val < hi:
            violations.append(f"{name} = {val:.6g} outside the open interval ({lo:.6g}, {hi:.6g})")
    if a is not None and b is not None and not b / a > 4 * lam ** 2:
        violations.append(f"b/a > 4*lambda^2 fails: {b / a:.6g} <= {4 * lam ** 2:.6g}")
    if strict and violations:
        raise GeometryError("; ".join(violations))
    return AdmissibleRange(r, r_prime, lam, m, strict, a, b, m >= 1, tuple(violations))


def constant_checks(r: float, r_prime: float, lam: float, a: float, b: float) -> dict[str, bool]:
    """Status of every sensor-scale inequality, without raising."""
    lo, hi = 2 * r * lam, 2 * r_prime / lam
    return {
        "0 < r < r'": 0 < r < r_prime,
        "r'/r > 4*lambda^4": r > 0 and r_prime / r > 4 * lam ** 4,
        "4r' < pi/2": 4 * r_prime < math.pi / 2,
        "a in (2r*lambda, 2r'/lambda)": lo < a < hi,
        "b in (2r*lambda, 2r'/lambda)": lo < b < hi,
        "b/a > 4*lambda^2": b / a > 4 * lam ** 2,
    }


def smoothstep5(s):
    """Quintic ramp: 0 at s<=0, 1 at s>=1, C^2 at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


OUTER_SHRINK = 1e-6


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    net: SensorNet
    epsilon: float
    lam: float
    inner_radius: float
    outer_radius: float

    def bumps(self, points: np.ndarray):
        """Sparse (n_points x n_sensors) matrix of unnormalized bumps g_z."""
        from scipy import sparse

        pts = np.atleast_2d(points)
        tree = cKDTree(pts)
        rows, cols, vals = [], [], []
        reach = 2.0 + 1e-12 if self.outer_radius >= math.pi else float(angle_to_chord(self.outer_radius))
        width = self.outer_radius - self.inner_radius
        for z, hits in enumerate(tree.query_ball_point(self.net.points, reach)):
            if not hits:
                continue
            hits = np.asarray(hits)
            d = np.arccos(np.clip(pts[hits] @ self.net.points[z], -1.0, 1.0))
            g = smoothstep5((self.outer_radius - d) / width)
            keep = g > 0
            rows.append(hits[keep])
            cols.append(np.full(keep.sum(), z))
            vals.append(g[keep])
        if rows:
            rows, cols, vals = map(np.concatenate, (rows, cols, vals))
        return sparse.csr_matrix((vals, (rows, cols)), shape=(len(pts), len(self.net)))

    def evaluate(self, points: np.ndarray):
        """Sparse matrix F with F[x, z] = f_z(x); rows sum to one."""
        g = self.bumps(points)
        total = np.asarray(g.sum(axis=1)).ravel()
        if np.any(total <= 0):
            bad = int(np.argmin(total))
            raise GeometryError(f"inner balls do not cover the sphere near {np.atleast_2d(points)[bad]}")
        from scipy import sparse

        return sparse.diags(1.0 / total) @ g

    def __call__(self, z: int, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluate(points)[:, z].todense()).ravel()

    def supports_overlap(self, i: int, j: int) -> bool:
        return i == j or self.net.distances[i, j] < 2 * self.outer_radius


def partition_radii(epsilon: float, lam: float) -> tuple[float, float]:
    return epsilon / (2 * lam), (1 - OUTER_SHRINK) * lam * epsilon / 2


def build_partition(net: SensorNet, epsilon: float, lam: float, check_cover: bool = True,
                    probe_points: int = 100_000) -> PartitionOfUnity:
    """Partition of unity with inner radius eps/(2 lam) and outer radius just below lam*eps/2."""
    if not lam > 1:
        raise GeometryError("lambda must exceed 1")
    if epsilon <= 0:
        raise GeometryError("epsilon must be positive")
    inner, outer = partition_radii(epsilon, lam)
    pou = PartitionOfUnity(net, float(epsilon), float(lam), inner, outer)
    if check_cover:
        dist, _ = net.nearest_distance(probe_grid(probe_points))
        if np.any(dist >= outer):
            raise GeometryError(
                f"sensor supports of radius {outer:.4g} leave probe points uncovered "
                f"(worst distance {dist.max():.4g})")
    return pou


def check_disjointness_assumption(net: SensorNet, epsilon: float, lam: float, tol: float = 1e-9) -> bool:
    """True unless some pair of closed supports is (numerically) tangent."""
    _, outer = partition_radii(epsilon, lam)
    return supports_tangency_free(net.distances, outer, tol)


def supports_tangency_free(distances: np.ndarray, radius: float, tol: float) -> bool:
    iu = np.triu_indices(len(distances), 1)
    return not np.any(np.abs(distances[iu] - 2 * radius) < tol)


def read_net(path: str | Path) -> SensorNet:
    return SensorNet.from_csv(path)
