"""Simplicial complexes built from pairwise predicates, filtrations, and nerves of covers."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .geometry import SensorNet, partition_radii

Simplex = tuple[int, ...]

DEFAULT_MAX_DIM = 3


class ComplexError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Vertices plus simplices listed per dimension as sorted tuples."""

    vertices: tuple[int, ...]
    simplices: dict[int, list[Simplex]] = field(repr=False)

    @classmethod
    def from_simplices(cls, simplices: Iterable[Sequence[int]], vertices: Iterable[int] | None = None,
                       close: bool = True) -> "SimplicialComplex":
        top = {tuple(sorted(s)) for s in simplices}
        if any(len(set(s)) != len(s) or not s for s in top):
            raise ComplexError("simplices must be non-empty with distinct vertices")
        full = set(top)
        if close:
            for s in top:
                for r in range(1, len(s)):
                    full.update(itertools.combinations(s, r))
        verts = set(vertices) if vertices is not None else set()
        verts.update(v for s in full for v in s)
        full.update((v,) for v in verts)
        by_dim: dict[int, list[Simplex]] = {}
        for s in full:
            by_dim.setdefault(len(s) - 1, []).append(s)
        for d in by_dim:
            by_dim[d].sort()
        return cls(tuple(sorted(verts)), by_dim)

    @property
    def dimension(self) -> int:
        return max(self.simplices, default=-1)

    def __iter__(self):
        for d in sorted(self.simplices):
            yield from self.simplices[d]

    def __len__(self) -> int:
        return sum(len(v) for v in self.simplices.values())

    def __contains__(self, s) -> bool:
        return tuple(sorted(s)) in self.simplex_set

    @property
    def simplex_set(self) -> frozenset:
        cached = self.__dict__.get("_set")
        if cached is None:
            cached = frozenset(self)
            object.__setattr__(self, "_set", cached)
        return cached

    def count(self, dim: int) -> int:
        return len(self.simplices.get(dim, ()))

    def counts(self) -> list[int]:
        return [self.count(d) for d in range(self.dimension + 1)]

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * n for d, n in enumerate(self.counts()))

    def check_closed(self) -> None:
        sset = self.simplex_set
        for s in self:
            for v in s:
                if (v,) not in sset:
                    raise ComplexError(f"simplex {s} has vertex {v} outside the complex")
            if len(s) > 1:
                for face in itertools.combinations(s, len(s) - 1):
                    if face not in sset:
                        raise ComplexError(f"face {face} of {s} is missing")

    def skeleton(self, dim: int) -> "SimplicialComplex":
        return SimplicialComplex(self.vertices, {d: list(v) for d, v in self.simplices.items() if d <= dim})

    def edges(self) -> list[Simplex]:
        return list(self.simplices.get(1, []))

    def to_json(self) -> str:
        return json.dumps({"vertices": list(self.vertices),
                           "simplices": {str(d): [list(s) for s in self.simplices[d]]
                                         for d in sorted(self.simplices)}})

    @classmethod
    def from_json(cls, text: str) -> "SimplicialComplex":
        obj = json.loads(text)
        simp = {int(d): [tuple(s) for s in v] for d, v in obj["simplices"].items()}
        return cls(tuple(obj["vertices"]), simp)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return self.vertices == other.vertices and self.simplex_set == other.simplex_set

    __hash__ = None


def _adjacency(pred, vertices: Sequence[int]) -> dict[int, set[int]]:
    n = len(vertices)
    if isinstance(pred, np.ndarray):
        A = np.asarray(pred, dtype=bool)
        if A.shape != (n, n):
            raise ComplexError("adjacency matrix shape does not match the vertex list")
        if np.any(A != A.T):
            raise ComplexError("edge predicate must be symmetric")
        nb = {v: set() for v in vertices}
        for i, j in zip(*np.nonzero(np.triu(A, 1))):
            nb[vertices[i]].add(vertices[j])
            nb[vertices[j]].add(vertices[i])
        return nb
    nb = {v: set() for v in vertices}
    for a, b in itertools.combinations(vertices, 2):
        if pred(a, b):
            nb[a].add(b)
            nb[b].add(a)
    return nb


def flag_complex(pred: np.ndarray | Callable[[int, int], bool], vertices: Sequence[int] | None = None,
                 max_dim: int = DEFAULT_MAX_DIM) -> SimplicialComplex:
    """All cliques of the predicate graph with at most max_dim + 1 vertices.

    ``pred`` is either a boolean matrix indexed like ``vertices`` (default
    0..n-1) or a symmetric callable on vertex labels.
    """
    if vertices is None:
        if not isinstance(pred, np.ndarray):
            raise ComplexError("vertices are required with a callable predicate")
        vertices = range(len(pred))
    vertices = list(vertices)
    nb = _adjacency(pred, vertices)
    by_dim: dict[int, list[Simplex]] = {0: [(v,) for v in sorted(vertices)]}
    order = {v: i for i, v in enumerate(sorted(vertices))}
    up = {v: sorted((w for w in nb[v] if order[w] > order[v]), key=order.__getitem__) for v in vertices}

    def expand(simplex: Simplex, cand: list[int]):
        for idx, w in enumerate(cand):
            s = simplex + (w,)
            by_dim.setdefault(len(s) - 1, []).append(s)
            if len(s) - 1 < max_dim:
                rest = [x for x in cand[idx + 1:] if x in nb[w]]
                if rest:
                    expand(s, rest)

    if max_dim >= 1:
        for v in sorted(vertices):
            expand((v,), up[v])
    for d in by_dim:
        by_dim[d].sort()
    return SimplicialComplex(tuple(sorted(vertices)), by_dim)


# --- thresholded complexes from registration data -----------------------------------------


def pair_correlation(pairs: np.ndarray) -> np.ndarray:
    """p_zw / sqrt(p_zz p_ww), the scale-free pair statistic."""
    diag = np.sqrt(np.clip(np.diag(pairs), 1e-300, None))
    return pairs / np.outer(diag, diag)


def threshold_statistic(pairs: np.ndarray, normalization: str = "correlation") -> np.ndarray:
    if normalization == "correlation":
        return pair_correlation(pairs)
    if normalization == "none":
        return np.asarray(pairs)
    raise ComplexError(f"unknown threshold normalization {normalization!r}")


def quantum_edges(table, m: float, hbar: float, normalization: str = "correlation") -> np.ndarray:
    stat = threshold_statistic(table.pairs, normalization)
    A = stat >= hbar ** m
    A = A & A.T
    np.fill_diagonal(A, False)
    return A


def quantum_complex(table, m: float, hbar: float, max_dim: int = DEFAULT_MAX_DIM,
                    normalization: str = "correlation") -> SimplicialComplex:
    """Flag complex with edges where the pair statistic is at least hbar^m."""
    return flag_complex(quantum_edges(table, m, hbar, normalization), max_dim=max_dim)


def classical_edges(net: SensorNet, epsilon: float, lam: float, outer_factor: float = 1.0) -> np.ndarray:
    _, outer = partition_radii(epsilon, lam)
    A = net.distances < 2 * outer * outer_factor
    np.fill_diagonal(A, False)
    return A


def classical_complex(net: SensorNet, epsilon: float, lam: float, max_dim: int = DEFAULT_MAX_DIM,
                      outer_factor: float = 1.0) -> SimplicialComplex:
    """C_eps: edges exactly where the closed supports overlap (decided from radii).

    ``outer_factor`` shrinks the support radius, for building counterexamples."""
    return flag_complex(classical_edges(net, epsilon, lam, outer_factor), max_dim=max_dim)


def vietoris_rips(net_or_distances, t: float, max_dim: int = DEFAULT_MAX_DIM) -> SimplicialComplex:
    """R_t with the strict rule d(z, w) < t."""
    if t <= 0:
        raise ComplexError("t must be positive")
    D = net_or_distances.distances if isinstance(net_or_distances, SensorNet) else np.asarray(net_or_distances)
    A = D < t
    np.fill_diagonal(A, False)
    return flag_complex(A, max_dim=max_dim)


def classical_gap(table, net: SensorNet, epsilon: float, lam: float) -> float:
    """gamma_eps: smallest pair value over overlapping supports (inf if none)."""
    A = classical_edges(net, epsilon, lam)
    vals = table.pairs[A]
    return float(vals.min()) if vals.size else math.inf


def inclusion_check(K1: SimplicialComplex, K2: SimplicialComplex) -> bool:
    if not set(K1.vertices) <= set(K2.vertices) and set(K1.vertices) != set(K2.vertices):
        raise ComplexError("complexes do not share vertex labels")
    return K1.simplex_set <= K2.simplex_set


def inclusion_witness(K1: SimplicialComplex, K2: SimplicialComplex) -> Simplex | None:
    """A simplex of K1 missing from K2 (lowest dimension first), or None."""
    sset = K2.simplex_set
    for s in K1:
        if s not in sset:
            return s
    return None


# --- filtrations ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    complex: SimplicialComplex
    values: dict[Simplex, float] = field(repr=False)

    def __post_init__(self):
        for s in self.complex:
            if s not in self.values:
                raise ComplexError(f"simplex {s} has no filtration value")

    def check_monotone(self) -> None:
        vals = self.values
        for s in self.complex:
            if len(s) > 1:
                for face in itertools.combinations(s, len(s) - 1):
                    if vals[face] > vals[s]:
                        raise ComplexError(f"filtration not monotone: face {face} at {vals[face]!r} "
                                           f"enters after {s} at {vals[s]!r}")

    def sublevel(self, value: float) -> SimplicialComplex:
        return SimplicialComplex.from_simplices([s for s in self.complex if self.values[s] <= value],
                                                vertices=[v for v in self.complex.vertices
                                                          if self.values[(v,)] <= value], close=False)

    def grid(self) -> list[float]:
        return sorted(set(self.values.values()))


def filtration_from_edges(edge_values: np.ndarray, max_dim: int = DEFAULT_MAX_DIM,
                          vertex_value: float = 0.0) -> FilteredComplex:
    """Flag filtration: a simplex enters at the largest value among its edges.

    ``edge_values[i, j]`` is the parameter at which edge ij appears (inf = never).
    """
    E = np.asarray(edge_values, dtype=float)
    A = np.isfinite(E)
    np.fill_diagonal(A, False)
    K = flag_complex(A, max_dim=max_dim)
    values: dict[Simplex, float] = {}
    for s in K:
        if len(s) == 1:
            values[s] = vertex_value
        else:
            values[s] = max(float(E[a, b]) for a, b in itertools.combinations(s, 2))
    return FilteredComplex(K, values)


def snap_to_grid(values: np.ndarray, grid: Sequence[float]) -> np.ndarray:
    """Smallest grid value g with the strict appearance rule value < g (inf if none)."""
    g = np.asarray(sorted(grid), dtype=float)
    idx = np.searchsorted(g, values, side="right")
    out = np.full(np.shape(values), np.inf)
    ok = idx < len(g)
    out[ok] = g[idx[ok]]
    return out


def rips_filtration(net: SensorNet, grid: Sequence[float], max_dim: int = DEFAULT_MAX_DIM) -> FilteredComplex:
    E = snap_to_grid(net.distances, grid)
    return filtration_from_edges(E, max_dim, vertex_value=min(grid))


def classical_filtration(net: SensorNet, lam: float, grid: Sequence[float],
                         max_dim: int = DEFAULT_MAX_DIM) -> FilteredComplex:
    """C_eps over an eps grid: edge zw is present once 2*outer_radius(eps) > d(z, w)."""
    _, outer_per_eps = partition_radii(1.0, lam)
    E = snap_to_grid(net.distances / (2 * outer_per_eps), grid)
    return filtration_from_edges(E, max_dim, vertex_value=min(grid))


# --- nerves ----------------------------------------------------------------------------------

NERVE_M_LIMIT = 1.0 / 8.0


def _intersection_nonempty(regions, index, probes) -> bool:
    from .registration import integrate_piecewise
    from .symbols import Intersection, PiecewiseSymbol

    inside = np.ones(len(probes), dtype=bool)
    for i in index:
        inside &= regions[i].contains(probes)
        if not inside.any():
            break
    if inside.any():
        return True
    region = Intersection(tuple(regions[i] for i in index)) if len(index) > 1 else regions[index[0]]
    return integrate_piecewise(PiecewiseSymbol.from_regions([region], [1.0])) > 1e-14


def classical_nerve(regions, k_max: int = DEFAULT_MAX_DIM, probes: np.ndarray | None = None) -> SimplicialComplex:
    """Simplices are the index sets with non-empty common intersection."""
    from .geometry import probe_grid

    pts = probe_grid(100_000) if probes is None else probes
    n = len(regions)
    found = [(i,) for i in range(n)]
    level = found
    for dim in range(1, k_max + 1):
        nxt = []
        alive = set(level)
        for s in itertools.combinations(range(n), dim + 1):
            if all(f in alive for f in itertools.combinations(s, dim)) and _intersection_nonempty(regions, s, pts):
                nxt.append(s)
        if not nxt:
            break
        found.extend(nxt)
        level = nxt
    return SimplicialComplex.from_simplices(found, range(n), close=False)


def quantum_nerve(operators: Sequence[np.ndarray], m: float, k: int, k_max: int = DEFAULT_MAX_DIM,
                  normalization: str = "correlation",
                  scale: float = 1.0) -> tuple[SimplicialComplex, dict[Simplex, float]]:
    """Simplices I whose registration statistic exceeds scale * hbar^m.

    With ``normalization="correlation"`` the statistic is p_I divided by the
    geometric mean of the repeated single-index probabilities p_(i,...,i) of the
    same length. Each simplex is tested on its own, not via a flag rule.
    """
    from .registration import quantum_kfold

    if m >= NERVE_M_LIMIT:
        raise ComplexError(f"quantum nerve needs m < 1/8 (got m = {m}); the rate p^Q_I - p^C_I = O(hbar^(1/8)) "
                           "only separates empty from non-empty intersections below that exponent")
    thr = scale * (1.0 / k) ** m
    n = len(operators)
    stats: dict[Simplex, float] = {}
    repeated: dict[tuple[int, int], float] = {}

    def rep(i, length):
        key = (i, length)
        if key not in repeated:
            repeated[key] = quantum_kfold(None, [operators[i]] * length)
        return repeated[key]

    found = [(i,) for i in range(n)]
    level = set(found)
    for dim in range(1, k_max + 1):
        nxt = set()
        for s in itertools.combinations(range(n), dim + 1):
            if not all(f in level for f in itertools.combinations(s, dim)):
                continue
            p = quantum_kfold(None, [operators[i] for i in s])
            if normalization == "correlation":
                p = p / math.exp(np.mean([math.log(max(rep(i, len(s)), 1e-300)) for i in s]))
            elif normalization != "none":
                raise ComplexError(f"unknown threshold normalization {normalization!r}")
            stats[s] = p
            if p > thr:
                nxt.add(s)
        if not nxt:
            break
        found.extend(sorted(nxt))
        level = nxt
    return SimplicialComplex.from_simplices(found, range(n), close=False), stats


def nerve_complex(regions, k_max: int = DEFAULT_MAX_DIM, mode: str = "classical", m: float = 0.1,
                  k: int | None = None, operators: Sequence[np.ndarray] | None = None,
                  normalization: str = "correlation", scale: float = 1.0) -> SimplicialComplex:
    if mode == "classical":
        return classical_nerve(regions, k_max)
    if mode != "quantum":
        raise ComplexError(f"unknown nerve mode {mode!r}")
    if m >= NERVE_M_LIMIT:
        raise ComplexError(f"quantum nerve needs m < 1/8 (got m = {m})")
    if k is None:
        raise ComplexError("quantum nerve needs the spin level k")
    if operators is None:
        from .registration import cover_operators

        operators = cover_operators(k, regions)
    return quantum_nerve(operators, m, k, k_max, normalization, scale)[0]
