"""Persistent homology over Z/2."""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .complexes import FilteredComplex, SimplicialComplex, inclusion_witness

BRUTE_FORCE_CAP = 50_000


class PersistenceError(ValueError):
    pass


@dataclass
class Barcode:
    """Half-open bars [birth, death) per degree; death = inf for essential classes."""

    bars: dict[int, list[tuple[float, float]]] = field(default_factory=dict)

    def degree(self, q: int) -> list[tuple[float, float]]:
        return self.bars.get(q, [])

    def multiset(self, q: int) -> Counter:
        return Counter(self.degree(q))

    def same_as(self, other: "Barcode") -> bool:
        degs = set(self.bars) | set(other.bars)
        return all(self.multiset(q) == other.multiset(q) for q in degs)

    def betti_at(self, q: int, t: float) -> int:
        return sum(1 for b, d in self.degree(q) if b <= t < d)

    def count_containing(self, q: int, s: float, t: float) -> int:
        """Bars alive on all of [s, t], i.e. the rank of the map from s to t."""
        return sum(1 for b, d in self.degree(q) if b <= s and d > t)

    def to_json(self) -> str:
        return json.dumps({str(q): [[b, None if math.isinf(d) else d] for b, d in sorted(self.bars[q])]
                           for q in sorted(self.bars)})

    @classmethod
    def from_json(cls, text: str) -> "Barcode":
        obj = json.loads(text)
        return cls({int(q): [(float(b), math.inf if d is None else float(d)) for b, d in v]
                    for q, v in obj.items()})


# --- boundary matrix and reduction ---------------------------------------------------------


def order_simplices(fc: FilteredComplex, seed: int | None = None) -> list[tuple]:
    """Filtration order: (value, dimension, tie-break). The tie-break is
    lexicographic, or a seeded random permutation among equal (value, dim)."""
    simplices = list(fc.complex)
    if seed is None:
        tie = {s: s for s in simplices}
    else:
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(simplices))
        tie = {s: int(p) for s, p in zip(simplices, perm)}
    return sorted(simplices, key=lambda s: (fc.values[s], len(s), tie[s]))


def boundary_columns(ordered: Sequence[tuple]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pos = {s: i for i, s in enumerate(ordered)}
    indptr = np.zeros(len(ordered) + 1, dtype=np.int64)
    rows: list[int] = []
    for j, s in enumerate(ordered):
        if len(s) > 1:
            col = sorted(pos[f] for f in itertools.combinations(s, len(s) - 1))
            rows.extend(col)
        indptr[j + 1] = len(rows)
    dims = np.array([len(s) - 1 for s in ordered], dtype=np.int64)
    return indptr, np.asarray(rows, dtype=np.int64), dims


def reduce_to_barcode(fc: FilteredComplex, max_degree: int | None = None, seed: int | None = None,
                      check: bool = True) -> Barcode:
    """Standard column reduction with clearing; zero-length bars are dropped."""
    if check:
        fc.check_monotone()
    ordered = order_simplices(fc, seed)
    indptr, indices, dims = boundary_columns(ordered)
    low = kernels.reduce_columns(indptr, indices, dims)
    top = fc.complex.dimension if max_degree is None else max_degree
    vals = [fc.values[s] for s in ordered]
    bars: dict[int, list[tuple[float, float]]] = {q: [] for q in range(top + 1)}
    paired = np.zeros(len(ordered), dtype=bool)
    for j in np.flatnonzero(low >= 0):
        i = int(low[j])
        paired[i] = paired[j] = True
        q = int(dims[i])
        if q <= top and vals[i] < vals[j]:
            bars[q].append((vals[i], vals[j]))
    for i in np.flatnonzero(~paired):
        q = int(dims[i])
        if q <= top:
            bars[q].append((vals[i], math.inf))
    for q in bars:
        bars[q].sort()
    return Barcode(bars)


# --- two-step filtrations and truncated modules ---------------------------------------------


def two_step_filtration(Ka: SimplicialComplex, Kb: SimplicialComplex) -> FilteredComplex:
    w = inclusion_witness(Ka, Kb)
    if w is not None:
        raise PersistenceError(f"inclusion fails: simplex {w} of the smaller complex is missing")
    sa = Ka.simplex_set
    return FilteredComplex(Kb, {s: (0.0 if s in sa else 1.0) for s in Kb})


def persistent_image_ranks(Ka: SimplicialComplex, Kb: SimplicialComplex, max_degree: int = 2) -> list[int]:
    """Rank of H_q(Ka) -> H_q(Kb) for q = 0..max_degree."""
    bc = reduce_to_barcode(two_step_filtration(Ka, Kb), max_degree, check=False)
    return [sum(1 for b, d in bc.degree(q) if b == 0.0 and d > 1.0) for q in range(max_degree + 1)]


def persistent_image_rank(Ka: SimplicialComplex, Kb: SimplicialComplex, degree: int) -> int:
    return persistent_image_ranks(Ka, Kb, degree)[degree]


@dataclass
class TruncatedModule:
    """Ranks of a monotone complex family on a grid, forced to zero outside the window."""

    grid: list[float]
    window: tuple[float, float]
    degree: int
    ranks: dict[tuple[float, float], int]

    def rank(self, s: float, t: float) -> int:
        return self.ranks.get((s, t), 0)

    def betti(self, s: float) -> int:
        return self.rank(s, s)


def family_filtration(family: dict[float, SimplicialComplex]) -> FilteredComplex:
    grid = sorted(family)
    values: dict[tuple, float] = {}
    prev = None
    for g in grid:
        K = family[g]
        if prev is not None:
            w = inclusion_witness(prev, K)
            if w is not None:
                raise PersistenceError(f"family is not monotone at {g!r}: simplex {w} disappears")
        for s in K:
            values.setdefault(s, g)
        prev = K
    return FilteredComplex(family[grid[-1]], values)


def truncated_module(family: dict[float, SimplicialComplex], window: tuple[float, float],
                     degree: int) -> TruncatedModule:
    grid = sorted(family)
    inside = [g for g in grid if window[0] <= g <= window[1]]
    ranks: dict[tuple[float, float], int] = {}
    if inside:
        bc = reduce_to_barcode(family_filtration({g: family[g] for g in inside}), degree, check=False)
        for i, s in enumerate(inside):
            for t in inside[i:]:
                ranks[(s, t)] = bc.count_containing(degree, s, t)
    return TruncatedModule(grid, window, degree, ranks)


# --- interleaving ----------------------------------------------------------------------------


@dataclass
class InterleavingReport:
    lam: float
    checked: int
    failures: list[dict]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        return json.dumps({"lambda": self.lam, "checked": self.checked, "ok": self.ok,
                           "failures": self.failures})

    def text(self) -> str:
        lines = [f"interleaving lambda={self.lam:g}: {self.checked} inclusions checked, "
                 f"{len(self.failures)} failed"]
        for f in self.failures:
            lines.append(f"  {f['direction']} at s={f['s']:.6g}: simplex {f['witness']} missing")
        return "\n".join(lines)


def interleaving_check(family_a: Callable[[float], SimplicialComplex],
                       family_b: Callable[[float], SimplicialComplex], lam: float,
                       grid: Sequence[float]) -> InterleavingReport:
    """Check A_s in B_(lam s) and B_s in A_(lam s) at every grid parameter."""
    failures = []
    n = 0
    for s in grid:
        for name, X, Y in (("A->B", family_a, family_b), ("B->A", family_b, family_a)):
            n += 1
            w = inclusion_witness(X(s), Y(lam * s))
            if w is not None:
                failures.append({"direction": name, "s": float(s), "witness": list(w)})
    return InterleavingReport(lam, n, failures)


def greedy_log_matching(a: Barcode, b: Barcode, degree: int) -> float:
    """Greedy matching cost of bars on log-scale endpoints (diagnostic only).

    Unmatched bars pay half their log-length. Returns the largest cost used.
    """
    def logs(bars):
        return [(math.log(x), math.log(y) if math.isfinite(y) else math.inf) for x, y in bars if x > 0]

    A, B = logs(a.degree(degree)), logs(b.degree(degree))
    pairs = []
    for i, (x1, y1) in enumerate(A):
        for j, (x2, y2) in enumerate(B):
            dy = 0.0 if (math.isinf(y1) and math.isinf(y2)) else abs(y1 - y2)
            pairs.append((max(abs(x1 - x2), dy), i, j))
    pairs.sort()
    used_a, used_b, worst = set(), set(), 0.0
    for c, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        solo = max((A[i][1] - A[i][0]) / 2, (B[j][1] - B[j][0]) / 2)
        if c > solo:
            continue
        used_a.add(i)
        used_b.add(j)
        worst = max(worst, c)
    for idx, bars, used in ((range(len(A)), A, used_a), (range(len(B)), B, used_b)):
        for i in idx:
            if i not in used:
                worst = max(worst, (bars[i][1] - bars[i][0]) / 2)
    return worst


# --- brute-force oracle ----------------------------------------------------------------------


def _gf2_rank(columns: list[int]) -> int:
    basis: dict[int, int] = {}
    rank = 0
    for c in columns:
        while c:
            top = c.bit_length() - 1
            if top in basis:
                c ^= basis[top]
            else:
                basis[top] = c
                rank += 1
                break
    return rank


def boundary_rank(K: SimplicialComplex, dim: int) -> int:
    """Rank over Z/2 of the boundary map from dim-simplices to (dim-1)-simplices."""
    if dim <= 0 or K.count(dim) == 0:
        return 0
    pos = {s: i for i, s in enumerate(K.simplices[dim - 1])}
    cols = []
    for s in K.simplices[dim]:
        c = 0
        for f in itertools.combinations(s, dim):
            c |= 1 << pos[f]
        cols.append(c)
    return _gf2_rank(cols)


def homology_rank_bruteforce(K: SimplicialComplex, degree: int) -> int:
    if len(K) > BRUTE_FORCE_CAP:
        raise PersistenceError(f"complex has {len(K)} simplices; the brute-force oracle is capped at "
                               f"{BRUTE_FORCE_CAP}")
    return K.count(degree) - boundary_rank(K, degree) - boundary_rank(K, degree + 1)


def betti_numbers(K: SimplicialComplex, max_degree: int | None = None) -> list[int]:
    top = K.dimension if max_degree is None else max_degree
    return [homology_rank_bruteforce(K, q) for q in range(top + 1)]
