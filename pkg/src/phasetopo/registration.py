"""Classical and quantum registration statistics."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import sparse

from .geometry import PartitionOfUnity
from .quantization import (
    QuantizationContext, make_context, normalized_trace, piecewise_ring_coefficients,
    piecewise_rings, toeplitz, toeplitz_partition,
)
from .symbols import PiecewiseSymbol, Region, Symbol, cover_multiplicity, cover_partition

VANISHING_PROBABILITY = 1e-14
SQRT_NEGATIVE_TOL = 1e-12


class RegistrationError(ValueError):
    pass


class RouteMismatch(RegistrationError):
    def __init__(self, z, w, matrix_value, kernel_value):
        super().__init__(f"pair ({z}, {w}): matrix route {matrix_value!r} vs kernel route {kernel_value!r}")
        self.values = (matrix_value, kernel_value)


@dataclass
class ProbabilityTable:
    singles: np.ndarray
    pairs: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.singles = np.asarray(self.singles, dtype=float)
        self.pairs = np.asarray(self.pairs, dtype=float)

    def __len__(self):
        return len(self.singles)

    def to_json(self) -> str:
        return json.dumps({"meta": {"kind": self.kind, **self.meta},
                           "singles": self.singles.tolist(), "pairs": self.pairs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ProbabilityTable":
        obj = json.loads(text)
        meta = dict(obj["meta"])
        kind = meta.pop("kind")
        return cls(np.array(obj["singles"]), np.array(obj["pairs"]), kind, meta)

    def to_csv_rows(self):
        yield ("z", "w", "p")
        n = len(self)
        for z in range(n):
            for w in range(n):
                yield (z, w, repr(float(self.pairs[z, w])))


# --- quadrature helpers -------------------------------------------------------------------


def default_quadrature(n_theta: int = 320, n_phi: int = 640) -> QuantizationContext:
    return make_context(max(1, min(n_theta - 2, (n_phi - 2) // 2)), n_theta, n_phi)


def classical_table(pou: PartitionOfUnity, quadrature: QuantizationContext | None = None) -> ProbabilityTable:
    """p_z = integral f_z, p_zw = integral f_z f_w (normalized measure)."""
    quad = quadrature or default_quadrature()
    vals = pou.evaluate(quad.nodes)
    w = quad.weights
    singles = np.asarray(vals.T @ w).ravel()
    pairs = np.asarray((vals.T @ sparse.diags(w) @ vals).todense())
    pairs = 0.5 * (pairs + pairs.T)
    overlap = pou.net.distances < 2 * pou.outer_radius
    np.fill_diagonal(overlap, True)
    pairs[~overlap] = 0.0
    meta = {"epsilon": pou.epsilon, "lambda": pou.lam, "route": "quadrature"}
    return ProbabilityTable(singles, pairs, "classical", meta)


def pair_traces(ops: Sequence[np.ndarray]) -> np.ndarray:
    """tr(F_z F_w)/d for Hermitian F's, exactly symmetric."""
    d = ops[0].shape[0]
    V = np.stack([np.asarray(F).reshape(-1) for F in ops])
    P = np.real(V @ V.conj().T) / d
    return 0.5 * (P + P.T)


def kernel_pair_table(ctx: QuantizationContext, pou: PartitionOfUnity, chunk: int = 512) -> np.ndarray:
    """Pairs by double quadrature of f_z(x) f_w(y) |K(x, y)|^2, divided by d."""
    nodes = ctx.nodes
    vals = pou.evaluate(nodes).tocsr()
    w = ctx.weights
    live = np.flatnonzero(np.asarray(vals.sum(axis=1)).ravel() > 0)
    X = nodes[live]
    Phi = (sparse.diags(w[live]) @ vals[live]).toarray()
    k, d = ctx.k, ctx.dim
    out = np.zeros((Phi.shape[1], Phi.shape[1]))
    for s in range(0, len(X), chunk):
        G = X[s:s + chunk] @ X.T
        Kc = d * d * np.clip((1.0 + G) / 2.0, 0.0, 1.0) ** k
        out += Phi[s:s + chunk].T @ (Kc @ Phi)
    out /= d
    return 0.5 * (out + out.T)


def quantum_table(ctx: QuantizationContext, pou: PartitionOfUnity, route: str = "matrix",
                  rtol: float = 1e-6, operators: Sequence[np.ndarray] | None = None) -> ProbabilityTable:
    """p^Q_zw = tr(F_z F_w)/d with F_z = T(f_z), in the maximally mixed state."""
    if route not in ("matrix", "kernel", "both"):
        raise RegistrationError(f"unknown route {route!r}")
    ops = operators if operators is not None else toeplitz_partition(ctx, pou)
    singles = np.array([normalized_trace(F) for F in ops])
    if route == "kernel":
        pairs = kernel_pair_table(ctx, pou)
    else:
        pairs = pair_traces(ops)
    if route == "both":
        other = kernel_pair_table(ctx, pou)
        scale = max(np.max(np.abs(pairs)), 1e-300)
        bad = np.abs(pairs - other) > rtol * np.maximum(np.abs(pairs), 1e-3 * scale)
        if np.any(bad):
            z, w = map(int, np.argwhere(bad)[0])
            raise RouteMismatch(z, w, float(pairs[z, w]), float(other[z, w]))
    meta = {"k": ctx.k, "hbar": ctx.hbar, "epsilon": pou.epsilon, "lambda": pou.lam, "route": route}
    return ProbabilityTable(singles, pairs, "quantum", meta)


# --- states and state reduction -----------------------------------------------------------


def psd_sqrt(F: np.ndarray, tol: float = SQRT_NEGATIVE_TOL) -> np.ndarray:
    """Square root of a Hermitian PSD matrix by eigendecomposition.

    Eigenvalues in [-tol*|F|, 0) are clamped to zero; anything below is an error.
    """
    F = 0.5 * (F + F.conj().T)
    ev, U = np.linalg.eigh(F)
    norm = max(float(np.max(np.abs(ev))), 1e-300) if len(ev) else 1.0
    if ev.size and ev.min() < -tol * norm:
        raise RegistrationError(f"matrix has eigenvalue {ev.min():.3e} < 0; no PSD square root")
    ev = np.clip(ev, 0.0, None)
    return (U * np.sqrt(ev)) @ U.conj().T


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def luders_posterior(rho: np.ndarray, F: np.ndarray) -> np.ndarray:
    """State after registering outcome F: F^(1/2) rho F^(1/2) / tr(F rho)."""
    prob = float(np.real(np.trace(F @ rho)))
    if prob <= VANISHING_PROBABILITY:
        raise RegistrationError("outcome has vanishing probability")
    S = psd_sqrt(F)
    eta = S @ rho @ S / prob
    return 0.5 * (eta + eta.conj().T)


def husimi_expectation(ctx: QuantizationContext, rho: np.ndarray, f: Symbol) -> float:
    """Integral of f against the Husimi measure of rho, i.e. tr(T(f) rho)."""
    return float(np.real(np.trace(toeplitz(ctx, f) @ rho)))


def quantum_kfold(ctx_or_dim, operators: Sequence[np.ndarray]) -> float:
    """tr(F_k^(1/2) ... F_2^(1/2) F_1 F_2^(1/2) ... F_k^(1/2)) / d."""
    if not operators:
        raise RegistrationError("need at least one operator")
    X = np.asarray(operators[0], dtype=complex)
    for F in operators[1:]:
        S = psd_sqrt(F)
        X = S @ X @ S
    val = float(np.real(np.trace(X))) / X.shape[0]
    return min(max(val, 0.0), 1.0)


# --- covers by measurable regions ---------------------------------------------------------


def integrate_piecewise(sym: PiecewiseSymbol, k_hint: int = 64) -> float:
    """Integral of a piecewise-constant cap-arrangement symbol (normalized measure)."""
    u, w = piecewise_rings(sym.caps, k_hint)
    c0 = piecewise_ring_coefficients(sym, u, 0)[:, 0]
    return float(np.real(w @ c0))


def check_cover(regions: Sequence[Region], probes: np.ndarray | None = None) -> None:
    from .geometry import probe_grid

    pts = probe_grid(20_000) if probes is None else probes
    chi = cover_multiplicity(regions)(pts)
    if np.any(chi < 1):
        bad = pts[int(np.argmin(chi))]
        raise RegistrationError(f"cover does not cover M (uncovered near {np.round(bad, 4).tolist()})")


def kfold_symbol(regions: Sequence[Region], index: Sequence[int]) -> PiecewiseSymbol:
    """chi^(-k) restricted to U_I, i.e. the product f_{i1} ... f_{ik}."""
    parts = cover_partition(regions)
    out = parts[index[0]]
    for i in index[1:]:
        out = out * parts[i]
    return out


def classical_kfold(regions: Sequence[Region], index: Sequence[int], check: bool = True) -> float:
    """p^C_I = integral over U_I of chi^(-k), k = len(index)."""
    if check:
        check_cover(regions)
    return integrate_piecewise(kfold_symbol(regions, index))


def cover_operators(ctx_or_k, regions: Sequence[Region]) -> list[np.ndarray]:
    """F_i = T(chi_i / chi) for a cover by cap regions."""
    from .quantization import toeplitz_piecewise

    k = ctx_or_k if isinstance(ctx_or_k, int) else ctx_or_k.k
    return [toeplitz_piecewise(k, f) for f in cover_partition(regions)]


def quantum_kfold_index(ops: Sequence[np.ndarray], index: Sequence[int]) -> float:
    return quantum_kfold(None, [ops[i] for i in index])


# --- finite hypergraph toy model ----------------------------------------------------------


@dataclass(frozen=True)
class Hypergraph:
    vertices: tuple
    edges: tuple[frozenset, ...]

    @classmethod
    def build(cls, vertices, edges) -> "Hypergraph":
        h = cls(tuple(vertices), tuple(frozenset(e) for e in edges))
        for i, e in enumerate(h.edges):
            if not e:
                raise RegistrationError(f"edge U_{i + 1} is empty")
            if not e <= set(h.vertices):
                raise RegistrationError(f"edge U_{i + 1} has vertices outside M")
        for v in h.vertices:
            if h.chi(v) == 0:
                raise RegistrationError(f"vertex {v!r} lies in no edge")
        return h

    def chi(self, z) -> int:
        return sum(z in e for e in self.edges)

    @property
    def total(self) -> int:
        return sum(self.chi(z) for z in self.vertices)

    def mu(self, z) -> Fraction:
        return Fraction(self.chi(z), self.total)

    def registration(self, index: Sequence[int]) -> Fraction:
        """p_I = sum over z in U_I of chi(z)^(-k) mu(z) (0-based edge indices)."""
        common = frozenset(self.vertices)
        for i in index:
            common &= self.edges[i]
        return sum((self.mu(z) / Fraction(self.chi(z)) ** len(index) for z in common), Fraction(0))

    def walk_path(self, index: Sequence[int]) -> Fraction:
        """Probability of the edge sequence under the hypergraph random walk."""
        P = hypergraph_transition(self)
        p = self.registration(index[:1])
        for a, b in zip(index, index[1:]):
            p *= P[a][b]
        return p


def hypergraph_transition(h: Hypergraph) -> list[list[Fraction]]:
    """P(j|i) = (sum over z in U_i & U_j of 1/chi(z)) / #U_i, exactly."""
    n = len(h.edges)
    out = []
    for i in range(n):
        Ui = h.edges[i]
        row = []
        for j in range(n):
            s = sum((Fraction(1, h.chi(z)) for z in Ui & h.edges[j]), Fraction(0))
            row.append(s / len(Ui))
        out.append(row)
    return out


def registration_walk_discrepancies(h: Hypergraph, length: int) -> list[tuple[tuple[int, ...], Fraction, Fraction]]:
    """All index vectors of the given length where registration and random walk disagree."""
    out = []
    for idx in itertools.product(range(len(h.edges)), repeat=length):
        a, b = h.registration(idx), h.walk_path(idx)
        if a != b:
            out.append((idx, a, b))
    return out
