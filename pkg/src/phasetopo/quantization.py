"""Berezin-Toeplitz quantization of the unit sphere at spin level k.

The Hilbert space at level k has the orthonormal basis

    Psi_i(x) = sqrt((k+1) C(k,i)) cos(theta/2)^(k-i) sin(theta/2)^i e^{i i phi},   i = 0..k,

with respect to the normalized area measure (total mass 1), so d = k+1 and the
Bergman kernel is constant on the diagonal. Toeplitz matrices are assembled ring
by ring: a symbol is Fourier-expanded in the azimuth on each latitude ring and
entry (i, i+n) picks up only the n-th coefficient.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln, xlogy

from . import kernels
from .geometry import from_spherical, spherical_coords
from .symbols import Cap, PiecewiseSymbol, SmoothSymbol, Symbol, ZonalSymbol


class QuantizationError(ValueError):
    pass


def amplitudes(k: int, u: np.ndarray) -> np.ndarray:
    """Moduli |Psi_i| at points with cos(theta) = u, shape (len(u), k+1)."""
    u = np.asarray(u, dtype=float)
    i = np.arange(k + 1)
    logc = 0.5 * (math.log(k + 1) + gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1))
    c2 = np.clip((1.0 + u) / 2.0, 0.0, 1.0)[:, None]
    s2 = np.clip((1.0 - u) / 2.0, 0.0, 1.0)[:, None]
    return np.exp(logc + 0.5 * (xlogy(k - i, c2) + xlogy(i, s2)))


def basis_values(k: int, points: np.ndarray) -> np.ndarray:
    """Psi_i(x) for each point, shape (n, k+1), complex."""
    u, phi = spherical_coords(np.atleast_2d(points))
    return amplitudes(k, u) * np.exp(1j * np.outer(phi, np.arange(k + 1)))


@dataclass(frozen=True, eq=False)
class QuantizationContext:
    k: int
    n_theta: int
    n_phi: int
    u: np.ndarray = field(repr=False)
    ring_weights: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    amp: np.ndarray = field(repr=False)

    @property
    def hbar(self) -> float:
        return 1.0 / self.k

    @property
    def dim(self) -> int:
        return self.k + 1

    @property
    def nodes(self) -> np.ndarray:
        """Quadrature nodes, ring-major (index = ring * n_phi + l)."""
        uu = np.repeat(self.u, self.n_phi)
        pp = np.tile(self.phi, self.n_theta)
        return from_spherical(uu, pp)

    @property
    def weights(self) -> np.ndarray:
        return np.repeat(self.ring_weights / self.n_phi, self.n_phi)

    def basis_density(self, i: int, j: int) -> np.ndarray:
        """(Psi_j, Psi_i) at every node, i.e. Psi_j * conj(Psi_i)."""
        ring = self.amp[:, i] * self.amp[:, j]
        return (ring[:, None] * np.exp(1j * (j - i) * self.phi)[None, :]).ravel()

    def gram(self) -> np.ndarray:
        return toeplitz(self, constant_one())


def constant_one() -> ZonalSymbol:
    return ZonalSymbol(lambda u: np.ones_like(np.asarray(u, dtype=float)), (), 0)


def make_context(k: int, n_theta: int | None = None, n_phi: int | None = None) -> QuantizationContext:
    """Product quadrature: Gauss-Legendre in cos(theta), uniform in azimuth."""
    if k < 1:
        raise QuantizationError("spin level k must be >= 1")
    n_theta = 2 * k + 24 if n_theta is None else n_theta
    n_phi = 4 * k + 32 if n_phi is None else n_phi
    if n_theta < k + 2:
        raise QuantizationError(f"n_theta = {n_theta} < k+2 = {k + 2}: Gauss nodes in cos(theta) "
                                "must integrate degree-2k basis densities exactly")
    if n_phi < 2 * k + 2:
        raise QuantizationError(f"n_phi = {n_phi} < 2k+2 = {2 * k + 2}: azimuthal grid must resolve "
                                "Fourier modes up to 2k")
    u, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    amp = amplitudes(k, u)
    for a in (u, w, phi, amp):
        a.setflags(write=False)
    return QuantizationContext(k, n_theta, n_phi, u, w / 2.0, phi, amp)


def _assemble(amp: np.ndarray, weights: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    return kernels.assemble_rings(np.ascontiguousarray(amp), np.ascontiguousarray(weights),
                                  np.ascontiguousarray(coeffs))


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise QuantizationError("symbol produced NaN or infinite values")


def ring_coefficients(samples: np.ndarray, k: int) -> np.ndarray:
    """Azimuthal Fourier coefficients c_n = mean_l f(phi_l) e^{i n phi_l}, n = 0..k."""
    return np.fft.ifft(samples, axis=1)[:, : k + 1]


def toeplitz_grid_values(ctx: QuantizationContext, values: np.ndarray, rings=None) -> np.ndarray:
    """T(f) from symbol samples on the context grid (n_theta x n_phi, or a subset of rings)."""
    values = np.asarray(values, dtype=float).reshape(-1, ctx.n_phi)
    _check_finite(values)
    amp, w = ctx.amp, ctx.ring_weights
    if rings is not None:
        amp, w = amp[rings], w[rings]
    return _assemble(amp, w, ring_coefficients(values, ctx.k))


def toeplitz(ctx: QuantizationContext, f: Symbol) -> np.ndarray:
    """Matrix M[i, j] = integral of f * (Psi_j, Psi_i) against the normalized measure."""
    if isinstance(f, ZonalSymbol):
        vals = np.asarray(f.profile(ctx.u), dtype=float) * np.ones_like(ctx.u)
        _check_finite(vals)
        return np.diag((ctx.ring_weights * vals) @ (ctx.amp ** 2)).astype(complex)
    if isinstance(f, PiecewiseSymbol):
        return toeplitz_piecewise(ctx.k, f)
    vals = f(ctx.nodes)
    return toeplitz_grid_values(ctx, vals)


def zonal_exact_diagonal(k: int, profile, breakpoints=(), degree: int = 8) -> np.ndarray:
    """Exact diagonal of T(profile(cos theta)) for a piecewise-polynomial profile.

    Splits [-1, 1] at the breakpoints and applies Gauss-Legendre with enough nodes
    to integrate degree k + ``degree`` polynomials exactly on each piece.
    """
    cuts = sorted({-1.0, 1.0, *[float(b) for b in breakpoints if -1.0 < b < 1.0]})
    n = (k + degree) // 2 + 2
    x, w = np.polynomial.legendre.leggauss(n)
    diag = np.zeros(k + 1)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wu = 0.25 * (hi - lo) * w
        vals = np.asarray(profile(u), dtype=float) * np.ones_like(u)
        _check_finite(vals)
        diag += (wu * vals) @ amplitudes(k, u) ** 2
    return diag


def toeplitz_zonal_exact(ctx_or_k, f) -> np.ndarray:
    k = ctx_or_k if isinstance(ctx_or_k, int) else ctx_or_k.k
    if isinstance(f, PiecewiseSymbol):
        if not f.zonal:
            raise QuantizationError("symbol is not zonal")
        caps = f.caps
        cuts = [c.center[2] * math.cos(c.radius) for c in caps]

        def profile(u, f=f):
            return f(from_spherical(u, np.zeros_like(u)))

        return np.diag(zonal_exact_diagonal(k, profile, cuts, 0)).astype(complex)
    if not isinstance(f, ZonalSymbol):
        raise QuantizationError("toeplitz_zonal_exact needs a zonal symbol")
    return np.diag(zonal_exact_diagonal(k, f.profile, f.breakpoints, f.degree)).astype(complex)


# --- piecewise-constant symbols on cap arrangements -------------------------------------


def _circle_crossings(c1: Cap, c2: Cap) -> list[float]:
    """u = cos(theta) of the intersection points of two cap boundary circles."""
    g = float(c1.center @ c2.center)
    if abs(g) > 1 - 1e-14:
        return []
    h1, h2 = math.cos(c1.radius), math.cos(c2.radius)
    a = (h1 - h2 * g) / (1 - g * g)
    b = (h2 - h1 * g) / (1 - g * g)
    t2 = 1 - (a * a + b * b + 2 * a * b * g)
    if t2 < 0:
        return []
    n = np.cross(c1.center, c2.center)
    n /= np.linalg.norm(n)
    base = a * c1.center[2] + b * c2.center[2]
    t = math.sqrt(t2)
    return [base + t * n[2], base - t * n[2]]


def piecewise_breakpoints(caps) -> list[float]:
    cuts = {-1.0, 1.0}
    for c in caps:
        cuts.update(c.u_extent())
    for i, c1 in enumerate(caps):
        for c2 in caps[i + 1:]:
            cuts.update(_circle_crossings(c1, c2))
    return sorted(u for u in cuts if -1.0 <= u <= 1.0)


def piecewise_rings(caps, k: int, nodes_per_piece: int | None = None):
    """Latitude rings for an arrangement: Gauss nodes in a cosine-clustered variable on
    each band between breakpoints (absorbs the square-root behaviour of arc widths at
    tangency latitudes). Returns (u, weights) with weights summing to 1."""
    cuts = piecewise_breakpoints(list(caps))
    q = nodes_per_piece or (k + 48)
    s, ws = np.polynomial.legendre.leggauss(q)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    us, ww = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo < 1e-15:
            continue
        us.append(0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(np.pi * s))
        ww.append(ws * 0.5 * (hi - lo) * np.pi * np.sin(np.pi * s))
    return np.concatenate(us), np.concatenate(ww) / 2.0


def _ring_arc(c: Cap, u: float):
    """Membership of cap ``c`` on the ring cos(theta) = u: 'all', 'none' or (phi_c, half_width)."""
    s = math.sqrt(max(0.0, 1 - u * u))
    uc = float(c.center[2])
    sc = math.sqrt(max(0.0, 1 - uc * uc))
    cr = math.cos(c.radius)
    if s * sc < 1e-300:
        return "all" if u * uc > cr else "none"
    kappa = (cr - u * uc) / (s * sc)
    if kappa <= -1:
        return "all"
    if kappa >= 1:
        return "none"
    return (math.atan2(c.center[1], c.center[0]), math.acos(kappa))


def piecewise_ring_coefficients(sym: PiecewiseSymbol, u: np.ndarray, k: int) -> np.ndarray:
    caps = sym.caps
    n = np.arange(1, k + 1)
    out = np.zeros((len(u), k + 1), dtype=complex)
    twopi = 2 * np.pi
    for r, ur in enumerate(u):
        state = [_ring_arc(c, float(ur)) for c in caps]
        ends = []
        for st in state:
            if isinstance(st, tuple):
                ends.extend([(st[0] - st[1]) % twopi, (st[0] + st[1]) % twopi])
        if not ends:
            bits = np.array([[st == "all" for st in state]], dtype=bool).reshape(1, len(caps))
            out[r, 0] = float(sym.value(bits)[0])
            continue
        ends = np.sort(np.array(ends))
        starts = ends
        stops = np.append(ends[1:], ends[0] + twopi)
        mids = 0.5 * (starts + stops)
        bits = np.empty((len(mids), len(caps)), dtype=bool)
        for j, st in enumerate(state):
            if st == "all":
                bits[:, j] = True
            elif st == "none":
                bits[:, j] = False
            else:
                delta = np.angle(np.exp(1j * (mids - st[0])))
                bits[:, j] = np.abs(delta) < st[1]
        vals = np.asarray(sym.value(bits), dtype=float)
        out[r, 0] = np.sum(vals * (stops - starts)) / twopi
        e = (np.exp(1j * np.outer(stops, n)) - np.exp(1j * np.outer(starts, n))) / (2j * np.pi * n)
        out[r, 1:] = vals @ e
    return out


def toeplitz_piecewise(k: int, sym: PiecewiseSymbol, nodes_per_piece: int | None = None) -> np.ndarray:
    if sym.zonal:
        return toeplitz_zonal_exact(k, sym)
    u, w = piecewise_rings(sym.caps, k, nodes_per_piece)
    return _assemble(amplitudes(k, u), w, piecewise_ring_coefficients(sym, u, k))


# --- partitions of unity ------------------------------------------------------------------


def toeplitz_partition(ctx: QuantizationContext, pou) -> list[np.ndarray]:
    """F_z = T(f_z) for every sensor of a partition of unity, on the context grid."""
    vals = pou.evaluate(ctx.nodes).tocsc()
    out = []
    for z in range(vals.shape[1]):
        col = vals[:, z]
        idx = col.indices
        rings = np.unique(idx // ctx.n_phi)
        pos = np.searchsorted(rings, idx // ctx.n_phi)
        samples = np.zeros((len(rings), ctx.n_phi))
        samples[pos, idx % ctx.n_phi] = col.data
        out.append(toeplitz_grid_values(ctx, samples, rings))
    return out


# --- kernel -------------------------------------------------------------------------------


def kernel_intensity(ctx_or_k, x, y) -> float:
    """|K(x, y)|^2 from the basis: |sum_i Psi_i(x) conj(Psi_i(y))|^2 (normalized measure)."""
    k = ctx_or_k if isinstance(ctx_or_k, int) else ctx_or_k.k
    vx = basis_values(k, np.asarray(x, dtype=float))
    vy = basis_values(k, np.asarray(y, dtype=float))
    return float(np.abs(np.sum(vx * vy.conj())) ** 2)


def kernel_intensity_closed(k: int, cos_angle) -> np.ndarray:
    """Closed form (k+1)^2 ((1 + x.y)/2)^k of the kernel intensity."""
    t = np.clip((1.0 + np.asarray(cos_angle, dtype=float)) / 2.0, 0.0, 1.0)
    return (k + 1) ** 2 * t ** k


def kernel_diagonal_ratio(k: int, x=(0.0, 0.0, 1.0), area: float = 2 * math.pi) -> float:
    """K(x,x) in the unnormalized measure (sphere of the given area) divided by (2 pi hbar)^-1."""
    vx = basis_values(k, np.asarray(x, dtype=float))
    kxx = float(np.sum(np.abs(vx) ** 2)) / area
    return kxx / (k / (2 * math.pi))


# --- traces and helpers -------------------------------------------------------------------


def normalized_trace(op: np.ndarray) -> float:
    op = np.asarray(op)
    return float(np.real(np.trace(op))) / op.shape[0]


def weyl_trace_ratio(op: np.ndarray, integral: float, k: int, area: float = 2 * math.pi) -> float:
    """tr T(f) divided by its leading Weyl term Area/(2 pi hbar) * integral(f dmu)."""
    return float(np.real(np.trace(op))) / (area * k / (2 * math.pi) * integral)


def is_hermitian(op: np.ndarray, rtol: float = 1e-12) -> bool:
    op = np.asarray(op)
    scale = max(1.0, float(np.max(np.abs(op)))) if op.size else 1.0
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= rtol * scale)


def hermitian_part(op: np.ndarray) -> np.ndarray:
    return 0.5 * (op + op.conj().T)


# --- operator cache -----------------------------------------------------------------------

MAGIC = b"BTOP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


class CacheFormatError(QuantizationError):
    pass


def save_operator(path, op: np.ndarray, k: int | None = None) -> None:
    op = np.asarray(op, dtype=np.complex128)
    d = op.shape[0]
    if op.shape != (d, d):
        raise QuantizationError("operator must be square")
    k = d - 1 if k is None else k
    buf = _HEADER.pack(MAGIC, FORMAT_VERSION, k, d) + op.astype("<c16").tobytes(order="C")
    Path(path).write_bytes(buf)


def load_operator(path) -> tuple[int, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CacheFormatError(f"{path}: truncated header")
    magic, version, k, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CacheFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CacheFormatError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != d * d * 16:
        raise CacheFormatError(f"{path}: expected {d * d * 16} payload bytes, found {len(body)}")
    op = np.frombuffer(body, dtype="<c16").reshape(d, d).astype(np.complex128)
    return k, op


class OperatorCache:
    """Directory of BTOP files keyed by an arbitrary string."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        import hashlib

        return self.root / (hashlib.sha1(key.encode()).hexdigest()[:20] + ".btop")

    def get(self, key: str):
        p = self._path(key)
        if not p.exists():
            return None
        return load_operator(p)[1]

    def put(self, key: str, op: np.ndarray, k: int) -> None:
        save_operator(self._path(key), op, k)

    def get_or_compute(self, key: str, k: int, compute):
        op = self.get(key)
        if op is None:
            op = compute()
            self.put(key, op, k)
        return op


__all__ = [
    "QuantizationContext", "QuantizationError", "make_context", "toeplitz", "toeplitz_zonal_exact",
    "toeplitz_piecewise", "toeplitz_partition", "kernel_intensity", "kernel_intensity_closed",
    "normalized_trace", "save_operator", "load_operator", "amplitudes", "basis_values",
    "SmoothSymbol",
]
