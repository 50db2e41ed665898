"""Toeplitz calculus for piecewise-constant symbols: Schatten-norm defects and scaling fits."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import eval_legendre

from .quantization import toeplitz_piecewise
from .registration import integrate_piecewise, psd_sqrt
from .symbols import Cap, CapRegion, Complement, PiecewiseSymbol, Region, product, zonal_indicator

SPECTRUM_SLACK = 1e-10


class AppendixError(ValueError):
    pass


def schatten_norm(op: np.ndarray, p: float) -> float:
    """(tr|T|^p / d)^(1/p)."""
    if p < 1:
        raise AppendixError(f"Schatten exponent must be >= 1 (got {p})")
    op = np.asarray(op)
    d = op.shape[0]
    if np.allclose(op, op.conj().T, rtol=0, atol=1e-13 * max(1.0, float(np.abs(op).max(initial=0)))):
        s = np.abs(np.linalg.eigvalsh(0.5 * (op + op.conj().T)))
    else:
        s = np.linalg.svd(op, compute_uv=False)
    if math.isinf(p):
        return float(s.max(initial=0.0))
    return float((np.sum(s ** p) / d) ** (1.0 / p))


def indicator(region: Region) -> PiecewiseSymbol:
    return PiecewiseSymbol.from_regions([region], [1.0])


def region_operator(k: int, region: Region | PiecewiseSymbol) -> np.ndarray:
    sym = region if isinstance(region, PiecewiseSymbol) else indicator(region)
    return toeplitz_piecewise(k, sym)


def _check_unit_spectrum(ev: np.ndarray) -> None:
    if ev.size and (ev.min() < -SPECTRUM_SLACK or ev.max() > 1 + SPECTRUM_SLACK):
        raise AppendixError(f"T_A has eigenvalues in [{ev.min():.3e}, {ev.max():.3e}], outside [0, 1]; "
                            "quadrature failure")


def good_set_defect(k: int, region: Region) -> float:
    """||T_A^2 - T_A||_1 = tr(T_A - T_A^2) / d, using 0 <= T_A <= 1."""
    ev = np.linalg.eigvalsh(region_operator(k, region))
    _check_unit_spectrum(ev)
    return float(np.sum(ev - ev * ev) / len(ev))


# --- kernel double integrals --------------------------------------------------------------


def kernel_legendre_coefficients(k: int) -> np.ndarray:
    """a_l with ((1 + t)/2)^k = sum_l a_l P_l(t), l = 0..k."""
    x, w = np.polynomial.legendre.leggauss(k + 2)
    l = np.arange(k + 1)
    P = eval_legendre(l[:, None], x[None, :])
    return (2 * l + 1) / 2.0 * (P @ (w * ((1 + x) / 2.0) ** k))


def _zonal_moments(u0: float, above: bool, lmax: int) -> np.ndarray:
    """Q_l = (1/2) * integral of P_l(u) over {u > u0} (or {u < u0})."""
    l = np.arange(lmax + 1)
    upper = np.empty(lmax + 1)
    upper[0] = (1.0 - u0) / 2.0
    if lmax >= 1:
        ll = l[1:]
        upper[1:] = (eval_legendre(ll - 1, u0) - eval_legendre(ll + 1, u0)) / (2 * (2 * ll + 1))
    if above:
        return upper
    full = np.zeros(lmax + 1)
    full[0] = 1.0
    return full - upper


def _zonal_description(region: Region) -> tuple[float, bool]:
    """(u0, above) for a zonal cap region or the complement of one."""
    inner, flip = region, False
    if isinstance(region, Complement):
        inner, flip = region.inner, True
    if not isinstance(inner, CapRegion) or not inner.cap.zonal:
        raise AppendixError("exact kernel integral needs a zonal cap or its complement")
    c: Cap = inner.cap
    north = c.center[2] > 0
    if north:
        u0, above = math.cos(c.radius), True
    else:
        u0, above = -math.cos(c.radius), False
    return u0, above != flip


def kernel_integral_zonal(k: int, A: Region, B: Region) -> float:
    """Integral over A x B of |K(x, y)|^2 (normalized measure), divided by d.

    Uses the addition theorem: for zonal sets the double integral of P_l(x.y)
    factorises into Q_l(A) Q_l(B).
    """
    a = kernel_legendre_coefficients(k)
    qa = _zonal_moments(*_zonal_description(A), k)
    qb = _zonal_moments(*_zonal_description(B), k)
    d = k + 1
    return float(d * np.sum(a * qa * qb))


def kernel_integral_grid(k: int, A: Region, B: Region, n_theta: int = 200, n_phi: int = 400,
                         chunk: int = 1024) -> float:
    """Same quantity by brute-force product quadrature (any regions; O(h) boundary error)."""
    from .quantization import make_context

    ctx = make_context(1, n_theta, n_phi)
    X, w = ctx.nodes, ctx.weights
    ia, ib = A.contains(X), B.contains(X)
    XA, wA, XB, wB = X[ia], w[ia], X[ib], w[ib]
    d = k + 1
    total = 0.0
    for s in range(0, len(XA), chunk):
        G = XA[s:s + chunk] @ XB.T
        total += float(wA[s:s + chunk] @ (np.clip((1 + G) / 2, 0, 1) ** k @ wB))
    return d * total


def good_set_integral(k: int, region: Region, method: str = "auto") -> float:
    """Kernel form of the good-set defect: (1/d) * integral over A x A^c of |K|^2."""
    comp = Complement(region)
    if method == "auto":
        try:
            return kernel_integral_zonal(k, region, comp)
        except AppendixError:
            method = "grid"
    if method == "zonal":
        return kernel_integral_zonal(k, region, comp)
    return kernel_integral_grid(k, region, comp)


# --- products, square roots, multi-time ---------------------------------------------------


def as_symbol(f) -> PiecewiseSymbol:
    return f if isinstance(f, PiecewiseSymbol) else indicator(f)


def product_defect(k: int, f, g) -> float:
    """||T(f) T(g) - T(fg)||_2."""
    f, g = as_symbol(f), as_symbol(g)
    Tf, Tg = region_operator(k, f), region_operator(k, g)
    return schatten_norm(Tf @ Tg - region_operator(k, f * g), 2)


def sqrt_defect(k: int, f) -> float:
    """||T(f)^(1/2) - T(f^(1/2))||_4."""
    f = as_symbol(f)
    return schatten_norm(psd_sqrt(region_operator(k, f)) - region_operator(k, f.map(np.sqrt)), 4)


@dataclass
class MultiTime:
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def multi_time_check(k: int, symbols: Sequence) -> MultiTime:
    """tr(P* P)/d with P = T(f_1)^(1/2) ... T(f_m)^(1/2), against the integral of the product."""
    syms = [as_symbol(f) for f in symbols]
    P = None
    for f in syms:
        S = psd_sqrt(region_operator(k, f))
        P = S if P is None else P @ S
    lhs = float(np.real(np.trace(P.conj().T @ P))) / P.shape[0]
    rhs = integrate_piecewise(product(syms), k)
    return MultiTime(lhs, rhs)


# --- hemisphere spectrum --------------------------------------------------------------------


@dataclass
class CapSpectrum:
    eigenvalues: np.ndarray
    min_gap_to_half: float
    defect_op_norm: float


def cap_spectrum(k: int, theta0: float) -> CapSpectrum:
    """Spectrum of T for the polar cap {theta < theta0} (exact zonal path)."""
    sym = zonal_indicator(math.cos(theta0), above=True)
    if theta0 >= math.pi:
        ev = np.ones(k + 1)
    else:
        from .quantization import zonal_exact_diagonal

        ev = np.sort(zonal_exact_diagonal(k, sym.profile, sym.breakpoints, 0))
    return CapSpectrum(ev, float(np.min(np.abs(ev - 0.5))), float(np.max(ev - ev * ev)))


# --- scaling fits ---------------------------------------------------------------------------


@dataclass
class SchattenReport:
    quantity: str
    samples: list[tuple[int, float]]
    slope: float
    intercept: float
    residual: float
    target: float | None = None
    threshold: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.threshold is None or self.slope >= self.threshold

    def to_dict(self) -> dict:
        out = asdict(self)
        out["samples"] = [[int(k), float(v)] for k, v in self.samples]
        out["pass"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def line(self) -> str:
        tgt = "" if self.target is None else f" target {self.target:g}"
        need = "" if self.threshold is None else f" need >= {self.threshold:g}"
        return f"{self.quantity}: slope {self.slope:.4f}{tgt}{need} -> {'pass' if self.passed else 'FAIL'}"


def fit_scaling_exponent(samples: Sequence[tuple[float, float]], quantity: str = "value",
                         target: float | None = None, threshold: float | None = None) -> SchattenReport:
    """Least-squares slope of log(value) against log(hbar); value ~ C * hbar^slope."""
    notes = []
    usable = [(h, v) for h, v in samples if v > 0]
    if len(usable) < len(samples):
        notes.append(f"dropped {len(samples) - len(usable)} non-positive samples")
    if len(usable) < 4:
        raise AppendixError(f"need at least 4 positive samples for a scaling fit, got {len(usable)}")
    x = np.log([h for h, _ in usable])
    y = np.log([v for _, v in usable])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(math.sqrt(res[0] / len(x))) if len(res) else 0.0
    ks = [(int(round(1 / h)), float(v)) for h, v in usable]
    return SchattenReport(quantity, ks, float(slope), float(intercept), residual, target, threshold, notes)


def scan(fn: Callable[[int], float], ks: Sequence[int], quantity: str, target: float | None = None,
         threshold: float | None = None) -> SchattenReport:
    return fit_scaling_exponent([(1.0 / k, fn(k)) for k in ks], quantity, target, threshold)
