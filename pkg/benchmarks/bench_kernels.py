"""Compiled vs pure-Python hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times ring assembly (Toeplitz matrices) at several spin levels and the Z/2
column reduction on Rips filtrations of Fibonacci nets, and checks that both
backends agree.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from phasetopo import _fallback
from phasetopo.complexes import rips_filtration
from phasetopo.geometry import fibonacci_net
from phasetopo.persistence import boundary_columns, order_simplices
from phasetopo.quantization import amplitudes

try:
    from phasetopo import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def ring_inputs(k: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    n_rings = 2 * k + 24
    u = np.cos(np.linspace(0.01, np.pi - 0.01, n_rings))
    amp = np.ascontiguousarray(amplitudes(k, u))
    weights = rng.random(n_rings)
    coeffs = rng.standard_normal((n_rings, k + 1)) + 1j * rng.standard_normal((n_rings, k + 1))
    return amp, weights, np.ascontiguousarray(coeffs)


def reduction_inputs(n: int, t_max: float):
    net = fibonacci_net(n)
    fc = rips_filtration(net, list(np.linspace(0.05, t_max, 24)), max_dim=3)
    indptr, indices, dims = boundary_columns(order_simplices(fc))
    return indptr, indices, dims


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the fallback is available")
        return
    print(f"{'kernel':<34}{'python [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}")
    for k in (32, 64, 128, 256):
        amp, w, c = ring_inputs(k)
        a = _fallback.assemble_rings(amp, w, c)
        b = _ckernels.assemble_rings(amp, w, c)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
        tp = best_of(lambda: _fallback.assemble_rings(amp, w, c), args.repeat)
        tc = best_of(lambda: _ckernels.assemble_rings(amp, w, c), args.repeat)
        print(f"{'assemble_rings k=%d' % k:<34}{1e3 * tp:>12.2f}{1e3 * tc:>15.2f}{tp / tc:>9.1f}")
    for n, t in ((40, 0.9), (80, 0.6), (150, 0.45)):
        ip, ix, dm = reduction_inputs(n, t)
        a = _fallback.reduce_columns(ip, ix, dm)
        b = _ckernels.reduce_columns(ip, ix, dm)
        assert np.array_equal(a, b)
        tp = best_of(lambda: _fallback.reduce_columns(ip, ix, dm), args.repeat)
        tc = best_of(lambda: _ckernels.reduce_columns(ip, ix, dm), args.repeat)
        label = f"reduce_columns n={n} ({len(dm)} cells)"
        print(f"{label:<34}{1e3 * tp:>12.2f}{1e3 * tc:>15.2f}{tp / tc:>9.1f}")


if __name__ == "__main__":
    main()
