import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasetopo.complexes import (
    ComplexError, FilteredComplex, SimplicialComplex, classical_complex, classical_edges, classical_gap,
    flag_complex, inclusion_check, inclusion_witness, nerve_complex, quantum_complex, quantum_nerve,
    snap_to_grid, vietoris_rips,
)
from phasetopo.geometry import SensorNet, build_partition, fibonacci_net, partition_radii
from phasetopo.persistence import betti_numbers
from phasetopo.registration import ProbabilityTable, classical_table, cover_operators
from phasetopo.symbols import cap, whole_sphere


def equilateral_net(side):
    # three points on a circle of latitude with pairwise geodesic distance `side`
    c = math.cos(side)
    u = math.sqrt((2 * c + 1) / 3)  # x.y = u^2 + (1 - u^2) cos(2pi/3)
    s = math.sqrt(1 - u * u)
    pts = [(s * math.cos(a), s * math.sin(a), u) for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
    return SensorNet.from_points(pts)


def square_distances(side):
    D = np.full((4, 4), side)
    D[0, 2] = D[2, 0] = D[1, 3] = D[3, 1] = side * math.sqrt(2)
    np.fill_diagonal(D, 0)
    return D


class TestFlag:
    def test_empty_predicate(self):
        K = flag_complex(np.zeros((5, 5), dtype=bool))
        assert K.counts() == [5]

    def test_complete_on_four(self):
        A = ~np.eye(4, dtype=bool)
        assert flag_complex(A, max_dim=3).counts() == [4, 6, 4, 1]

    def test_triangle_plus_isolated(self):
        edges = {(1, 2), (2, 3), (1, 3)}
        K = flag_complex(lambda a, b: (min(a, b), max(a, b)) in edges, vertices=[1, 2, 3, 4])
        assert K.counts() == [4, 3, 1]
        assert (1, 2, 3) in K and (4,) in K

    def test_asymmetric_rejected(self):
        A = np.zeros((3, 3), dtype=bool)
        A[0, 1] = True
        with pytest.raises(ComplexError):
            flag_complex(A)

    @given(st.integers(1, 8), st.floats(0.0, 1.0), st.integers(0, 1000), st.integers(1, 3))
    def test_cliques_match_bruteforce(self, n, p, seed, max_dim):
        rng = np.random.default_rng(seed)
        U = np.triu(rng.random((n, n)) < p, 1)
        A = U | U.T
        K = flag_complex(A, max_dim=max_dim)
        K.check_closed()
        expected = {s for r in range(1, max_dim + 2) for s in itertools.combinations(range(n), r)
                    if all(A[a, b] for a, b in itertools.combinations(s, 2))}
        assert K.simplex_set == expected


class TestComplexBasics:
    def test_closure_and_euler(self):
        K = SimplicialComplex.from_simplices([(0, 1, 2), (2, 3)])
        K.check_closed()
        assert K.counts() == [4, 4, 1]
        assert K.euler_characteristic() == 1

    def test_check_closed_detects_missing_face(self):
        K = SimplicialComplex.from_simplices([(0, 1, 2)], close=False)
        with pytest.raises(ComplexError):
            K.check_closed()

    def test_json_round_trip(self):
        K = flag_complex(~np.eye(5, dtype=bool), max_dim=2)
        assert SimplicialComplex.from_json(K.to_json()) == K

    def test_inclusion(self):
        K = flag_complex(~np.eye(4, dtype=bool), max_dim=2)
        L = K.skeleton(1)
        assert inclusion_check(K, K)
        assert inclusion_check(L, K)
        assert inclusion_witness(K, L) is not None

    def test_inclusion_label_mismatch(self):
        with pytest.raises(ComplexError):
            inclusion_check(SimplicialComplex.from_simplices([(0,)]), SimplicialComplex.from_simplices([(1,)]))


class TestRips:
    def test_strict_threshold(self):
        net = equilateral_net(1.0)
        assert vietoris_rips(net, 1.01).counts() == [3, 3, 1]
        assert vietoris_rips(net, 0.99).counts() == [3]

    @pytest.mark.parametrize("t", [1.0 + 1e-9, 1.2, math.sqrt(2)])
    def test_square(self, t):
        K = vietoris_rips(square_distances(1.0), t)
        assert K.counts() == [4, 4]
        assert betti_numbers(K, 1) == [1, 1]

    def test_monotone(self):
        net = fibonacci_net(30)
        ts = [0.3, 0.5, 0.7, 0.9]
        for s, t in zip(ts, ts[1:]):
            assert inclusion_check(vietoris_rips(net, s, 2), vietoris_rips(net, t, 2))

    def test_snap_to_grid_is_strict(self):
        out = snap_to_grid(np.array([0.5, 1.0, 2.5]), [1.0, 2.0])
        assert out[0] == 1.0 and out[1] == 2.0 and math.isinf(out[2])


class TestClassical:
    def test_small_eps_vertices_only(self):
        net = fibonacci_net(20)
        assert classical_complex(net, 0.05, 1.1).counts() == [20]

    def test_overlap_edge(self):
        eps, lam = 0.5, 1.1
        _, outer = partition_radii(eps, lam)
        d = 1.9 * outer
        net = SensorNet.from_points([(0, 0, 1), (math.sin(d), 0, math.cos(d))])
        assert classical_complex(net, eps, lam).counts() == [2, 1]

    @given(st.floats(0.2, 1.2), st.floats(0.2, 1.2))
    def test_monotone_in_eps(self, e1, e2):
        net = fibonacci_net(25)
        lo, hi = sorted((e1, e2))
        assert inclusion_check(classical_complex(net, lo, 1.1, 2), classical_complex(net, hi, 1.1, 2))

    def test_gap_positive(self):
        net = fibonacci_net(30)
        pou = build_partition(net, 1.0, 1.2)
        t = classical_table(pou)
        assert classical_edges(net, 1.0, 1.2).any()
        assert classical_gap(t, net, 1.0, 1.2) > 0

    def test_rips_locality(self):
        # R_t = C_t when (t/lam, lam t) contains no pairwise distance
        net = fibonacci_net(12)
        lam = 1.05
        gamma = np.unique(np.round(net.distances[np.triu_indices(12, 1)], 12))
        gaps = [(a, b) for a, b in zip(gamma, gamma[1:]) if b / a > lam * lam * 1.01]
        assert gaps, "constructed net needs a gap wider than lambda^2"
        a, b = gaps[0]
        t = math.sqrt(a * b)
        assert t / lam > a and lam * t < b
        assert vietoris_rips(net, t, 2) == classical_complex(net, t, lam, 2)


class TestQuantumComplex:
    def table(self, n=6, seed=0):
        rng = np.random.default_rng(seed)
        P = rng.random((n, n)) * 0.1
        P = P + P.T
        np.fill_diagonal(P, 1.0)
        return ProbabilityTable(P.diagonal(), P, "quantum")

    def test_threshold_above_everything(self):
        assert quantum_complex(self.table(), 0.01, 0.5, normalization="none").counts() == [6]

    def test_zero_threshold_complete(self):
        t = self.table()
        # hbar^m -> 0 as m grows; every pair passes
        assert quantum_complex(t, 200.0, 0.5, max_dim=2, normalization="none").counts() == [6, 15, 20]

    def test_inclusive_threshold(self):
        P = np.array([[1.0, 0.25], [0.25, 1.0]])
        t = ProbabilityTable(P.diagonal(), P, "quantum")
        assert quantum_complex(t, 2.0, 0.5, normalization="none").counts() == [2, 1]


class TestNerve:
    def test_single_set(self):
        assert nerve_complex([whole_sphere()]).counts() == [1]

    def test_disjoint_regions(self):
        K = nerve_complex([cap((0, 0, 1), 0.5), cap((0, 0, -1), 0.5)])
        assert K.counts() == [2]

    def test_tetrahedral_cover(self):
        from phasetopo.pipeline import tetrahedral_cover

        K = nerve_complex(tetrahedral_cover(0.2))
        assert K.counts() == [4, 6, 4]
        assert len(K) == 14
        assert betti_numbers(K) == [1, 0, 1]

    def test_not_a_flag_complex(self):
        # three caps pairwise overlapping without a common point: nerve is a hollow triangle
        caps = [cap((math.cos(a), math.sin(a), 0), 1.2) for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
        K = nerve_complex(caps)
        assert K.counts()[:2] == [3, 3]
        assert K.count(2) == 0

    def test_quantum_m_limit(self):
        with pytest.raises(ComplexError, match="1/8"):
            nerve_complex([whole_sphere()], mode="quantum", m=0.2, k=8)

    def test_quantum_nerve_stats(self):
        from phasetopo.pipeline import tetrahedral_cover

        cover = tetrahedral_cover(0.2)
        K, stats = quantum_nerve(cover_operators(64, cover), 0.1, 64, scale=1e-3)
        assert K.counts() == [4, 6, 4]
        assert all(v > 0 for v in stats.values())
