import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasetopo.geometry import build_partition, fibonacci_net
from phasetopo.quantization import make_context, toeplitz_partition
from phasetopo.registration import (
    Hypergraph, ProbabilityTable, RegistrationError, RouteMismatch, classical_kfold, classical_table,
    cover_operators, husimi_expectation, hypergraph_transition, luders_posterior, maximally_mixed, psd_sqrt,
    quantum_kfold, quantum_kfold_index, quantum_table, registration_walk_discrepancies,
)
from phasetopo.symbols import SmoothSymbol, cap, constant, polar_cap, whole_sphere


def random_state(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


@pytest.fixture(scope="module")
def small_setup():
    net = fibonacci_net(20)
    pou = build_partition(net, 1.2, 1.3)
    return net, pou


class TestClassical:
    def test_single_sensor(self):
        pou = build_partition(fibonacci_net(1), 6.2, 1.05)
        t = classical_table(pou)
        assert t.singles[0] == pytest.approx(1.0, abs=1e-12)
        assert t.pairs[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_sums(self, small_setup):
        _, pou = small_setup
        t = classical_table(pou)
        assert t.singles.sum() == pytest.approx(1.0, abs=1e-12)
        assert t.pairs.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(t.pairs, t.pairs.T)
        assert np.allclose(t.pairs.sum(axis=1), t.singles, atol=1e-9)

    def test_disjoint_supports_exact_zero(self):
        pou = build_partition(fibonacci_net(12), 1.1, 1.5)
        t = classical_table(pou)
        assert pou.net.distances[0, 10] >= 2 * pou.outer_radius
        assert t.pairs[0, 10] == 0.0 and t.pairs[10, 0] == 0.0

    def test_json_round_trip(self, small_setup):
        _, pou = small_setup
        t = classical_table(pou)
        back = ProbabilityTable.from_json(t.to_json())
        assert np.array_equal(back.pairs, t.pairs) and back.kind == "classical"
        assert back.meta["epsilon"] == pou.epsilon


class TestQuantum:
    def test_sums_and_marginals(self, small_setup):
        _, pou = small_setup
        t = quantum_table(make_context(24), pou)
        assert t.pairs.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(t.pairs, t.pairs.T)
        assert np.allclose(t.pairs.sum(axis=1), t.singles, atol=1e-9)

    @pytest.mark.parametrize("k", [8, 32, 64])
    def test_route_equivalence(self, small_setup, k):
        _, pou = small_setup
        t = quantum_table(make_context(k), pou, route="both", rtol=1e-6)
        assert t.meta["route"] == "both"

    def test_route_mismatch_reported(self, small_setup):
        _, pou = small_setup
        ctx = make_context(16)
        ops = toeplitz_partition(ctx, pou)
        ops[0] = ops[0] * 1.01
        with pytest.raises(RouteMismatch):
            quantum_table(ctx, pou, route="both", operators=ops)

    def test_unknown_route(self, small_setup):
        with pytest.raises(RegistrationError):
            quantum_table(make_context(4), small_setup[1], route="magic")

    def test_converges_to_classical(self, small_setup):
        _, pou = small_setup
        c = classical_table(pou)
        errs = [np.abs(quantum_table(make_context(k), pou).pairs - c.pairs).max() for k in (16, 32, 64)]
        assert errs[0] > errs[1] > errs[2]


class TestStates:
    def test_luders_maximally_mixed(self):
        d = 6
        F = random_state(d, 1) * 3
        eta = luders_posterior(maximally_mixed(d), F)
        assert np.allclose(eta, F / np.trace(F).real, atol=1e-13)

    def test_luders_identity(self):
        rho = random_state(5, 2)
        assert np.allclose(luders_posterior(rho, np.eye(5)), rho, atol=1e-14)

    def test_luders_projector(self):
        rho = random_state(4, 3)
        v = np.array([1, 1j, 0, 1]) / math.sqrt(3)
        P = np.outer(v, v.conj())
        assert np.allclose(luders_posterior(rho, P), P, atol=1e-12)

    def test_luders_vanishing(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(RegistrationError, match="vanishing"):
            luders_posterior(rho, np.diag([0.0, 1.0]))

    def test_psd_sqrt_rejects_negative(self):
        with pytest.raises(RegistrationError):
            psd_sqrt(np.diag([1.0, -0.1]))
        S = psd_sqrt(np.diag([4.0, -1e-14]))
        assert np.allclose(S, np.diag([2.0, 0.0]))

    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_psd_sqrt_squares_back(self, d, seed):
        F = random_state(d, seed)
        S = psd_sqrt(F)
        assert np.allclose(S @ S, F, atol=1e-12)

    def test_husimi(self):
        ctx = make_context(20)
        rho = random_state(21, 4)
        assert husimi_expectation(ctx, rho, constant(1.0)) == pytest.approx(1.0, abs=1e-12)
        assert husimi_expectation(ctx, rho, SmoothSymbol(lambda x: x[:, 0] ** 2)) >= -1e-10

    def test_husimi_maximally_mixed(self):
        f = SmoothSymbol(lambda x: x[:, 2] ** 2)
        for k in (8, 32):
            ctx = make_context(k)
            assert husimi_expectation(ctx, maximally_mixed(k + 1), f) == pytest.approx(1 / 3, abs=1e-12)


class TestKfold:
    def test_identity_operators(self):
        assert quantum_kfold(5, [np.eye(5)] * 4) == pytest.approx(1.0)

    def test_two_fold_is_pair_trace(self):
        A, B = random_state(6, 5), random_state(6, 6)
        assert quantum_kfold(6, [A, B]) == pytest.approx(np.trace(A @ B).real / 6, rel=1e-12)

    def test_whole_sphere_cover(self):
        for k in (1, 2, 4):
            assert classical_kfold([whole_sphere()], [0] * k) == pytest.approx(1.0, abs=1e-14)

    def test_empty_intersection(self):
        cover = [cap((0, 0, 1), 1.8), cap((0, 0, -1), 1.8), cap((0, 0, 1), 0.3)]
        assert classical_kfold(cover, [1, 2]) == 0.0

    def test_uncovered_rejected(self):
        with pytest.raises(RegistrationError, match="cover"):
            classical_kfold([cap((0, 0, 1), 1.0)], [0])

    def test_two_cap_cover_index_121(self):
        cover = [polar_cap(0.0, 0.0, 1.9), polar_cap(math.pi, 0.0, 1.9)]
        pc = classical_kfold(cover, [0, 1, 0])
        errs = [abs(quantum_kfold_index(cover_operators(k, cover), [0, 1, 0]) - pc) for k in (16, 32, 64, 128)]
        slope = np.polyfit(np.log([1 / 16, 1 / 32, 1 / 64, 1 / 128]), np.log(errs), 1)[0]
        assert slope >= 0.12


class TestHypergraph:
    def test_documented_example(self):
        h = Hypergraph.build([1, 2, 3], [{1, 2}, {2, 3}])
        assert h.registration([0]) == Fraction(1, 2)
        assert h.registration([0, 1]) == Fraction(1, 8)
        P = hypergraph_transition(h)
        assert P[0][1] == Fraction(1, 4)
        assert P[0][1] == h.registration([0, 1]) / h.registration([0])

    def test_rows_are_stochastic(self):
        h = Hypergraph.build(range(5), [{0, 1, 2}, {2, 3}, {3, 4, 0}])
        assert all(sum(row) == 1 for row in hypergraph_transition(h))

    def test_disjoint_and_single(self):
        h = Hypergraph.build([1, 2, 3, 4], [{1, 2}, {3, 4}])
        assert hypergraph_transition(h)[0][1] == 0
        assert hypergraph_transition(Hypergraph.build([1, 2], [{1, 2}])) == [[1]]

    def test_two_step_agrees_three_step_differs(self):
        h = Hypergraph.build([1, 2, 3], [{1, 2}, {2, 3}])
        assert not registration_walk_discrepancies(h, 2)
        h3 = Hypergraph.build([1, 2, 3], [{1, 2}, {2, 3}, {1, 3}])
        assert registration_walk_discrepancies(h3, 3)

    def test_invalid(self):
        with pytest.raises(RegistrationError):
            Hypergraph.build([1, 2, 3], [{1, 2}])
        with pytest.raises(RegistrationError):
            Hypergraph.build([1, 2], [{1, 2}, set()])
