"""The eleven acceptance criteria, each timed against its budget.

A one-line PASS/FAIL summary per criterion is printed at the end of the run.
"""

import math
import time

import numpy as np
import pytest

from phasetopo.complexes import filtration_from_edges
from phasetopo.geometry import build_partition, fibonacci_net
from phasetopo.persistence import reduce_to_barcode
from phasetopo.pipeline import (
    ExperimentConfig, run_appendix_suite, run_hypergraph, run_inference_pipeline, run_interleaving, run_nerve,
    run_registration_scan, run_trace_correspondence,
)
from phasetopo.quantization import make_context, toeplitz, toeplitz_partition
from phasetopo.symbols import constant

from oracles import euler_from_betti, induced_rank, random_filtered_complex

pytestmark = pytest.mark.slow


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="module")
def registration(cfg):
    return timed(lambda: run_registration_scan(cfg))


@pytest.fixture(scope="module")
def pipeline(cfg):
    return timed(lambda: run_inference_pipeline(cfg))


def test_01_quantization_exactness(record_acceptance):
    def run():
        pou = build_partition(fibonacci_net(150), 0.45, 1.05)
        errs = {}
        for k in (16, 64, 256):
            ctx = make_context(k)
            I = np.eye(k + 1)
            e_one = np.linalg.norm(toeplitz(ctx, constant(1.0)) - I, 2)
            e_sum = np.linalg.norm(sum(toeplitz_partition(ctx, pou)) - I, 2)
            errs[k] = max(e_one, e_sum)
        return errs

    errs, sec = timed(run)
    ok = max(errs.values()) < 1e-10 and sec < 60
    record_acceptance(1, "quantization exactness", ok,
                      "max op-norm error " + ", ".join(f"k={k}: {e:.1e}" for k, e in errs.items()), sec)
    assert ok


def test_02_trace_correspondence(cfg, record_acceptance):
    res, sec = timed(lambda: run_trace_correspondence(cfg.k_list))
    ok = res["pass"] and sec < 60
    record_acceptance(2, "trace correspondence", ok,
                      f"slope {res['slope']:.4f} (need >= 0.9), normalized trace error "
                      f"{res['normalized_trace_max_error']:.1e}", sec)
    assert ok


def test_03_pair_rates(registration, record_acceptance):
    res, sec = registration
    ov, dj = res["overlapping_pair"], res["disjoint_pair"]
    ok = ov["pass"] and dj["pass"] and sec < 120
    record_acceptance(3, "pair registration rates", ok,
                      f"overlapping slope {ov['slope']:.3f}; disjoint p(64) = {dj['p_quantum_k64']:.2e}, "
                      f"log-linear slope {dj['slope_in_k']:.3f}, R^2 {dj['r_squared']:.4f}", sec)
    assert ok


def test_04_quantum_equals_classical(pipeline, record_acceptance):
    rep, sec = pipeline
    row = rep.data["runs"][0]
    ok = row["Q_a_equals_C_a"] and row["Q_b_equals_C_b"] and row["inclusion"] and sec < 120
    record_acceptance(4, "Q = C at a and b, Q_a in Q_b", ok,
                      f"k={row['k']}: Q_a {row['Q_a_counts']} vs C_a {row['C_a_counts']} "
                      f"(sym. diff {row['Q_a_symmetric_difference']}); Q_b {row['Q_b_counts']} vs C_b "
                      f"{row['C_b_counts']} (sym. diff {row['Q_b_symmetric_difference']}); "
                      f"inclusion {row['inclusion']}", sec)
    assert ok


def test_05_pipeline_ranks(pipeline, record_acceptance):
    rep, sec = pipeline
    row = rep.data["runs"][0]
    scan = rep.data["eps_scan"]
    ok = (row["ranks"] == [1, 0, 1] and scan["plateau_factor"] >= 1.5 and rep.data["a_b_inside_plateau"]
          and sec < 600)
    record_acceptance(5, "desk pipeline recovers H(S^2)", ok,
                      f"ranks {row['ranks']}, plateau {scan['plateau']} factor {scan['plateau_factor']:.2f}", sec)
    assert ok


def test_06_interleaving(cfg, record_acceptance):
    res, sec = timed(lambda: run_interleaving(cfg))
    ok = res["passed"] and sec < 120
    record_acceptance(6, "interleaving inclusions", ok,
                      f"{res['checked']} inclusions and {len(res['sandwich'])} sandwiches, "
                      f"{len(res['failures'])} failures", sec)
    assert ok


def test_07_persistence_engine(record_acceptance):
    def run():
        mismatches = euler_bad = 0
        for seed in range(200):
            fc = random_filtered_complex(seed)
            bc = reduce_to_barcode(fc)
            grid = fc.grid()
            subs = {g: fc.sublevel(g) for g in grid}
            for K in subs.values():
                euler_bad += K.euler_characteristic() != euler_from_betti(K)
            for i, s in enumerate(grid):
                for t in grid[i:]:
                    for q in range(fc.complex.dimension + 1):
                        mismatches += bc.count_containing(q, s, t) != induced_rank(subs[s], subs[t], q)
        r2 = math.sqrt(2)
        D = np.array([[0, 1, r2, 1], [1, 0, 1, r2], [r2, 1, 0, 1], [1, r2, 1, 0]])
        square = reduce_to_barcode(filtration_from_edges(D, max_dim=2)).degree(1)
        return mismatches, euler_bad, square

    (mismatches, euler_bad, square), sec = timed(run)
    ok = mismatches == 0 and euler_bad == 0 and square == [(1.0, math.sqrt(2))] and sec < 120
    record_acceptance(7, "persistence engine vs brute force", ok,
                      f"200 complexes, {mismatches} rank mismatches, {euler_bad} Euler failures, "
                      f"square H1 {square}", sec)
    assert ok


def test_08_nerve(cfg, record_acceptance):
    res, sec = timed(lambda: run_nerve(cfg))
    ok = res["passed"] and sec < 180
    record_acceptance(8, "nerve inference", ok,
                      f"classical homology {res['classical_betti']}, quantum nerve equal "
                      f"{res['quantum_equals_classical']} (k={cfg.nerve_k}, m={cfg.nerve_m})", sec)
    assert ok


def test_09_triple_registration(registration, record_acceptance):
    res, sec = registration
    tr = res["triple_registration"]
    ok = tr["pass"] and sec < 180
    record_acceptance(9, "triple registration rate", ok, f"slope {tr['slope']:.3f} (need >= 0.12)", sec)
    assert ok


def test_10_appendix(cfg, record_acceptance):
    res, sec = timed(lambda: run_appendix_suite(cfg))
    c = res["exact_checks"]
    slopes = ", ".join(f"{r['slope']:.2f}" for r in res["reports"])
    ok = res["passed"] and sec < 300
    record_acceptance(10, "appendix suite", ok,
                      f"slopes [{slopes}], kernel/operator rel. diff {c['kernel_vs_operator_relative']:.1e}, "
                      f"||T^2-T||_op {c['defect_op_norm_kmax']:.4f}, k=1 spectrum {c['k1_spectrum']}", sec)
    assert ok


def test_11_hypergraph(record_acceptance):
    res, sec = timed(run_hypergraph)
    ok = res["passed"] and sec < 1
    record_acceptance(11, "hypergraph toy model", ok,
                      f"P(2|1) = {res['transition'][0][1]}, {len(res['k3_discrepancies'])} length-3 disagreements",
                      sec)
    assert ok
