"""Command-line entry point: ``phasetopo <subcommand> [--config PATH] [--k K] [--seed S] [--strict] [--out DIR]``.

Exit status: 0 when every check of the invoked suite passed, 1 when one failed,
2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .geometry import GeometryError
from .pipeline import (
    ConfigError, ExperimentConfig, export_artifacts, run_appendix_suite, run_hypergraph, run_inference_pipeline,
    run_nerve, run_registration_scan,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parse_ks(text: str) -> list[int]:
    try:
        ks = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--k expects integers, got {text!r}") from exc
    if not ks or min(ks) < 1:
        raise ConfigError("--k values must be positive")
    return ks


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.strict:
        cfg.strict_constants = True
    if args.out:
        cfg.out = args.out
    if args.k:
        ks = _parse_ks(args.k)
        if args.command in ("pipeline", "export"):
            cfg.pipeline_k = ks
        elif args.command == "nerve":
            cfg.nerve_k = ks[0]
        else:
            cfg.k_list = ks
    cfg.validate()
    return cfg


def _write_json(cfg: ExperimentConfig, name: str, obj, explicit_out: bool) -> None:
    if not explicit_out:
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(json.dumps(obj, sort_keys=True, indent=1))


def _summary_pipeline(report) -> list[str]:
    lines = []
    for row in report.data["runs"]:
        lines.append(f"k={row['k']}: |Q_a|={sum(row['Q_a_counts'])} |Q_b|={sum(row['Q_b_counts'])} "
                     f"inclusion={row['inclusion']} ranks={row.get('ranks')} "
                     f"{'matches' if row['matches_sphere'] else 'does not match'} H(S^2)=(1,0,1)")
    scan = report.data["eps_scan"]
    lines.append(f"eps plateau: {scan['plateau']} (factor {scan['plateau_factor']:.3g})")
    lines.extend(f"warning: {w}" for w in report.data["warnings"])
    return lines


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="phasetopo", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["pipeline", "scan-registration", "appendix", "nerve", "hypergraph",
                                            "export"])
    parser.add_argument("--config", help="JSON experiment configuration")
    parser.add_argument("--k", help="spin level(s), comma separated")
    parser.add_argument("--seed", type=int, help="tie-break seed for the reductions")
    parser.add_argument("--strict", action="store_true", help="enforce every sensor-scale inequality")
    parser.add_argument("--out", help="output directory")
    args = parser.parse_args(argv)
    explicit_out = bool(args.out)
    try:
        cfg = load_config(args)
        if args.command in ("pipeline", "export"):
            report = run_inference_pipeline(cfg)
            for line in _summary_pipeline(report):
                print(line)
            if args.command == "export" or explicit_out:
                out = Path(cfg.out)
                out.mkdir(parents=True, exist_ok=True)
                for p in export_artifacts(report, out):
                    print(f"wrote {p}")
            passed = report.passed
        elif args.command == "scan-registration":
            res = run_registration_scan(cfg)
            for key in ("overlapping_pair", "triple_registration"):
                r = res[key]
                print(f"{r['quantity']}: slope {r['slope']:.4f} (need >= {r['threshold']}) "
                      f"{'pass' if r['pass'] else 'FAIL'}")
            d = res["disjoint_pair"]
            print(f"disjoint pair: p(k=64) = {d['p_quantum_k64']:.3e}, log-linear slope {d['slope_in_k']:.4f}, "
                  f"R^2 {d['r_squared']:.4f} {'pass' if d['pass'] else 'FAIL'}")
            _write_json(cfg, "registration_scan.json", res, explicit_out)
            passed = res["passed"]
        elif args.command == "appendix":
            res = run_appendix_suite(cfg)
            for r in res["reports"]:
                print(f"{r['quantity']}: slope {r['slope']:.4f} (need >= {r['threshold']}) "
                      f"{'pass' if r['pass'] else 'FAIL'}")
            c = res["exact_checks"]
            print(f"kernel vs operator defect: relative difference {c['kernel_vs_operator_relative']:.2e}")
            print(f"hemisphere: odd-k gap to 1/2 decreasing = {c['odd_k_gap_decreasing']}, "
                  f"||T^2 - T|| at k={max(cfg.k_list)} = {c['defect_op_norm_kmax']:.4f}, k=1 spectrum {c['k1_spectrum']}")
            _write_json(cfg, "appendix.json", res, explicit_out)
            passed = res["passed"]
        elif args.command == "nerve":
            res = run_nerve(cfg)
            print(f"classical nerve {res['classical_counts']} homology {res['classical_betti']}; "
                  f"quantum nerve at k={cfg.nerve_k}, m={cfg.nerve_m}: {res['quantum_counts']} "
                  f"equal={res['quantum_equals_classical']}")
            _write_json(cfg, "nerve.json", res, explicit_out)
            passed = res["passed"]
        else:
            res = run_hypergraph()
            print(f"p_1 = {res['p1']}, p_12 = {res['p12']}, P(2|1) = {res['transition'][0][1]}")
            print(f"length-3 registration/walk disagreements: {len(res['k3_discrepancies'])}")
            _write_json(cfg, "hypergraph.json", res, explicit_out)
            passed = res["passed"]
    except (ConfigError, GeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
