"""Command-line front end.

Subcommands: prepare, verify, resources, emit-qasm.  Lattices come from a
mini-language (chain:N:open:aligned, chain:N:ring, three-link-pair,
three-link-ring:N, honeycomb:R:C, file:PATH).  Exit codes: 0 success,
2 invalid configuration, 3 verification check failed, 4 missing declared
cost or unsupported combination, 5 I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .builders import probabilistic_method_circuit
from .errors import (
    CapExceededError,
    ConfigError,
    MissingCostError,
    NotBipartiteError,
    UnsupportedError,
    VbsError,
)
from .ir import cnot_depth
from .lattice import (
    Lattice,
    assign_qubits,
    build_chain,
    build_honeycomb_patch,
    build_three_link_pair,
    build_three_link_ring,
    lattice_from_json,
)
from .methods import (
    oracle_vbs_state,
    run_lcu,
    run_mitigated_islands,
    run_mitigated_retry,
    run_mps,
    run_probabilistic,
)
from .qasm import emit_qasm
from .spinops import SpinValue, aklt_two_site_projector

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK_FAILED = 3
EXIT_UNSUPPORTED = 4
EXIT_IO = 5

METHODS = ("probabilistic", "mitigated_islands", "mitigated_retry", "lcu", "mps")
COUPLINGS = ("all_to_all", "linear", "heavy_hex")


def parse_lattice(spec: str) -> Lattice:
    parts = spec.split(":")
    kind = parts[0]
    if kind == "chain":
        if len(parts) < 3:
            raise ConfigError("chain spec is chain:N:open:aligned|anti or chain:N:ring")
        n = int(parts[1])
        if parts[2] == "ring":
            return build_chain(n, "ring")
        if parts[2] == "open":
            mode = parts[3] if len(parts) > 3 else "aligned"
            if mode == "aligned":
                spins = ("up", "up")
            elif mode == "anti":
                spins = ("up", "down")
            else:
                raise ConfigError(f"unknown chain boundary flavor {mode!r}")
            return build_chain(n, "open", spins)
        raise ConfigError(f"unknown chain boundary {parts[2]!r}")
    if kind == "three-link-pair":
        return build_three_link_pair()
    if kind == "three-link-ring":
        return build_three_link_ring(int(parts[1]))
    if kind == "honeycomb":
        return build_honeycomb_patch(int(parts[1]), int(parts[2]))
    if kind == "file":
        path = Path(spec[len("file:"):])
        try:
            return lattice_from_json(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read lattice file: {exc}") from exc
    raise ConfigError(f"unknown lattice spec {spec!r}")


def validate_config(lattice: Lattice, twice_s: int, method: str):
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; pick one of {METHODS}")
    lat_spin = lattice.uniform_twice_spin()
    if lat_spin != twice_s:
        raise ConfigError(
            f"lattice {lattice.name!r} encodes 2S={lat_spin} sites but --spin {twice_s} was requested"
        )
    if method == "mps":
        if twice_s != 2 or lattice.boundary not in ("open_chain", "ring"):
            raise ConfigError("the mps method requires a 1D chain with --spin 2")
    if method in ("mitigated_islands", "mitigated_retry"):
        lattice.sublattice()  # raises NotBipartiteError on odd cycles
    if method == "lcu" and twice_s not in (2, 3):
        raise UnsupportedError("lcu simulation supports 2S in {2, 3}")


def _run_method(method: str, lattice: Lattice, s: SpinValue, seed: int):
    if method == "probabilistic":
        return run_probabilistic(lattice, s)
    if method == "mitigated_islands":
        return run_mitigated_islands(lattice, s)
    if method == "mitigated_retry":
        return run_mitigated_retry(lattice, s, seed)
    if method == "lcu":
        return run_lcu(lattice, s, "sparse")
    if method == "mps":
        return run_mps(lattice, s)
    raise ConfigError(f"unknown method {method!r}")


def _analytic_norm(lattice: Lattice, twice_s: int) -> float | None:
    if twice_s == 2 and lattice.boundary in ("open_chain", "ring"):
        boundary = "ring" if lattice.boundary == "ring" else "open"
        return analysis.vbs_norm(2, lattice.n_sites, boundary, lattice.boundary_spins or ("up", "up"))
    return None


def cmd_prepare(args) -> int:
    lattice = parse_lattice(args.lattice)
    validate_config(lattice, args.spin, args.method)
    s = SpinValue(args.spin)
    result = _run_method(args.method, lattice, s, args.seed)
    oracle, oracle_norm = oracle_vbs_state(lattice, s)

    report = analysis.Report(
        method=args.method,
        lattice=lattice.to_json_dict(),
        config={"spin": args.spin, "seed": args.seed, "shots": args.shots, "coupling": args.coupling},
    )
    fid = result["state"].fidelity(oracle)
    report.simulated["fidelity_vs_oracle"] = fid
    report.simulated["success_probability"] = result["success_probability"]
    report.analytic["oracle_norm_sq"] = oracle_norm
    closed = _analytic_norm(lattice, args.spin)
    if closed is not None:
        report.analytic["norm_closed_form"] = closed
        report.add_check("norm_vs_closed_form", closed, oracle_norm, 1e-12)
    report.add_check("fidelity_vs_oracle", 1.0, fid, 1e-10)
    if args.method == "probabilistic":
        report.add_check("success_prob_equals_norm", oracle_norm, result["success_probability"], 1e-10)
        if args.shots:
            circ = result["circuit"]
            rate, z = analysis.monte_carlo_success(circ, oracle_norm, args.shots, args.seed)
            report.simulated["mc_rate"] = rate
            report.simulated["mc_z"] = z
            report.add_check("mc_within_3_sigma", 0.0, z, 3.0)
    if args.method == "mps" and lattice.boundary == "ring":
        report.add_check("mps_ancilla_probability", 0.5, result["success_probability"], 1e-10)
    if args.coupling != "all_to_all":
        _routed_checks(args, lattice, s, oracle, report)
    return _finish(report, args)


def _routed_checks(args, lattice, s, oracle, report):
    """Route the circuit onto the requested coupling and re-verify it."""
    from .ir import post_select, simulate_circuit
    from .lattice import linear_coupling
    from .methods import data_state
    from .routing import heavy_hex_pair_mitigated, heavy_hex_pair_probabilistic, route

    if args.coupling == "linear":
        if args.method != "probabilistic":
            raise UnsupportedError("linear routing is wired up for the probabilistic method")
        encoding = assign_qubits(lattice, "hadamard_all")
        circ = probabilistic_method_circuit(lattice, encoding, s)
        routed = route(circ, linear_coupling(encoding.total_qubits))
    else:  # heavy_hex
        if lattice.name != "three-link-pair":
            raise UnsupportedError("heavy-hex placement is declared for the three-link pair")
        if args.method == "probabilistic":
            routed, _, encoding = heavy_hex_pair_probabilistic()
        elif args.method == "mitigated_islands":
            routed, _, encoding = heavy_hex_pair_mitigated()
        else:
            raise UnsupportedError("heavy-hex placement covers probabilistic and mitigated_islands")
    state, markers = simulate_circuit(routed.circuit)
    _, state = post_select(state, markers)
    routed_fid = data_state(routed.undo_permutation(state), encoding).fidelity(oracle)
    report.simulated["routed_fidelity_vs_oracle"] = routed_fid
    report.add_check("routed_fidelity_vs_oracle", 1.0, routed_fid, 1e-10)
    report.resources["routed_cnot_depth"] = cnot_depth(routed.circuit, args.coupling)


def cmd_verify(args) -> int:
    lattice = parse_lattice(args.lattice)
    validate_config(lattice, args.spin, args.method)
    s = SpinValue(args.spin)
    state, norm_sq = oracle_vbs_state(lattice, s)
    result = _run_method(args.method, lattice, s, args.seed)

    report = analysis.Report(
        method=args.method,
        lattice=lattice.to_json_dict(),
        config={"spin": args.spin, "seed": args.seed, "shots": args.shots, "coupling": args.coupling},
    )
    report.add_check("route_fidelity", 1.0, result["state"].fidelity(state), 1e-10)
    closed = _analytic_norm(lattice, args.spin)
    if closed is not None:
        report.analytic["norm_closed_form"] = closed
        report.add_check("norm_vs_closed_form", closed, norm_sq, 1e-12)

    encoding = assign_qubits(lattice, "hadamard_all")
    proj = aklt_two_site_projector(s)
    worst = 0.0
    for a, b in set(lattice.links):
        qs = encoding.site_qubits[a] + encoding.site_qubits[b]
        work = state.copy()
        work.apply_unitary(proj.matrix, qs, allow_nonunitary=True)
        worst = max(worst, float(np.linalg.norm(work.amps)))
    report.simulated["max_projector_residual"] = worst
    report.add_check("projector_annihilation", 0.0, worst, 1e-10)

    if s.twice_s == 2 and lattice.boundary == "open_chain":
        energy = 0.0
        from .spinops import blbq_hamiltonian_term

        term = blbq_hamiltonian_term(1.0 / 3.0)
        for a, b in lattice.links:
            qs = encoding.site_qubits[a] + encoding.site_qubits[b]
            energy += state.expectation(term.matrix, qs)
        expected = -2.0 * (lattice.n_sites - 1) / 3.0
        report.simulated["aklt_energy"] = energy
        report.add_check("open_chain_energy", expected, energy, 1e-10)
    report.analytic["norm_sq"] = norm_sq
    return _finish(report, args)


def cmd_resources(args) -> int:
    report = analysis.Report(
        method="resource_grid",
        lattice={"name": "declared"},
        config={"spin": args.spin, "coupling": args.coupling},
    )
    grid = analysis.table_i_grid()
    report.resources["depth_grid"] = grid
    for row in grid:
        report.add_check(
            f"depth_{row['twice_s']}_{row['method']}_{row['coupling']}",
            row["table_value"],
            row["cnot_depth"],
            0.0,
        )
    report.resources["lcu_spin2"] = analysis.resource_summary(4, "lcu", "all_to_all")
    reps = analysis.repetitions_table(2) + analysis.repetitions_table(3)
    report.resources["repetitions"] = reps
    for row in reps:
        report.add_check(
            f"repetitions_2s{row['twice_s']}_N{row['n_sites']}_{'mit' if row['mitigated'] else 'raw'}",
            1.0,
            1.0 if row["match"] else 0.0,
            0.0,
        )
    return _finish(report, args)


def cmd_emit_qasm(args) -> int:
    lattice = parse_lattice(args.lattice)
    validate_config(lattice, args.spin, "probabilistic")
    s = SpinValue(args.spin)
    encoding = assign_qubits(lattice, "hadamard_all")
    circ = probabilistic_method_circuit(lattice, encoding, s)
    text = emit_qasm(circ, args.qasm_mode)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _finish(report: analysis.Report, args) -> int:
    text = report.to_json()
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    for c in report.checks:
        status = "pass" if c["pass"] else "FAIL"
        print(f"[{status}] {c['name']}: expected={c['expected']:.12g} actual={c['actual']:.12g}", file=sys.stderr)
    return EXIT_OK if report.all_passed() else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vbsprep", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spin", type=int, default=2, help="2S of every lattice site")
    common.add_argument("--lattice", default="chain:3:open:aligned")
    common.add_argument("--method", default="probabilistic", choices=METHODS)
    common.add_argument("--coupling", default="all_to_all", choices=COUPLINGS)
    common.add_argument("--shots", type=int, default=0)
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--out", default=None)
    common.add_argument("--qasm-mode", default="structural", choices=("structural", "basis"))
    sub.add_parser("prepare", parents=[common]).set_defaults(func=cmd_prepare)
    sub.add_parser("verify", parents=[common]).set_defaults(func=cmd_verify)
    sub.add_parser("resources", parents=[common]).set_defaults(func=cmd_resources)
    sub.add_parser("emit-qasm", parents=[common]).set_defaults(func=cmd_emit_qasm)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MissingCostError, UnsupportedError) as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ConfigError, NotBipartiteError, CapExceededError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VbsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
