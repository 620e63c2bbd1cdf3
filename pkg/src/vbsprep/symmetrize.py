"""Uniform one-hot (W) state preparation, qubit-permutation circuits, and the
linear-combination-of-unitaries route to local symmetrization."""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, UnsupportedError
from .ir import Circuit, CNot, Measure, Opaque, u_h, u_ry, u_x
from .spinops import permutation_operator

CSWAP_COSTS = {"all_to_all": (7, 7)}

_CSWAP = None


def _cswap_matrix() -> np.ndarray:
    global _CSWAP
    if _CSWAP is None:
        m = np.eye(8, dtype=complex)
        m[[5, 6]] = m[[6, 5]]
        _CSWAP = m
    return _CSWAP


def block_angle(p: float) -> float:
    """Rotation parameter of the two-qubit amplitude-splitting block."""
    if not 0 < p < 1:
        raise ValueError("p must be in (0, 1)")
    return math.asin(math.cos(math.atan(math.sqrt((1 - p) / p))))


def w_block(p: float, control: int, target: int, circ: Circuit) -> Circuit:
    """Move weight 1-p of a |1> on `control` onto `target` (2 CNOTs)."""
    theta = block_angle(p)
    circ.add(u_ry(theta, target))
    circ.add(CNot(control, target))
    circ.add(u_ry(-theta, target))
    circ.add(CNot(target, control))
    return circ


def w_state_circuit(m: int, qubits: tuple[int, ...] | None = None, circ: Circuit | None = None) -> Circuit:
    """Staircase of blocks B(1/m)...B(1/2) preparing the uniform one-hot state."""
    if m < 2:
        raise ValueError("need at least 2 qubits")
    if qubits is None:
        qubits = tuple(range(m))
    if len(qubits) != m:
        raise ValueError("qubit list length must equal m")
    if circ is None:
        circ = Circuit(max(qubits) + 1, metadata={"builder": "w_state", "m": m})
    circ.add(u_x(qubits[0]))
    for i in range(m - 1):
        w_block(1.0 / (m - i), qubits[i], qubits[i + 1], circ)
    return circ


def w_state_vector(m: int) -> np.ndarray:
    vec = np.zeros(2**m, dtype=complex)
    for i in range(m):
        vec[2**i] = 1 / math.sqrt(m)
    return vec


def inverse_gates(gates) -> list:
    """Inverse of a CNOT/U1Q gate list (sufficient for the prepare oracles)."""
    out = []
    for g in reversed(list(gates)):
        if isinstance(g, CNot):
            out.append(g)
        else:
            theta, phi, lam = -g.theta, -g.lam, -g.phi
            out.append(type(g)(theta, phi, lam, g.qubit, g.label + "_inv"))
    return out


# ---------------------------------------------------------------------------
# permutation circuits
# ---------------------------------------------------------------------------

def permutation_swap_sequences(n_halves: int) -> list[list[tuple[int, int]]]:
    """SWAP sequences realizing all n! qubit permutations.

    Built inductively: every permutation of n-1 qubits extends either
    unchanged or followed by one SWAP of qubit n-1 with an earlier qubit,
    which is the cheapest sequence for each permutation.
    """
    if not 1 <= n_halves <= 4:
        raise ConfigError("permutation circuits capped at 4 qubits")
    seqs: list[list[tuple[int, int]]] = [[]]
    for k in range(2, n_halves + 1):
        new: list[list[tuple[int, int]]] = []
        for base in seqs:
            new.append(list(base))
            for j in range(k - 1):
                new.append(list(base) + [(j, k - 1)])
        seqs = new
    return seqs


def swap_sequence_matrix(seq, n_halves: int) -> np.ndarray:
    mat = np.eye(2**n_halves)
    for i, j in seq:
        perm = list(range(n_halves))
        perm[i], perm[j] = perm[j], perm[i]
        mat = permutation_operator(tuple(perm)) @ mat
    return mat


# ---------------------------------------------------------------------------
# LCU symmetrization
# ---------------------------------------------------------------------------

def lcu_symmetrization_circuit(
    n_halves: int,
    site_qubits: tuple[int, ...],
    ancillas: tuple[int, ...],
    variant: str = "sparse",
) -> Circuit:
    """Prepare / select / unprepare circuit applying the symmetrizer on
    post-selection of every ancilla in |0>.

    sparse: n! ancillas, uniform one-hot prepare oracle, each permutation's
    SWAPs controlled by its own ancilla.  dense: ceil(log2 n!) ancillas;
    implemented for n=2 where the prepare oracle is a single Hadamard.
    """
    if len(site_qubits) != n_halves:
        raise ConfigError("site qubit count must equal n_halves")
    seqs = permutation_swap_sequences(n_halves)
    m = len(seqs)
    n_total = max((*site_qubits, *ancillas)) + 1
    circ = Circuit(n_total, metadata={"builder": f"lcu_{variant}", "n_halves": n_halves})

    if variant == "sparse":
        if len(ancillas) != m:
            raise ConfigError(f"sparse variant needs {m} ancillas, got {len(ancillas)}")
        prep_start = len(circ.gates)
        w_state_circuit(m, ancillas, circ)
        prep_gates = list(circ.gates[prep_start:])
        for anc, seq in zip(ancillas, seqs):
            for i, j in seq:
                circ.add(
                    Opaque(
                        "cswap",
                        (anc, site_qubits[i], site_qubits[j]),
                        _cswap_matrix(),
                        cnot_cost={k: v[0] for k, v in CSWAP_COSTS.items()},
                        cnot_depth={k: v[1] for k, v in CSWAP_COSTS.items()},
                    )
                )
        circ.extend(inverse_gates(prep_gates))
    elif variant == "dense":
        if n_halves != 2:
            raise UnsupportedError("dense prepare oracle implemented for n_halves=2 only")
        if len(ancillas) != 1:
            raise ConfigError("dense variant for n=2 needs exactly 1 ancilla")
        anc = ancillas[0]
        circ.add(u_h(anc))
        circ.add(
            Opaque(
                "cswap",
                (anc, site_qubits[0], site_qubits[1]),
                _cswap_matrix(),
                cnot_cost={k: v[0] for k, v in CSWAP_COSTS.items()},
                cnot_depth={k: v[1] for k, v in CSWAP_COSTS.items()},
            )
        )
        circ.add(u_h(anc))
    else:
        raise ConfigError(f"unknown LCU variant {variant!r}")

    for anc in ancillas:
        circ.add(Measure(anc, expect=0, creg=circ.next_creg()))
    return circ


def lcu_spin2_resources() -> dict:
    """CSWAP and CNOT totals for the 4-qubit symmetrizer via the sparse route."""
    seqs = permutation_swap_sequences(4)
    n_cswaps = sum(len(s) for s in seqs)
    prepare = 2 * (math.factorial(4) - 1)
    select = n_cswaps * CSWAP_COSTS["all_to_all"][0]
    return {
        "cswaps": n_cswaps,
        "prepare_cnots": prepare,
        "select_cnots": select,
        "total_cnots": 2 * prepare + select,
    }
