"""Builders for the preparation circuits: valence bonds, local symmetrization
tests, the full probabilistic circuit, and the island-based variant."""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, UnsupportedError
from .ir import Circuit, CNot, Measure, Opaque, u_h, u_t, u_tdg, u_x, u_z
from .lattice import SPIN_DOWN, Lattice, SiteEncoding
from .schmidt import ISLAND_BLOCK_COSTS, SINGLET, schmidt_prepare
from .spinops import SpinValue, exp_minus_i_pi_symmetrizer, symmetrizer
from .statesim import Statevector

# Declared CNOT (count, depth) of the local test block, per coupling family.
# The heavy-hex entry depends on the shape of the four-qubit box the routed
# test lands on: a T-shaped box is cheaper than an in-line box.
HADAMARD_TEST_COSTS = {
    2: {
        "all_to_all": (7, 7),
        "linear": (9, 9),
        "heavy_hex": (9, 9),
    },
    3: {
        "all_to_all": (26, 26),
        "linear": (39, 39),
    },
}
HEAVY_HEX_TEST_COSTS_S32 = {"t": (39, 39), "line": (41, 41)}


def controlled(mat: np.ndarray) -> np.ndarray:
    """Control on one extra (most significant) qubit."""
    d = mat.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = mat
    return out


def valence_bond_subcircuit(q_top: int, q_bottom: int, circ: Circuit | None = None) -> Circuit:
    """H, X, CNOT, Z sequence preparing (|01> - |10>)/sqrt(2) on (q_top, q_bottom)."""
    if q_top == q_bottom:
        raise ValueError("valence bond needs two distinct qubits")
    if circ is None:
        circ = Circuit(max(q_top, q_bottom) + 1, metadata={"builder": "valence_bond"})
    circ.add(u_h(q_top))
    circ.add(u_x(q_bottom))
    circ.add(CNot(q_top, q_bottom))
    circ.add(u_z(q_top))
    return circ


def pre_vbs_circuit(lattice: Lattice, encoding: SiteEncoding) -> Circuit:
    """One valence-bond fragment per link plus boundary-spin initialization."""
    if encoding.lattice != lattice:
        raise ConfigError("encoding was built for a different lattice")
    circ = Circuit(encoding.total_qubits, metadata={"builder": "pre_vbs", "lattice": lattice.name})
    for qubit, spin in encoding.boundary_qubits:
        if spin == SPIN_DOWN:
            circ.add(u_x(qubit))
    for qa, qb in encoding.link_qubits:
        valence_bond_subcircuit(qa, qb, circ)
    return circ


def _bond_factors(encoding: SiteEncoding, n_qubits: int) -> list:
    factors = []
    for qa, qb in encoding.link_qubits:
        factors.append(((qa, qb), SINGLET))
    for qubit, spin in encoding.boundary_qubits:
        vec = np.array([0, 1], dtype=complex) if spin == SPIN_DOWN else np.array([1, 0], dtype=complex)
        factors.append(((qubit,), vec))
    covered = {q for qs, _ in factors for q in qs}
    for q in range(n_qubits):
        if q not in covered:
            factors.append(((q,), np.array([1, 0], dtype=complex)))
    return factors


def pre_vbs_oracle_state(encoding: SiteEncoding) -> Statevector:
    """Direct tensor-product construction over the full register (ancillas |0>)."""
    return Statevector.product_of_factors(
        encoding.total_qubits, _bond_factors(encoding, encoding.total_qubits)
    )


def pre_vbs_data_state(encoding: SiteEncoding) -> Statevector:
    """Same construction restricted to the data qubits (no ancilla axes)."""
    return Statevector.product_of_factors(
        encoding.n_data_qubits, _bond_factors(encoding, encoding.n_data_qubits)
    )


def hadamard_test_fragment(
    site: int,
    encoding: SiteEncoding,
    s: SpinValue,
    circ: Circuit | None = None,
    heavy_hex_box: str | None = None,
    site_qubits: tuple[int, ...] | None = None,
    drop_phase_gate: bool = False,
) -> Circuit:
    """One-ancilla test whose retained branch symmetrizes the site's qubits.

    The retained ancilla outcome is |1>.  For 2S=2 the controlled block is a
    phased controlled-SWAP; `drop_phase_gate` omits the phase, which flips
    the retained outcome to |0> (flag recorded in the circuit metadata).
    `heavy_hex_box` selects the declared heavy-hex cost variant ("t" or
    "line") for the spin-3/2 block; `site_qubits` overrides the encoding's
    qubit list (used after routing displaces qubits).
    """
    anc = encoding.site_ancilla(site)
    qubits = site_qubits if site_qubits is not None else encoding.site_qubits[site]
    if len(qubits) != s.twice_s:
        raise ConfigError(f"site {site} has {len(qubits)} qubits, expected {s.twice_s}")
    if drop_phase_gate and s.twice_s != 2:
        raise ConfigError("the phase gate can only be dropped for 2S=2")
    if circ is None:
        circ = Circuit(encoding.total_qubits, metadata={"builder": "hadamard_test"})
    costs = dict(HADAMARD_TEST_COSTS.get(s.twice_s, {}))
    if s.twice_s == 3:
        box = heavy_hex_box or "line"
        costs["heavy_hex"] = HEAVY_HEX_TEST_COSTS_S32[box]
    if not costs:
        raise UnsupportedError(f"no declared test costs for 2S={s.twice_s}")
    count = {k: v[0] for k, v in costs.items()}
    depth = {k: v[1] for k, v in costs.items()}
    block = controlled(exp_minus_i_pi_symmetrizer(s.twice_s).matrix)
    expect = 1
    label = f"ctrl_exp_sym_{s.twice_s}"
    if drop_phase_gate:
        block = controlled(-exp_minus_i_pi_symmetrizer(2).matrix)  # plain CSWAP
        expect = 0
        label = "ctrl_swap"
        circ.metadata["phase_gate_dropped"] = True
    circ.add(u_h(anc))
    circ.add(Opaque(label, (anc, *qubits), block, cnot_cost=count, cnot_depth=depth))
    circ.add(u_h(anc))
    circ.add(Measure(anc, expect=expect, creg=circ.next_creg()))
    return circ


def probabilistic_method_circuit(lattice: Lattice, encoding: SiteEncoding, s: SpinValue) -> Circuit:
    """Valence-bond layer followed by one parallel local test per site."""
    if encoding.method != "hadamard_all":
        raise ConfigError("probabilistic method needs the hadamard_all encoding")
    circ = pre_vbs_circuit(lattice, encoding)
    circ.metadata["builder"] = "probabilistic"
    circ.metadata["expected_outcome"] = 1
    for site in range(lattice.n_sites):
        if lattice.site_twice_spin(site) != s.twice_s:
            raise ConfigError(f"site {site} carries 2S={lattice.site_twice_spin(site)}, not {s.twice_s}")
        hadamard_test_fragment(site, encoding, s, circ)
    return circ


# ---------------------------------------------------------------------------
# islands variant
# ---------------------------------------------------------------------------

def island_qubit_groups(lattice: Lattice, encoding: SiteEncoding) -> dict[int, tuple[int, ...]]:
    """For each A-sublattice site, the qubits of its island (site + bond partners)."""
    colors = lattice.sublattice()
    groups: dict[int, tuple[int, ...]] = {}
    for site in range(lattice.n_sites):
        if colors[site] != "A":
            continue
        qs = set(encoding.site_qubits[site])
        for k, (a, b) in enumerate(lattice.links):
            if site == a:
                qs.add(encoding.link_qubits[k][1])
            elif site == b:
                qs.add(encoding.link_qubits[k][0])
        groups[site] = tuple(sorted(qs))
    return groups


def island_bond_state(lattice: Lattice, encoding: SiteEncoding, site: int, group: tuple[int, ...]) -> Statevector:
    """Bond product of one island, in the group's local qubit order."""
    local = {q: i for i, q in enumerate(group)}
    factors = []
    for k, (a, b) in enumerate(lattice.links):
        if site in (a, b):
            qa, qb = encoding.link_qubits[k]
            factors.append(((local[qa], local[qb]), SINGLET))
    for qubit, spin in encoding.boundary_qubits:
        if qubit in local:
            vec = np.array([0, 1], dtype=complex) if spin == SPIN_DOWN else np.array([1, 0], dtype=complex)
            factors.append(((local[qubit],), vec))
    return Statevector.product_of_factors(len(group), factors)


def island_local_state(lattice: Lattice, encoding: SiteEncoding, site: int, group: tuple[int, ...]) -> Statevector:
    """Island state in the group's local qubit order (bonds + symmetrized site)."""
    local = {q: i for i, q in enumerate(group)}
    state = island_bond_state(lattice, encoding, site, group)
    site_local = tuple(local[q] for q in encoding.site_qubits[site])
    state.apply_nonunitary(symmetrizer(len(site_local)), site_local)
    return state


def mitigated_islands_circuit(lattice: Lattice, encoding: SiteEncoding, s: SpinValue) -> Circuit:
    """Deterministic island initialization on sublattice A, tests on sublattice B."""
    if encoding.method != "islands_plus_sublattice":
        raise ConfigError("islands method needs the islands_plus_sublattice encoding")
    colors = lattice.sublattice()
    circ = Circuit(encoding.total_qubits, metadata={"builder": "mitigated_islands", "lattice": lattice.name})
    groups = island_qubit_groups(lattice, encoding)
    covered: set[int] = set()
    for site, group in sorted(groups.items()):
        target = island_local_state(lattice, encoding, site, group)
        costs = ISLAND_BLOCK_COSTS.get(s.twice_s, {}) if len(group) == 2 * s.twice_s else {}
        sub = schmidt_prepare(target.amps, qubits=group, label=f"island_site{site}", **costs)
        circ.extend(sub.gates)
        covered |= set(group)
    for qubit, spin in encoding.boundary_qubits:
        if qubit not in covered and spin == SPIN_DOWN:
            circ.add(u_x(qubit))
    for site in range(lattice.n_sites):
        if colors[site] == "B":
            hadamard_test_fragment(site, encoding, s, circ)
    return circ


def mitigated_retry_circuit(lattice: Lattice, encoding: SiteEncoding, s: SpinValue) -> Circuit:
    """Bond layer plus retry-marked tests on sublattice A, plain tests on B.

    The retry markers carry the island qubits to reset between rounds; the
    simulator realizes the protocol by branch resampling.
    """
    if encoding.method != "islands_plus_sublattice":
        raise ConfigError("retry method needs the islands_plus_sublattice encoding")
    colors = lattice.sublattice()
    circ = pre_vbs_circuit(lattice, encoding)
    circ.metadata["builder"] = "mitigated_retry"
    groups = island_qubit_groups(lattice, encoding)
    anc_bank = [encoding.ancilla[site] for site in range(lattice.n_sites) if colors[site] == "B"]
    for idx, (site, group) in enumerate(sorted(groups.items())):
        anc = anc_bank[idx % len(anc_bank)]
        qubits = encoding.site_qubits[site]
        circ.add(u_h(anc))
        circ.add(
            Opaque(
                f"ctrl_exp_sym_{s.twice_s}",
                (anc, *qubits),
                controlled(exp_minus_i_pi_symmetrizer(s.twice_s).matrix),
                cnot_cost={k: v[0] for k, v in HADAMARD_TEST_COSTS.get(s.twice_s, {}).items()},
            )
        )
        circ.add(u_h(anc))
        circ.add(Measure(anc, expect=1, creg=circ.next_creg(), retry_reset=group))
    for site in range(lattice.n_sites):
        if colors[site] == "B":
            hadamard_test_fragment(site, encoding, s, circ)
    return circ


# ---------------------------------------------------------------------------
# Fredkin in basis gates
# ---------------------------------------------------------------------------

def toffoli_fragment(c1: int, c2: int, t: int, circ: Circuit) -> Circuit:
    """Textbook 6-CNOT Toffoli decomposition."""
    circ.add(u_h(t))
    circ.add(CNot(c2, t))
    circ.add(u_tdg(t))
    circ.add(CNot(c1, t))
    circ.add(u_t(t))
    circ.add(CNot(c2, t))
    circ.add(u_tdg(t))
    circ.add(CNot(c1, t))
    circ.add(u_t(c2))
    circ.add(u_t(t))
    circ.add(u_h(t))
    circ.add(CNot(c1, c2))
    circ.add(u_t(c1))
    circ.add(u_tdg(c2))
    circ.add(CNot(c1, c2))
    return circ


def fredkin_fragment(control: int, a: int, b: int, circ: Circuit | None = None) -> Circuit:
    """Controlled-SWAP as CNOT + textbook Toffoli + CNOT (8 CNOTs total)."""
    if len({control, a, b}) != 3:
        raise ValueError("fredkin needs three distinct qubits")
    if circ is None:
        circ = Circuit(max(control, a, b) + 1, metadata={"builder": "fredkin"})
    circ.add(CNot(b, a))
    toffoli_fragment(control, a, b, circ)
    circ.add(CNot(b, a))
    return circ
