"""Coupling-map routing: generic SWAP insertion plus the fixed heavy-hex
layout and displacement stage used by the coordination-3 preparation.

The generic router walks the gate list, moving logical qubits along
shortest paths (each inserted SWAP is expanded to 3 CNOTs) until every
CNOT acts on a coupled pair and every opaque block sits on a connected
subgraph.  It returns the final logical-to-physical placement so callers
can undo the permutation when comparing states.

The heavy-hex pipeline is a declared layout: per six-qubit set the three
valence bonds start on coupled pairs, and a fixed displacement of three
SWAPs (9 CNOTs, counted as a depth-9 stage) regroups the qubits so one
site lands on an in-line four-qubit box and the other on a T-shaped box.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .builders import valence_bond_subcircuit
from .errors import ConfigError
from .ir import CNot, Circuit, Measure, Opaque, U1Q
from .lattice import (
    CouplingMap,
    Lattice,
    SiteEncoding,
    assign_qubits,
    build_three_link_pair,
    heavy_hex_patch,
)
from .schmidt import ISLAND_BLOCK_COSTS, schmidt_prepare
from .spinops import SpinValue
from .statesim import Statevector

# Stage depths declared for the heavy-hex compositions.
DISPLACEMENT_COSTS = {"heavy_hex": (9, 9)}
ISLAND_STAGE_HEAVY_HEX_DEPTH = 57


@dataclass
class RoutedCircuit:
    circuit: Circuit
    placement: list[int]  # logical -> physical at the end of the circuit

    def undo_permutation(self, state: Statevector) -> Statevector:
        """Reorder a simulated state so qubit q holds logical qubit q.

        Physical qubits never assigned a logical index are appended as
        trailing virtual qubits, in physical order.
        """
        n = state.n_qubits
        t = state.amps.reshape([2] * n)
        p2l = [None] * n
        for logical, phys in enumerate(self.placement):
            p2l[phys] = logical
        next_virtual = len(self.placement)
        for p in range(n):
            if p2l[p] is None:
                p2l[p] = next_virtual
                next_virtual += 1
        order = [p2l.index(l) for l in range(n)]
        out = np.transpose(t, order).reshape(-1)
        return Statevector(n, out.copy(), state.tracked_norm_sq)


def _swap_cnots(a: int, b: int) -> list[CNot]:
    return [CNot(a, b), CNot(b, a), CNot(a, b)]


def route(circuit: Circuit, coupling: CouplingMap, initial_placement: list[int] | None = None) -> RoutedCircuit:
    """Rewrite a circuit so all multi-qubit gates respect the coupling map."""
    if circuit.n_qubits > coupling.n_qubits:
        raise ConfigError("circuit does not fit on the coupling map")
    if initial_placement is None:
        placement = list(range(circuit.n_qubits))
    else:
        placement = list(initial_placement)
    if len(set(placement)) != len(placement):
        raise ConfigError("initial placement must be injective")

    out = Circuit(coupling.n_qubits, metadata=dict(circuit.metadata))
    if coupling.name == "all_to_all" and initial_placement is None:
        out.gates = list(circuit.gates)
        out.metadata["routed"] = "all_to_all"
        return RoutedCircuit(out, placement)

    occupied = {p: l for l, p in enumerate(placement)}

    def do_swap(pa: int, pb: int):
        out.extend(_swap_cnots(pa, pb))
        la, lb = occupied.get(pa), occupied.get(pb)
        if la is not None:
            placement[la] = pb
        if lb is not None:
            placement[lb] = pa
        occupied[pa], occupied[pb] = lb, la

    def bring_adjacent(la: int, lb: int):
        while not coupling.are_coupled(placement[la], placement[lb]):
            path = coupling.shortest_path(placement[la], placement[lb])
            do_swap(path[0], path[1])

    def gather(logicals: tuple[int, ...]):
        while not coupling.connected_subset([placement[l] for l in logicals]):
            phys = [placement[l] for l in logicals]
            # component containing the first qubit
            comp = {phys[0]}
            grown = True
            while grown:
                grown = False
                for p in phys:
                    if p not in comp and any(coupling.are_coupled(p, c) for c in comp):
                        comp.add(p)
                        grown = True
            outside = [p for p in phys if p not in comp]
            best = min(
                ((p, c) for p in outside for c in comp),
                key=lambda pc: (len(coupling.shortest_path(pc[0], pc[1])), pc),
            )
            path = coupling.shortest_path(best[0], best[1])
            do_swap(path[0], path[1])

    deferred_measures: list[tuple[int, int]] = []  # (gate index, logical qubit)
    for g in circuit.gates:
        if isinstance(g, U1Q):
            out.add(U1Q(g.theta, g.phi, g.lam, placement[g.qubit], g.label))
        elif isinstance(g, Measure):
            deferred_measures.append((len(out.gates), g.qubit))
            out.add(Measure(placement[g.qubit], g.expect, g.creg,
                            tuple(placement[q] for q in g.retry_reset)))
        elif isinstance(g, CNot):
            bring_adjacent(g.control, g.target)
            out.add(CNot(placement[g.control], placement[g.target]))
        elif isinstance(g, Opaque):
            gather(g.qubits)
            out.add(Opaque(g.label, tuple(placement[q] for q in g.qubits), g.matrix, g.cnot_cost, g.cnot_depth))
        else:
            raise TypeError(f"unknown gate {g!r}")
    # Later SWAP insertions may have moved a measured qubit; markers are
    # post-selection events, so point them at the final physical position.
    for idx, logical in deferred_measures:
        m = out.gates[idx]
        out.gates[idx] = Measure(placement[logical], m.expect, m.creg, m.retry_reset)
    out.metadata["routed"] = coupling.name
    return RoutedCircuit(out, placement)


# ---------------------------------------------------------------------------
# heavy-hex layout for the coordination-3 pair
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeavyHexPairLayout:
    """Declared placement of the three-link pair on one heavy-hex set.

    Line positions 0..6 with a bridge qubit 7 hanging off position 5.
    Initially the bonds sit on coupled pairs (1,2), (3,4), (5,6); after the
    three-swap displacement site A occupies the in-line box (1,2,3) with its
    ancilla at 0, and site B the T-shaped box (4,5,6) with its ancilla on
    the bridge.
    """

    coupling: CouplingMap
    initial: dict[str, int]
    displacement: tuple[tuple[int, int], ...]
    final: dict[str, int]


def heavy_hex_pair_layout() -> HeavyHexPairLayout:
    coupling = heavy_hex_patch(1)  # line 0..6 plus bridge qubit 7 at position 5
    initial = {
        "anc_A": 0, "A1": 1, "B1": 2, "A2": 3, "B2": 4, "A3": 5, "B3": 6, "anc_B": 7,
    }
    displacement = ((2, 3), (4, 5), (3, 4))
    final = {
        "anc_A": 0, "A1": 1, "A2": 2, "A3": 3, "B1": 4, "B2": 5, "B3": 6, "anc_B": 7,
    }
    return HeavyHexPairLayout(coupling, initial, displacement, final)


def displacement_block(swaps: tuple[tuple[int, int], ...], label: str = "bond_displacement") -> Opaque:
    """The per-set displacement as one opaque block (count 9, depth 9)."""
    qubits = tuple(sorted({q for pair in swaps for q in pair}))
    local = {q: i for i, q in enumerate(qubits)}
    k = len(qubits)
    mat = np.eye(2**k)
    for a, b in swaps:
        perm = np.eye(2**k)
        la, lb = local[a], local[b]
        for idx in range(2**k):
            ba = (idx >> (k - 1 - la)) & 1
            bb = (idx >> (k - 1 - lb)) & 1
            if ba != bb:
                j = idx ^ ((1 << (k - 1 - la)) | (1 << (k - 1 - lb)))
            else:
                j = idx
            perm[idx, idx] = 0.0
            perm[j, idx] = 1.0
        mat = perm @ mat
    return Opaque(
        label,
        qubits,
        mat,
        cnot_cost={k_: v[0] for k_, v in DISPLACEMENT_COSTS.items()},
        cnot_depth={k_: v[1] for k_, v in DISPLACEMENT_COSTS.items()},
    )


def _pair_site_map(encoding: SiteEncoding) -> dict[str, int]:
    """Logical data/ancilla qubit index for each layout role."""
    roles = {}
    for k in range(3):
        qa, qb = encoding.link_qubits[k]
        roles[f"A{k + 1}"] = qa
        roles[f"B{k + 1}"] = qb
    if encoding.ancilla[0] is not None:
        roles["anc_A"] = encoding.ancilla[0]
    roles["anc_B"] = encoding.site_ancilla(1)
    return roles


def heavy_hex_pair_probabilistic() -> tuple[RoutedCircuit, Lattice, SiteEncoding]:
    """Bare probabilistic preparation of the pair, placed on the heavy-hex set."""
    lattice = build_three_link_pair()
    encoding = assign_qubits(lattice, "hadamard_all")
    layout = heavy_hex_pair_layout()
    roles = _pair_site_map(encoding)
    logical_to_phys = [None] * encoding.total_qubits
    for role, logical in roles.items():
        logical_to_phys[logical] = layout.initial[role]

    circ = Circuit(layout.coupling.n_qubits, metadata={"builder": "probabilistic_heavy_hex"})
    for qa, qb in encoding.link_qubits:
        valence_bond_subcircuit(logical_to_phys[qa], logical_to_phys[qb], circ)
    circ.add(displacement_block(layout.displacement))

    placement = list(logical_to_phys)
    for role, logical in roles.items():
        placement[logical] = layout.final[role]

    s = SpinValue(3)
    for site, box in ((0, "line"), (1, "t")):
        site_phys = tuple(placement[q] for q in encoding.site_qubits[site])
        anc_phys = placement[encoding.site_ancilla(site)]
        _add_test_on_physical(circ, anc_phys, site_phys, s, box)
    return RoutedCircuit(circ, placement), lattice, encoding


def heavy_hex_pair_mitigated() -> tuple[RoutedCircuit, Lattice, SiteEncoding]:
    """Island initialization of site A plus a T-box test on site B, heavy-hex.

    The island stage enters the circuit as a single opaque block carrying
    the declared all-to-all (35 CNOTs, depth 19) and heavy-hex (depth 57)
    numbers of the optimized six-qubit initialization.
    """
    from .builders import island_local_state, island_qubit_groups
    from .ir import circuit_unitary

    lattice = build_three_link_pair()
    encoding = assign_qubits(lattice, "islands_plus_sublattice")
    layout = heavy_hex_pair_layout()
    roles = _pair_site_map(encoding)
    logical_to_phys = [None] * encoding.total_qubits
    for role, logical in roles.items():
        logical_to_phys[logical] = layout.initial[role]

    circ = Circuit(layout.coupling.n_qubits, metadata={"builder": "mitigated_heavy_hex"})
    groups = island_qubit_groups(lattice, encoding)
    ((site_a, group),) = groups.items()
    target = island_local_state(lattice, encoding, site_a, group)
    phys_group = tuple(logical_to_phys[q] for q in group)
    order = list(np.argsort(phys_group))
    target_phys = np.transpose(target.amps.reshape([2] * 6), order).reshape(-1)
    sub = schmidt_prepare(target_phys, label="island_heavy_hex", **ISLAND_BLOCK_COSTS[3])
    circ.add(
        Opaque(
            "island_stage",
            tuple(sorted(phys_group)),
            circuit_unitary(sub),
            cnot_cost={"all_to_all": 35},
            cnot_depth={"all_to_all": 19, "heavy_hex": ISLAND_STAGE_HEAVY_HEX_DEPTH},
        )
    )

    circ.add(displacement_block(layout.displacement))
    placement = list(logical_to_phys)
    for role, logical in roles.items():
        placement[logical] = layout.final[role]

    s = SpinValue(3)
    site_b = 1
    site_phys = tuple(placement[q] for q in encoding.site_qubits[site_b])
    _add_test_on_physical(circ, placement[encoding.site_ancilla(site_b)], site_phys, s, "t")
    return RoutedCircuit(circ, placement), lattice, encoding


def _add_test_on_physical(circ: Circuit, anc: int, site_qubits: tuple[int, ...], s: SpinValue, box: str):
    from .builders import HEAVY_HEX_TEST_COSTS_S32, controlled
    from .ir import u_h
    from .spinops import exp_minus_i_pi_symmetrizer

    costs = {
        "all_to_all": (26, 26),
        "heavy_hex": HEAVY_HEX_TEST_COSTS_S32[box],
    }
    circ.add(u_h(anc))
    circ.add(
        Opaque(
            f"ctrl_exp_sym_3_{box}",
            (anc, *site_qubits),
            controlled(exp_minus_i_pi_symmetrizer(3).matrix),
            cnot_cost={k: v[0] for k, v in costs.items()},
            cnot_depth={k: v[1] for k, v in costs.items()},
        )
    )
    circ.add(u_h(anc))
    circ.add(Measure(anc, expect=1, creg=circ.next_creg()))
