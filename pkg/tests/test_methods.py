"""Cross-route equivalence: every preparation route hits the oracle state."""
import numpy as np
import pytest

from vbsprep.lattice import build_chain, build_honeycomb_patch, build_three_link_pair
from vbsprep.methods import (
    oracle_vbs_state,
    run_lcu,
    run_mitigated_islands,
    run_mitigated_retry,
    run_mps,
    run_probabilistic,
    run_probabilistic_sequential,
)
from vbsprep.spinops import SpinValue

S1, S32 = SpinValue(2), SpinValue(3)


def spin1_routes(lattice, seed=13):
    routes = {
        "probabilistic": run_probabilistic(lattice, S1),
        "sequential": run_probabilistic_sequential(lattice, S1),
        "lcu_sparse": run_lcu(lattice, S1, "sparse"),
        "lcu_dense": run_lcu(lattice, S1, "dense"),
    }
    try:
        lattice.sublattice()
        routes["islands"] = run_mitigated_islands(lattice, S1)
        routes["retry"] = run_mitigated_retry(lattice, S1, seed)
    except Exception:
        pass
    if lattice.boundary in ("open_chain", "ring") and (
        lattice.boundary == "open_chain" or lattice.n_sites >= 3
    ):
        routes["mps"] = run_mps(lattice, S1)
    return routes


@pytest.mark.parametrize(
    "lattice",
    [
        build_chain(2, "open", ("up", "up")),
        build_chain(3, "open", ("up", "down")),
        build_chain(4, "open", ("up", "up")),
        build_chain(3, "ring"),
        build_chain(4, "ring"),
    ],
    ids=["open2", "open3anti", "open4", "ring3", "ring4"],
)
def test_spin1_routes_pairwise_equivalent(lattice):
    oracle, _ = oracle_vbs_state(lattice, S1)
    routes = spin1_routes(lattice)
    states = {name: r["state"] for name, r in routes.items()}
    for name, st in states.items():
        assert abs(st.fidelity(oracle) - 1.0) < 1e-10, name
    names = sorted(states)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            assert states[a].fidelity(states[b]) >= 1 - 1e-10, (a, b)


def test_spin32_multigraph_ring_retry_route():
    from vbsprep.lattice import build_three_link_ring

    lat = build_three_link_ring(4)
    oracle, _ = oracle_vbs_state(lat, S32)
    r = run_mitigated_retry(lat, S32, seed=29)
    assert abs(r["state"].fidelity(oracle) - 1.0) < 1e-10
    assert set(r["rounds_used"]) == {0, 2}  # one retried island per A site


def test_spin32_pair_routes():
    pair = build_three_link_pair()
    oracle, _ = oracle_vbs_state(pair, S32)
    results = {
        "probabilistic": run_probabilistic(pair, S32),
        "sequential": run_probabilistic_sequential(pair, S32),
        "lcu_sparse": run_lcu(pair, S32, "sparse"),
        "islands": run_mitigated_islands(pair, S32),
        "retry": run_mitigated_retry(pair, S32, 21),
    }
    for name, r in results.items():
        assert abs(r["state"].fidelity(oracle) - 1.0) < 1e-10, name


def test_hexagon_ring_probabilistic():
    hexagon = build_honeycomb_patch(1, 1)
    oracle, norm = oracle_vbs_state(hexagon, S1)
    r = run_probabilistic_sequential(hexagon, S1)
    assert abs(r["state"].fidelity(oracle) - 1.0) < 1e-10
    assert abs(r["success_probability"] - norm) < 1e-12
    # six-site ring: same closed form as the chain ring
    assert abs(norm - (0.75**6 + 3 * 0.25**6)) < 1e-12


def test_probability_equals_squared_norm_not_its_square():
    lat = build_chain(3, "ring")
    _, norm = oracle_vbs_state(lat, S1)
    r = run_probabilistic(lat, S1)
    assert abs(r["success_probability"] - norm) < 1e-12
    assert abs(r["success_probability"] - norm**2) > 0.1


def test_retry_round_counts_follow_geometric_law():
    lat = build_chain(4, "ring")
    rounds = []
    for seed in range(60):
        r = run_mitigated_retry(lat, S1, seed)
        rounds.extend(r["rounds_used"].values())
    mean = np.mean(rounds)
    # island success probability is p = 3/4, so rounds are geometric(3/4)
    sigma = np.sqrt((1 - 0.75) / 0.75**2 / len(rounds))
    assert abs(mean - 1.0 / 0.75) < 4 * sigma + 0.05


def test_mitigated_probability_is_square_root_scale():
    # post-selection is only over half the sites
    lat = build_chain(4, "ring")
    full = run_probabilistic(lat, S1)["success_probability"]
    half = run_mitigated_islands(lat, S1)["success_probability"]
    assert half > full
    assert abs(half * (9.0 / 16.0) - full) < 1e-10  # A-sites cost (3/4)^2


def test_sequential_uses_fewer_qubits():
    lat = build_chain(5, "ring")
    r = run_probabilistic_sequential(lat, S1)
    assert r["state"].n_qubits == 10  # data only; peak was 11


def test_sequential_scales_to_eight_sites():
    lat = build_chain(8, "ring")
    r = run_probabilistic_sequential(lat, S1)
    from vbsprep.analysis import vbs_norm

    assert abs(r["success_probability"] - vbs_norm(2, 8, "ring")) < 1e-10


def test_overlap_of_normalized_state_with_bond_product():
    # <vbs~|pre-vbs> equals the square root of the squared norm
    from vbsprep.builders import pre_vbs_data_state
    from vbsprep.lattice import assign_qubits

    lat = build_chain(3, "ring")
    enc = assign_qubits(lat, "hadamard_all")
    pre = pre_vbs_data_state(enc)
    state, norm = oracle_vbs_state(lat, S1)
    overlap = state.overlap(pre)
    assert abs(abs(overlap) - np.sqrt(3.0 / 8.0)) < 1e-12
    assert abs(norm - 3.0 / 8.0) < 1e-12


def test_mixed_spin_patch_interior_link_annihilation():
    # boundary sites of an open patch carry the smaller spin set by their
    # coordination; the interior spin-3/2 link is still annihilated
    from vbsprep.lattice import assign_qubits
    from vbsprep.spinops import aklt_two_site_projector

    lat = build_honeycomb_patch(1, 2)
    spins = {lat.site_twice_spin(s) for s in range(lat.n_sites)}
    assert spins == {2, 3}
    enc = assign_qubits(lat, "hadamard_all")
    state, norm = oracle_vbs_state(lat, S32)
    assert 0 < norm < 1
    proj = aklt_two_site_projector(S32)
    interior = [
        (a, b) for a, b in lat.links if lat.coordination(a) == 3 and lat.coordination(b) == 3
    ]
    assert interior
    for a, b in interior:
        qs = enc.site_qubits[a] + enc.site_qubits[b]
        work = state.copy()
        work.apply_unitary(proj.matrix, qs, allow_nonunitary=True)
        assert np.linalg.norm(work.amps) < 1e-10


def test_retry_circuit_carries_reset_markers():
    from vbsprep.builders import mitigated_retry_circuit
    from vbsprep.ir import Measure
    from vbsprep.lattice import assign_qubits

    lat = build_chain(4, "ring")
    enc = assign_qubits(lat, "islands_plus_sublattice")
    circ = mitigated_retry_circuit(lat, enc, S1)
    retry_markers = [g for g in circ.gates if isinstance(g, Measure) and g.retry_reset]
    assert len(retry_markers) == 2  # one per retried island
    for m in retry_markers:
        assert len(m.retry_reset) == 4  # the 4S-qubit island
