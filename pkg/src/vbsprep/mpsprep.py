"""Matrix-product-state route: the bond-dimension-2 tensor form of the 1D
spin-1 state, left-canonicalization, unitary disentanglers, and the
sequential preparation circuit for open and periodic chains.

Sites are numbered 1..N with qubits (L_i, R_i) = (2i-2, 2i-1).  A tensor is
stored with axes (left_bond, sigma_L, sigma_R, right_bond).  In the
preparation direction, the gate built from site i's enlarged tensor emits
the bond toward site i-1 on its first qubit and consumes the incoming bond
on its last qubit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnsupportedError
from .ir import Circuit, simulate_circuit
from .schmidt import schmidt_prepare
from .statesim import Statevector

CANONICAL_TOL = 1e-12


@dataclass(frozen=True)
class MpsTensor:
    array: np.ndarray  # (left, 2, 2, right)
    left_canonical: bool = False

    @property
    def left_dim(self) -> int:
        return self.array.shape[0]

    @property
    def right_dim(self) -> int:
        return self.array.shape[3]

    def left_normalization_defect(self) -> float:
        a = self.array.reshape(-1, self.array.shape[3])
        gram = a.conj().T @ a
        return float(np.max(np.abs(gram - np.eye(self.array.shape[3]))))


def local_vbs_tensor() -> np.ndarray:
    """Translation-invariant two-qubit-per-site tensor of the spin-1 chain."""
    a = np.zeros((2, 2, 2, 2))
    r23, r6 = math.sqrt(2.0 / 3.0), 1.0 / math.sqrt(6.0)
    a[0, 0, 0, 1] = r23       # both up
    a[0, 0, 1, 0] = -r6       # up/down
    a[1, 0, 1, 1] = r6
    a[0, 1, 0, 0] = -r6       # down/up
    a[1, 1, 0, 1] = r6
    a[1, 1, 1, 0] = -r23      # both down
    return a


def _slice_index(spin: str, side: str) -> int:
    if side == "left":
        return 0 if spin == "up" else 1
    return 1 if spin == "up" else 0


def vbs_mps(n_sites: int, boundary: str, boundary_spins=("up", "up")) -> list[MpsTensor]:
    """MPS tensors of the spin-1 chain state; open chains come left-canonical."""
    if n_sites < 2:
        raise ConfigError("need at least 2 sites")
    a = local_vbs_tensor()
    if boundary in ("ring", "periodic"):
        return [MpsTensor(a, left_canonical=True) for _ in range(n_sites)]
    if boundary not in ("open", "open_chain"):
        raise ConfigError(f"unknown boundary {boundary!r}")
    xl = _slice_index(boundary_spins[0], "left")
    xr = _slice_index(boundary_spins[1], "right")
    tensors = [a.copy() for _ in range(n_sites)]
    tensors[0] = tensors[0][xl : xl + 1]
    tensors[-1] = tensors[-1][:, :, :, xr : xr + 1]
    return left_canonicalize(tensors)


def left_canonicalize(arrays: list[np.ndarray]) -> list[MpsTensor]:
    """One left-to-right SVD sweep; drops the final scalar norm."""
    out: list[MpsTensor] = []
    carry = np.eye(arrays[0].shape[0])
    for i, arr in enumerate(arrays):
        t = np.tensordot(carry, arr, axes=(1, 0))
        l, _, _, r = t.shape
        mat = t.reshape(l * 4, r)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        keep = max(1, int(np.sum(s > CANONICAL_TOL)))
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        out.append(MpsTensor(u.reshape(l, 2, 2, keep), left_canonical=True))
        carry = s[:, None] * vh
    # carry is now 1x1: the overall norm (and sign), dropped to normalize.
    if carry.shape != (1, 1):
        raise RuntimeError("canonical sweep did not terminate on a scalar")
    return out


def contract_mps(tensors: list[MpsTensor], boundary: str) -> Statevector:
    """Exact 2N-qubit statevector of the MPS (normalized)."""
    arrs = [t.array for t in tensors]
    running = arrs[0]
    l0 = running.shape[0]
    running = running.reshape(l0, 4, -1)
    for arr in arrs[1:]:
        nxt = arr.reshape(arr.shape[0], 4, arr.shape[3])
        running = np.tensordot(running, nxt, axes=(2, 0))
        running = running.reshape(l0, -1, arr.shape[3])
    if boundary in ("ring", "periodic"):
        amps = np.trace(running, axis1=0, axis2=2)
    else:
        amps = running.reshape(-1)
    amps = amps / np.linalg.norm(amps)
    return Statevector.from_amplitudes(amps)


# ---------------------------------------------------------------------------
# disentanglers
# ---------------------------------------------------------------------------

ROLE_FIRST_OPEN = "first_open"
ROLE_BULK = "bulk"
ROLE_LAST_OPEN = "last_open"
ROLE_FIRST_PERIODIC = "first_periodic_embedded"
ROLE_LAST_PERIODIC = "last_periodic_state"


@dataclass(frozen=True)
class Disentangler:
    matrix: np.ndarray
    role: str


def complete_to_unitary(cols: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full unitary.

    Orthogonalizes the canonical basis vectors against the given columns in
    index order, keeping those with non-negligible remainder; any valid
    completion is equivalent for the preparation (dummy inputs select only
    the given columns).
    """
    d, k = cols.shape
    basis = [cols[:, i].astype(complex) for i in range(k)]
    for j in range(d):
        v = np.zeros(d, dtype=complex)
        v[j] = 1.0
        for b in basis:
            v = v - b * np.vdot(b, v)
        for b in basis:  # second pass for numerical orthogonality
            v = v - b * np.vdot(b, v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            basis.append(v / nrm)
        if len(basis) == d:
            break
    if len(basis) != d:
        raise RuntimeError("completion failed: rank deficiency in input columns")
    out = np.column_stack(basis)
    if np.max(np.abs(out.conj().T @ out - np.eye(d))) > CANONICAL_TOL:
        raise RuntimeError("completion is not unitary")
    return out


def build_disentangler(tensor: MpsTensor, role: str) -> Disentangler:
    """Unitary whose constrained input columns reproduce the enlarged tensor."""
    if role not in (ROLE_FIRST_OPEN, ROLE_BULK, ROLE_LAST_OPEN):
        raise ConfigError(f"build_disentangler does not handle role {role!r}")
    if not tensor.left_canonical or tensor.left_normalization_defect() > 1e-10:
        raise ConfigError("disentangler construction needs a left-canonical tensor")
    arr = tensor.array
    if role == ROLE_FIRST_OPEN:
        cols = arr.reshape(4, arr.shape[3])
    elif role == ROLE_BULK:
        cols = np.transpose(arr, (0, 1, 2, 3)).reshape(arr.shape[0] * 4, arr.shape[3])
    else:  # last site: single column
        cols = arr.reshape(arr.shape[0] * 4, 1)
        cols = cols / np.linalg.norm(cols)
    return Disentangler(complete_to_unitary(cols), role)


def fuse_boundary_tensor(arr: np.ndarray) -> np.ndarray:
    """4x4 matrix with rows (sigma_L, sigma_R) and columns (right, left)."""
    return np.transpose(arr, (1, 2, 3, 0)).reshape(4, 4)


def embed_nonunitary_periodic(a_tilde: np.ndarray, n_scale: float) -> np.ndarray:
    """Embed a 4x4 non-unitary block into an 8x8 unitary.

    The top-left quadrant of the result is n_scale * a_tilde; post-selecting
    the extra (most significant) qubit in |0> applies the block.
    """
    u, s, vh = np.linalg.svd(a_tilde)
    smax = float(np.max(s))
    if not 0 < n_scale < 1.0 / smax:
        raise ConfigError(f"embedding scale {n_scale} outside (0, {1.0 / smax:.6f})")
    c = u @ np.diag(np.sqrt(1.0 - (n_scale * s) ** 2)) @ vh
    top = np.vstack([n_scale * a_tilde, c])
    return complete_to_unitary(top)


def admissible_scale_bound(a_tilde: np.ndarray) -> float:
    return float(1.0 / np.max(np.linalg.svd(a_tilde, compute_uv=False)))


# ---------------------------------------------------------------------------
# preparation
# ---------------------------------------------------------------------------

def prepare_via_mps(
    n_sites: int,
    boundary: str,
    boundary_spins=("up", "up"),
    embed_scale: float | None = None,
) -> tuple[Statevector, float]:
    """Sequential disentangler-inverse preparation.

    Returns the prepared 2N-qubit state and the ancilla success probability
    (1.0 for open chains).  For rings, `embed_scale` overrides the default
    scale of the non-unitary final block; the default is chosen so the
    ancilla reads |0> with probability exactly 1/2.
    """
    if not 2 <= n_sites <= 6:
        raise UnsupportedError("prepare_via_mps supports 2..6 sites")
    periodic = boundary in ("ring", "periodic")
    if periodic and n_sites < 3:
        raise UnsupportedError("periodic preparation needs at least 3 sites")
    tensors = vbs_mps(n_sites, "ring" if periodic else "open", boundary_spins)

    if not periodic:
        state = Statevector.zero(2 * n_sites)
        last = build_disentangler(tensors[-1], ROLE_LAST_OPEN)
        state.apply_unitary(last.matrix, (2 * n_sites - 3, 2 * n_sites - 2, 2 * n_sites - 1))
        for i in range(n_sites - 1, 1, -1):
            gate = build_disentangler(tensors[i - 1], ROLE_BULK)
            state.apply_unitary(gate.matrix, (2 * i - 3, 2 * i - 2, 2 * i - 1))
        first = build_disentangler(tensors[0], ROLE_FIRST_OPEN)
        state.apply_unitary(first.matrix, (0, 1))
        return state, 1.0

    n_q = 2 * n_sites + 1  # one post-selected ancilla
    anc = 2 * n_sites
    state = Statevector.zero(n_q)

    # First operation: initialize the fused last-site tensor as a 4-qubit
    # state on (R_{N-1}, L_N, R_N, R_1) via its Schmidt decomposition.
    vec = tensors[-1].array.reshape(16)
    vec = vec / np.linalg.norm(vec)
    init_qubits = (2 * n_sites - 3, 2 * n_sites - 2, 2 * n_sites - 1, 1)
    sub = schmidt_prepare(vec, qubits=init_qubits, label="mps_init")
    sub_full = Circuit(n_q, gates=sub.gates)
    state, _ = simulate_circuit(sub_full, initial=state)

    for i in range(n_sites - 1, 2, -1):
        gate = build_disentangler(tensors[i - 1], ROLE_BULK)
        state.apply_unitary(gate.matrix, (2 * i - 3, 2 * i - 2, 2 * i - 1))
    if n_sites >= 3:
        gate = build_disentangler(tensors[1], ROLE_BULK)
        state.apply_unitary(gate.matrix, (0, 2, 3))

    a_tilde = fuse_boundary_tensor(tensors[0].array)
    if embed_scale is None:
        weight = state.expectation(a_tilde.conj().T @ a_tilde, (0, 1))
        embed_scale = math.sqrt(0.5 / weight)
    gate = embed_nonunitary_periodic(a_tilde, embed_scale)
    state.apply_unitary(gate, (anc, 0, 1))
    prob = state.project_qubit(anc, 0)

    # Drop the spent ancilla (now |0>) to return a 2N-qubit state.
    amps = _drop_msb_zero_qubit(state, anc)
    return Statevector.from_amplitudes(amps), prob


def _drop_msb_zero_qubit(state: Statevector, qubit: int) -> np.ndarray:
    t = state.amps.reshape([2] * state.n_qubits)
    sl = [slice(None)] * state.n_qubits
    sl[qubit] = 0
    return t[tuple(sl)].reshape(-1)
