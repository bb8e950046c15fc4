"""Dense pure-state and density-operator simulation kernel.

Conventions fixed project-wide:

* Qubit 0 is the least significant bit of the basis-state index.
* States are immutable after construction; every operation returns a new
  state.  Random sources are explicit ``numpy.random.Generator`` arguments.

All tolerance constants live here.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .pauli import PauliString, PauliSum

NORM_ATOL = 1e-10
UNITARY_ATOL = 1e-12
HERMITIAN_ATOL = 1e-10
PROB_FLOOR = 1e-12
MAX_STATE_QUBITS = 20
MAX_DENSITY_QUBITS = 10

_SQRT2_INV = 1 / sqrt(2)


class OrthogonalSubspaceError(ValueError):
    """Raised when a projection (or forced measurement) has vanishing probability."""


class DegenerateProjectionError(ValueError):
    """Raised when a code-space renormalization would divide by ~zero."""


@dataclass(frozen=True)
class StateVector:
    """Pure state of ``num_qubits`` qubits as 2^n complex amplitudes."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.num_qubits <= MAX_STATE_QUBITS:
            raise ValueError(f"num_qubits must be in 1..{MAX_STATE_QUBITS}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** self.num_qubits,):
            raise ValueError("amplitude array has wrong shape")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity_with(self, other: "StateVector") -> float:
        return float(abs(self.inner(other)) ** 2)


def new_basis_state(num_qubits: int, basis_index: int) -> StateVector:
    """Computational basis ket |basis_index>."""
    dim = 2 ** num_qubits
    if not 0 <= basis_index < dim:
        raise ValueError(f"basis_index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(dim, dtype=complex)
    amps[basis_index] = 1.0
    return StateVector(num_qubits, amps)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product; b's qubits occupy the higher indices."""
    n = a.num_qubits + b.num_qubits
    if n > MAX_STATE_QUBITS:
        raise ValueError(f"combined qubit count {n} exceeds {MAX_STATE_QUBITS}")
    return StateVector(n, np.kron(b.amplitudes, a.amplitudes))


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
_X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)
_Y_MATRIX = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=complex)
_S_MATRIX = np.array([[1, 0], [0, 1j]], dtype=complex)
_T_MATRIX = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """Named unitary on one or two target qubits."""

    name: str
    targets: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("duplicate gate targets")
        mat = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** len(self.targets)
        if mat.shape != (dim, dim):
            raise ValueError("gate matrix shape does not match target count")
        if not np.allclose(mat.conj().T @ mat, np.eye(dim), atol=UNITARY_ATOL):
            raise ValueError(f"gate {self.name} is not unitary")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "targets", tuple(self.targets))

    @classmethod
    def h(cls, q: int) -> "Gate":
        return cls("H", (q,), _H_MATRIX)

    @classmethod
    def x(cls, q: int) -> "Gate":
        return cls("X", (q,), _X_MATRIX)

    @classmethod
    def y(cls, q: int) -> "Gate":
        return cls("Y", (q,), _Y_MATRIX)

    @classmethod
    def z(cls, q: int) -> "Gate":
        return cls("Z", (q,), _Z_MATRIX)

    @classmethod
    def s(cls, q: int) -> "Gate":
        return cls("S", (q,), _S_MATRIX)

    @classmethod
    def t(cls, q: int) -> "Gate":
        return cls("T", (q,), _T_MATRIX)

    @classmethod
    def rz(cls, q: int, phi: float) -> "Gate":
        mat = np.array([[np.exp(-0.5j * phi), 0], [0, np.exp(0.5j * phi)]], dtype=complex)
        return cls("Rz", (q,), mat)

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        # Basis order |control, target> with control as the first target slot.
        mat = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        return cls("CNOT", (control, target), mat)


def _apply_1q_matrix(amps: np.ndarray, n: int, q: int, mat: np.ndarray) -> np.ndarray:
    # Axis n-1-q of the [2]*n tensor corresponds to qubit q (LSB-first indices).
    t = amps.reshape([2] * n)
    axis = n - 1 - q
    t = np.moveaxis(t, axis, -1)
    t = t @ mat.T
    return np.moveaxis(t, -1, axis).reshape(-1)


def _apply_cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    t = amps.reshape([2] * n).copy()
    axc, axt = n - 1 - control, n - 1 - target
    sel = [slice(None)] * n
    sel[axc] = 1
    sub_axt = axt - 1 if axt > axc else axt
    t[tuple(sel)] = np.flip(t[tuple(sel)], axis=sub_axt)
    return t.reshape(-1)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply the gate unitary on its target qubits."""
    n = state.num_qubits
    for q in gate.targets:
        if not 0 <= q < n:
            raise ValueError(f"gate target {q} out of range")
    if gate.name == "CNOT":
        amps = _apply_cnot(state.amplitudes, n, *gate.targets)
    elif len(gate.targets) == 1:
        amps = _apply_1q_matrix(state.amplitudes, n, gate.targets[0], gate.matrix)
    else:
        raise ValueError(f"unsupported multi-qubit gate {gate.name}")
    return StateVector(n, amps)


def apply_pauli(state: StateVector, pauli: PauliString) -> StateVector:
    if pauli.num_qubits != state.num_qubits:
        raise ValueError("Pauli length does not match state")
    return StateVector(state.num_qubits, pauli.apply_to(state.amplitudes))


# ---------------------------------------------------------------------------
# Expectation, measurement, projection
# ---------------------------------------------------------------------------

def expectation(state: StateVector, observable: PauliString) -> float:
    """<psi|P|psi> for a Hermitian Pauli string."""
    if observable.num_qubits != state.num_qubits:
        raise ValueError("observable length does not match state")
    if not observable.is_hermitian:
        raise ValueError("observable with imaginary phase is not Hermitian")
    value = observable.expectation_on(state.amplitudes)
    return float(value.real)


def measure(
    state: StateVector, observable: PauliString, rng: np.random.Generator
) -> tuple[int, StateVector, float]:
    """Projective measurement of a Hermitian Pauli; returns (outcome, state, prob)."""
    exp = expectation(state, observable)
    p_plus = min(max((1.0 + exp) / 2.0, 0.0), 1.0)
    outcome = 1 if rng.random() < p_plus else -1
    prob = p_plus if outcome == 1 else 1.0 - p_plus
    projected = 0.5 * (state.amplitudes + outcome * observable.apply_to(state.amplitudes))
    norm = np.linalg.norm(projected)
    post = StateVector(state.num_qubits, projected / norm)
    return outcome, post, float(prob)


def project(state: StateVector, projector: PauliSum) -> tuple[float, StateVector]:
    """Project onto a (presumed idempotent Hermitian) Pauli-sum projector."""
    if projector.num_qubits != state.num_qubits:
        raise ValueError("projector length does not match state")
    value = projector.expectation_on(state.amplitudes)
    if abs(value.imag) > 1e-9:
        raise ValueError("projector expectation is not real; sum is not Hermitian")
    prob = float(value.real)
    if prob < PROB_FLOOR:
        raise OrthogonalSubspaceError("state is orthogonal to the projector's subspace")
    post = projector.apply_to(state.amplitudes)
    post = post / np.linalg.norm(post)
    return prob, StateVector(state.num_qubits, post)


# ---------------------------------------------------------------------------
# Density operators (exact mixed-state oracle)
# ---------------------------------------------------------------------------

def _pauli_dm_vectors(pauli: PauliString, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and per-row factors for conjugating a density matrix."""
    x_mask, z_mask, scalar = pauli._masks
    idx = np.arange(dim)
    from .pauli import _parity

    vals = scalar * (1.0 - 2.0 * _parity(idx & z_mask))
    perm = idx ^ x_mask
    return perm, vals


def _pauli_conjugate_dm(mat: np.ndarray, pauli: PauliString) -> np.ndarray:
    """P rho P^dagger via row/column permutation and signs (no dense matmul)."""
    perm, vals = _pauli_dm_vectors(pauli, mat.shape[0])
    w = vals[perm]
    return (w[:, None] * w.conj()[None, :]) * mat[np.ix_(perm, perm)]


def _pauli_trace_product(mat: np.ndarray, pauli: PauliString) -> complex:
    """tr(P rho) without building the dense Pauli matrix."""
    perm, vals = _pauli_dm_vectors(pauli, mat.shape[0])
    return complex(np.sum(vals[perm] * mat[perm, np.arange(mat.shape[0])]))


def _gate_conjugate_dm(mat: np.ndarray, n: int, gate: Gate) -> np.ndarray:
    def left(m: np.ndarray) -> np.ndarray:
        cols = m.shape[1]
        if gate.name == "CNOT":
            t = m.reshape([2] * n + [cols]).copy()
            axc = n - 1 - gate.targets[0]
            axt = n - 1 - gate.targets[1]
            sel = [slice(None)] * (n + 1)
            sel[axc] = 1
            sub_axt = axt - 1 if axt > axc else axt
            t[tuple(sel)] = np.flip(t[tuple(sel)], axis=sub_axt)
            return t.reshape(m.shape)
        q = gate.targets[0]
        t = m.reshape([2] * n + [cols])
        axis = n - 1 - q
        t = np.moveaxis(t, axis, -2)
        t = np.einsum("ij,...jc->...ic", gate.matrix, t)
        return np.moveaxis(t, -2, axis).reshape(m.shape)

    a = left(mat)
    return left(a.conj().T).conj().T


@dataclass
class DensityOperator:
    """Exact mixed-state representation; used as a brute-force oracle only."""

    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.num_qubits <= MAX_DENSITY_QUBITS:
            raise ValueError(f"num_qubits must be in 1..{MAX_DENSITY_QUBITS}")
        mat = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** self.num_qubits
        if mat.shape != (dim, dim):
            raise ValueError("density matrix has wrong shape")
        if abs(np.trace(mat).real - 1.0) > 1e-8 or abs(np.trace(mat).imag) > 1e-10:
            raise ValueError("density matrix trace is not 1")
        if not np.allclose(mat, mat.conj().T, atol=HERMITIAN_ATOL):
            raise ValueError("density matrix is not Hermitian")
        self.matrix = mat

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityOperator":
        amps = state.amplitudes
        return cls(state.num_qubits, np.outer(amps, amps.conj()))

    def validate_positive(self, atol: float = 1e-9) -> None:
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs.min() < -atol:
            raise ValueError(f"density matrix has negative eigenvalue {eigs.min():.3e}")

    def expectation(self, observable: PauliString | PauliSum) -> float:
        if isinstance(observable, PauliString):
            value = _pauli_trace_product(self.matrix, observable)
        else:
            value = sum(
                coeff * _pauli_trace_product(self.matrix, p) for coeff, p in observable.terms
            )
        return float(np.real(value))

    def fidelity_with(self, state: StateVector) -> float:
        amps = state.amplitudes
        return float(np.real(amps.conj() @ self.matrix @ amps))


def dm_evolve(
    rho: DensityOperator, channel: list[tuple[float, PauliString | Gate]]
) -> DensityOperator:
    """Mixed-unitary channel rho <- sum_i p_i K_i rho K_i^dagger."""
    if not channel:
        raise ValueError("empty channel")
    probs = np.array([p for p, _ in channel], dtype=float)
    if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("channel probabilities must be nonnegative and sum to 1")
    out = np.zeros_like(rho.matrix)
    for prob, op in channel:
        if prob == 0.0:
            continue
        if isinstance(op, PauliString):
            if op.num_qubits != rho.num_qubits:
                raise ValueError("Kraus Pauli length mismatch")
            out += prob * _pauli_conjugate_dm(rho.matrix, op)
        elif isinstance(op, Gate):
            out += prob * _gate_conjugate_dm(rho.matrix, rho.num_qubits, op)
        else:
            raise ValueError(f"unsupported Kraus operator {op!r}")
    return DensityOperator(rho.num_qubits, out)
