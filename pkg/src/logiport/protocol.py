"""Entangled-resource preparation, Bell-state measurement, and teleportation.

Layout (fixed): qubits 0..8 are the code block, qubit 9 is the physical half
of the resource.  During teleportation the input qubit is appended as qubit
10.  Bell states are written input-first: |Phi+-> = (|00> +- |11>)/sqrt(2),
|Psi+-> = (|01> +- |10>)/sqrt(2) with (input, resource-physical) slots.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin, sqrt

import numpy as np

from .pauli import PauliString
from .shor import ShorCode
from .sim import (
    PROB_FLOOR,
    Gate,
    OrthogonalSubspaceError,
    StateVector,
    apply_gate,
    new_basis_state,
    tensor,
)

NUM_RESOURCE_QUBITS = 10
PHYSICAL_QUBIT = 9
INPUT_QUBIT = 10

_SQRT2_INV = 1 / sqrt(2)

BELL_LABELS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")

# Amplitudes over |input, physical> ordered 00, 01, 10, 11.
_BELL_VECTORS = {
    "phi_plus": np.array([1, 0, 0, 1], dtype=complex) * _SQRT2_INV,
    "phi_minus": np.array([1, 0, 0, -1], dtype=complex) * _SQRT2_INV,
    "psi_plus": np.array([0, 1, 1, 0], dtype=complex) * _SQRT2_INV,
    "psi_minus": np.array([0, 1, -1, 0], dtype=complex) * _SQRT2_INV,
}


@dataclass(frozen=True)
class ResourceState:
    """Ten-qubit resource: maximally entangled physical-logical pair when ideal."""

    state: StateVector

    def __post_init__(self) -> None:
        if self.state.num_qubits != NUM_RESOURCE_QUBITS:
            raise ValueError("resource state must have 10 qubits")


@dataclass(frozen=True)
class BsmOutcome:
    """One of the four Bell outcomes and its logical feedforward correction."""

    label: str
    correction: PauliString

    def __post_init__(self) -> None:
        if self.label not in BELL_LABELS:
            raise ValueError(f"unknown Bell label {self.label!r}")


def bsm_outcomes(code: ShorCode) -> tuple[BsmOutcome, ...]:
    """Outcome -> correction map: I, Z_L, X_L, X_L*Z_L on the code block."""
    identity = PauliString.identity(9)
    xz = code.logical_x * code.logical_z
    return (
        BsmOutcome("phi_plus", identity),
        BsmOutcome("phi_minus", code.logical_z),
        BsmOutcome("psi_plus", code.logical_x),
        BsmOutcome("psi_minus", PauliString(xz.letters, xz.phase)),
    )


def prepare_ghz4() -> StateVector:
    """(|0000> + |1111>)/sqrt(2) built from H and CNOTs."""
    state = new_basis_state(4, 0)
    state = apply_gate(state, Gate.h(0))
    for target in (1, 2, 3):
        state = apply_gate(state, Gate.cnot(0, target))
    return state


def prepare_resource_circuit(code: ShorCode | None = None) -> ResourceState:
    """Build the physical-logical Bell resource along the three-photon circuit.

    A GHZ_4 over the polarization qubits (one per photon plus the physical
    qubit), Hadamards on the three photon polarizations, then CNOTs from each
    polarization onto its path and OAM qubits.  The result equals
    (|0>|0_L> + |1>|1_L>)/sqrt(2).
    """
    code = code or ShorCode()
    state = new_basis_state(NUM_RESOURCE_QUBITS, 0)
    polarizations = [block[0] for block in code.blocks]

    # GHZ_4 over {physical, polarization qubits}.
    state = apply_gate(state, Gate.h(PHYSICAL_QUBIT))
    for q in polarizations:
        state = apply_gate(state, Gate.cnot(PHYSICAL_QUBIT, q))

    # Per photon: H on polarization, then polarization -> (path, OAM) CNOTs.
    for block in code.blocks:
        pol, path, oam = block
        state = apply_gate(state, Gate.h(pol))
        state = apply_gate(state, Gate.cnot(pol, path))
        state = apply_gate(state, Gate.cnot(pol, oam))
    return ResourceState(state)


def prepare_input(theta: float, phi: float) -> StateVector:
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    amps = np.array([cos(theta / 2), np.exp(1j * phi) * sin(theta / 2)], dtype=complex)
    return StateVector(1, amps)


NAMED_INPUTS = {
    "zero": (0.0, 0.0),
    "plus": (pi / 2, 0.0),
    "R": (pi / 2, pi / 2),
    "magic": (pi / 2, pi / 4),
}


def input_state(name: str) -> StateVector:
    """Named input states: |0>, |+>, |R>, and the T-gate magic state."""
    try:
        theta, phi = NAMED_INPUTS[name]
    except KeyError:
        raise ValueError(f"unknown input state {name!r}") from None
    return prepare_input(theta, phi)


def bloch_vector(state: StateVector) -> tuple[float, float, float]:
    """(x, y, z) Bloch components of a single-qubit pure state."""
    if state.num_qubits != 1:
        raise ValueError("bloch_vector expects a single qubit")
    a, b = state.amplitudes
    return (
        float(2 * (np.conj(a) * b).real),
        float(2 * (np.conj(a) * b).imag),
        float(abs(a) ** 2 - abs(b) ** 2),
    )


def _bell_contract(
    amplitudes: np.ndarray,
    num_qubits: int,
    input_qubit: int,
    physical_qubit: int,
    bell: np.ndarray,
) -> np.ndarray:
    """<bell|_{input,physical} |joint>, returning unnormalized remaining amplitudes."""
    t = amplitudes.reshape([2] * num_qubits)
    ax_in = num_qubits - 1 - input_qubit
    ax_ph = num_qubits - 1 - physical_qubit
    t = np.moveaxis(t, (ax_in, ax_ph), (0, 1))
    t = t.reshape(4, -1)
    return bell.conj() @ t


def bsm(
    joint: StateVector,
    input_qubit: int,
    resource_physical_qubit: int,
    rng: np.random.Generator,
    code: ShorCode | None = None,
    forced_outcome: str | None = None,
) -> tuple[BsmOutcome, float, StateVector]:
    """Bell-state measurement of two qubits; returns the collapsed remainder.

    ``forced_outcome`` post-selects one Bell branch (the experiment's
    coincidence-selected symmetric state), raising if its probability
    vanishes.  Otherwise the outcome is Born-sampled.
    """
    if input_qubit == resource_physical_qubit:
        raise ValueError("BSM qubits must be distinct")
    n = joint.num_qubits
    if not (0 <= input_qubit < n and 0 <= resource_physical_qubit < n):
        raise ValueError("BSM qubit index out of range")
    outcomes = bsm_outcomes(code or ShorCode())
    branches = {}
    probs = np.empty(4)
    for i, outcome in enumerate(outcomes):
        residual = _bell_contract(
            joint.amplitudes, n, input_qubit, resource_physical_qubit,
            _BELL_VECTORS[outcome.label],
        )
        branches[outcome.label] = residual
        probs[i] = float(np.linalg.norm(residual) ** 2)

    if forced_outcome is not None:
        chosen = next(o for o in outcomes if o.label == forced_outcome)
    else:
        total = probs.sum()
        chosen = outcomes[int(rng.choice(4, p=probs / total))]
    prob = probs[BELL_LABELS.index(chosen.label)]
    if prob < PROB_FLOOR:
        raise OrthogonalSubspaceError(f"Bell branch {chosen.label} has zero probability")
    residual = branches[chosen.label] / sqrt(prob)
    return chosen, float(prob), StateVector(n - 2, residual)


def teleport(
    input_qubit_state: StateVector,
    resource: ResourceState,
    mode: str,
    rng: np.random.Generator,
    code: ShorCode | None = None,
    max_attempts: int = 10_000,
) -> StateVector:
    """Teleport a single-qubit state into the code block.

    ``postselect_phi_plus`` resamples until the symmetric Bell outcome occurs;
    ``feedforward`` accepts any outcome and applies its logical correction.
    """
    if input_qubit_state.num_qubits != 1:
        raise ValueError("teleport input must be a single qubit")
    code = code or ShorCode()
    joint = tensor(resource.state, input_qubit_state)

    if mode == "postselect_phi_plus":
        for _ in range(max_attempts):
            outcome, _, post = bsm(joint, INPUT_QUBIT, PHYSICAL_QUBIT, rng, code)
            if outcome.label == "phi_plus":
                return post
        raise RuntimeError("post-selection did not hit the symmetric outcome")
    if mode == "feedforward":
        outcome, _, post = bsm(joint, INPUT_QUBIT, PHYSICAL_QUBIT, rng, code)
        return StateVector(9, outcome.correction.apply_to(post.amplitudes))
    raise ValueError(f"unknown teleport mode {mode!r}")
