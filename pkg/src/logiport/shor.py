"""The (9,1,3) Shor code: code words, stabilizers, syndromes, decoding.

Code words are three-fold repetitions of three-qubit GHZ blocks.  The default
block map assigns qubits (0,1,2), (3,4,5), (6,7,8) to the three blocks; photon
b+1 carries block b with qubit order (polarization, path, OAM) inside a block.

Canonical logical representatives: logical X = Z on the first qubit of each
block, logical Z = X on every qubit of block 0, logical Y = i * X_L * Z_L.
One Z in a block flips that block's GHZ sign; one block's X^3 reads the sign.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import sqrt

import numpy as np

from .pauli import PauliString, PauliSum
from .sim import (
    PROB_FLOOR,
    OrthogonalSubspaceError,
    StateVector,
    expectation,
    measure,
)

Blocks = tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]
DEFAULT_BLOCKS: Blocks = ((0, 1, 2), (3, 4, 5), (6, 7, 8))

NUM_CODE_QUBITS = 9
NUM_GENERATORS = 8


@dataclass(frozen=True)
class Syndrome:
    """Outcomes (+1/-1) of the eight stabilizer generators, in generator order."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) != NUM_GENERATORS or any(b not in (1, -1) for b in self.bits):
            raise ValueError("syndrome must be eight values in {+1, -1}")

    @property
    def is_trivial(self) -> bool:
        return all(b == 1 for b in self.bits)

    def key(self) -> int:
        return sum((1 << i) for i, b in enumerate(self.bits) if b == -1)

    @staticmethod
    def from_key(key: int) -> "Syndrome":
        return Syndrome(tuple(-1 if (key >> i) & 1 else 1 for i in range(NUM_GENERATORS)))


@dataclass(frozen=True)
class Correction:
    """Recovery operator for a syndrome; ``confident`` iff from the weight-<=1 table."""

    pauli: PauliString
    weight: int
    confident: bool


class ShorCode:
    """Stabilizer data and decoding tables for one nine-qubit code block."""

    def __init__(self, blocks: Blocks = DEFAULT_BLOCKS):
        flat = [q for block in blocks for q in block]
        if sorted(flat) != list(range(NUM_CODE_QUBITS)):
            raise ValueError("blocks must partition qubits 0..8")
        self.blocks = blocks
        n = NUM_CODE_QUBITS

        gens: list[PauliString] = []
        for block in blocks:
            gens.append(PauliString.from_map(n, {block[0]: "Z", block[1]: "Z"}))
            gens.append(PauliString.from_map(n, {block[1]: "Z", block[2]: "Z"}))
        gens.append(PauliString.from_map(n, {q: "X" for q in blocks[0] + blocks[1]}))
        gens.append(PauliString.from_map(n, {q: "X" for q in blocks[1] + blocks[2]}))
        self.stabilizer_generators: tuple[PauliString, ...] = tuple(gens)

        self.logical_x = PauliString.from_map(n, {block[0]: "Z" for block in blocks})
        self.logical_z = PauliString.from_map(n, {q: "X" for q in blocks[0]})
        y = self.logical_x * self.logical_z
        self.logical_y = PauliString(y.letters, 1j * y.phase)
        if not self.logical_y.is_hermitian:
            raise AssertionError("logical Y construction lost hermiticity")

        self._group: tuple[PauliString, ...] | None = None
        self._decode_table: dict[int, Correction] | None = None

    # -- code words ----------------------------------------------------
    def logical_basis(self, bit: int) -> StateVector:
        """|0_L> or |1_L>: (|000> +/- |111>)^(x3) / (2 sqrt 2)."""
        if bit not in (0, 1):
            raise ValueError("logical basis bit must be 0 or 1")
        sign = -1.0 if bit else 1.0
        amps = np.zeros(2 ** NUM_CODE_QUBITS, dtype=complex)
        scale = 1.0 / (2.0 * sqrt(2.0))
        for pattern in range(8):
            index = 0
            weight = 0
            for b, block in enumerate(self.blocks):
                if (pattern >> b) & 1:
                    weight += 1
                    for q in block:
                        index |= 1 << q
            amps[index] = scale * (sign ** weight)
        return StateVector(NUM_CODE_QUBITS, amps)

    def encode_logical(self, alpha: complex, beta: complex) -> StateVector:
        if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
            raise ValueError("encode_logical requires |alpha|^2 + |beta|^2 = 1")
        amps = alpha * self.logical_basis(0).amplitudes + beta * self.logical_basis(1).amplitudes
        return StateVector(NUM_CODE_QUBITS, amps)

    # -- stabilizer group and projector ---------------------------------
    def stabilizer_group(self) -> tuple[PauliString, ...]:
        """All 256 products of generator subsets, phases included."""
        if self._group is None:
            elements = [PauliString.identity(NUM_CODE_QUBITS)]
            for gen in self.stabilizer_generators:
                elements += [e * gen for e in elements]
            self._group = tuple(elements)
        return self._group

    def code_space_projector(self) -> PauliSum:
        """Expanded form: (1/256) * sum over the stabilizer group."""
        coeff = 1.0 / len(self.stabilizer_group())
        return PauliSum.from_terms((coeff, g) for g in self.stabilizer_group())

    def project_code_space(self, state: StateVector, offset: int = 0) -> tuple[float, StateVector]:
        """Operational form: eight sequential (I + g)/2 projections.

        Returns the total success probability and the renormalized state.
        """
        amps = state.amplitudes.copy()
        prob = 1.0
        for gen in self.stabilizer_generators:
            embedded = gen.embed(state.num_qubits, offset)
            amps = 0.5 * (amps + embedded.apply_to(amps))
            branch = float(np.linalg.norm(amps) ** 2)
            if branch < PROB_FLOOR:
                raise OrthogonalSubspaceError("state has no code-space component")
            prob *= branch
            amps = amps / sqrt(branch)
        return prob, StateVector(state.num_qubits, amps)

    # -- syndromes -------------------------------------------------------
    def extract_syndrome(
        self, state: StateVector, rng: np.random.Generator, offset: int = 0
    ) -> tuple[Syndrome, StateVector]:
        """Measure the eight generators in order; returns outcomes and the collapsed state."""
        bits = []
        current = state
        for gen in self.stabilizer_generators:
            outcome, current, _ = measure(current, gen.embed(state.num_qubits, offset), rng)
            bits.append(outcome)
        return Syndrome(tuple(bits)), current

    def syndrome_of_pauli(self, error: PauliString) -> Syndrome:
        """Deterministic syndrome a Pauli error produces on any code word."""
        bits = tuple(
            1 if error.commutes_with(gen) else -1 for gen in self.stabilizer_generators
        )
        return Syndrome(bits)

    # -- decoding ---------------------------------------------------------
    def _build_decode_table(self) -> dict[int, Correction]:
        # Minimum-weight assignment, lowest weight first; within a weight the
        # enumeration over (qubit tuple, letter tuple) is lexicographic, which
        # fixes the deterministic tie-break (smallest qubit indices win).
        n = NUM_CODE_QUBITS
        table: dict[int, Correction] = {0: Correction(PauliString.identity(n), 0, True)}
        for weight in range(1, n + 1):
            if len(table) == 2 ** NUM_GENERATORS:
                break
            for qubits in combinations(range(n), weight):
                for pattern in range(3 ** weight):
                    letters, rem = {}, pattern
                    for q in qubits:
                        letters[q] = "XYZ"[rem % 3]
                        rem //= 3
                    err = PauliString.from_map(n, letters)
                    key = self.syndrome_of_pauli(err).key()
                    if key not in table:
                        table[key] = Correction(err, weight, weight <= 1)
        if len(table) != 2 ** NUM_GENERATORS:
            raise AssertionError("decode table construction did not converge")
        return table

    def decode_correction(self, syndrome: Syndrome) -> Correction:
        """Minimum-weight recovery; identity for the trivial syndrome.

        Syndromes beyond the weight-1 lookup get a best-effort minimum-weight
        recovery with ``confident=False``.
        """
        if self._decode_table is None:
            self._decode_table = self._build_decode_table()
        return self._decode_table[syndrome.key()]

    # -- logical readout ---------------------------------------------------
    def logical_operator(self, which: str) -> PauliString:
        try:
            return {"X": self.logical_x, "Y": self.logical_y, "Z": self.logical_z}[which]
        except KeyError:
            raise ValueError(f"logical operator must be X, Y or Z, got {which!r}") from None

    def logical_expectation(
        self,
        state: StateVector,
        which: str,
        code_space_restricted: bool = False,
        offset: int = 0,
    ) -> float:
        """Bare <P_L>, or the unnormalized sandwich <Pi P_L Pi> when restricted."""
        op = self.logical_operator(which).embed(state.num_qubits, offset)
        if not code_space_restricted:
            return expectation(state, op)
        amps = state.amplitudes.copy()
        for gen in self.stabilizer_generators:
            embedded = gen.embed(state.num_qubits, offset)
            amps = 0.5 * (amps + embedded.apply_to(amps))
        return float(np.real(np.vdot(amps, op.apply_to(amps))))
