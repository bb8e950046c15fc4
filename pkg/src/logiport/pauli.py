"""Signed Pauli strings and real-coefficient Pauli sums.

``letters[q]`` is the single-qubit Pauli acting on qubit q.  Qubit 0 is the
least significant bit of the basis-state index (project-wide convention,
see :mod:`logiport.sim`).  Phases are exact elements of {+1, -1, +i, -i}.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

VALID_LETTERS = "IXYZ"
VALID_PHASES = (1 + 0j, -1 + 0j, 1j, -1j)

# Single-qubit products a*b -> (phase, letter).
_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def _parity(values: np.ndarray) -> np.ndarray:
    """Bitwise popcount parity (0 or 1) of each entry."""
    v = values.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


@dataclass(frozen=True)
class PauliString:
    """A phase times a tensor product of I/X/Y/Z letters."""

    letters: str
    phase: complex = 1 + 0j

    def __post_init__(self) -> None:
        if not self.letters or any(c not in VALID_LETTERS for c in self.letters):
            raise ValueError(f"invalid Pauli letters: {self.letters!r}")
        phase = complex(self.phase)
        if phase not in VALID_PHASES:
            raise ValueError(f"phase must be one of +1,-1,+i,-i, got {self.phase!r}")
        object.__setattr__(self, "phase", phase)

    # -- constructors -------------------------------------------------
    @staticmethod
    def identity(num_qubits: int) -> "PauliString":
        return PauliString("I" * num_qubits)

    @staticmethod
    def single(num_qubits: int, qubit: int, letter: str) -> "PauliString":
        return PauliString.from_map(num_qubits, {qubit: letter})

    @staticmethod
    def from_map(num_qubits: int, mapping: Mapping[int, str], phase: complex = 1) -> "PauliString":
        chars = ["I"] * num_qubits
        for q, letter in mapping.items():
            if not 0 <= q < num_qubits:
                raise ValueError(f"qubit {q} out of range for {num_qubits} qubits")
            chars[q] = letter
        return PauliString("".join(chars), phase)

    # -- structure ----------------------------------------------------
    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(1 for c in self.letters if c != "I")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.letters) if c != "I")

    @property
    def is_hermitian(self) -> bool:
        return self.phase.imag == 0.0

    def embed(self, num_qubits: int, offset: int = 0) -> "PauliString":
        """Pad with identities so the string acts on qubits offset..offset+n-1."""
        if offset < 0 or offset + self.num_qubits > num_qubits:
            raise ValueError("embedding does not fit")
        pad_left = "I" * offset
        pad_right = "I" * (num_qubits - offset - self.num_qubits)
        return PauliString(pad_left + self.letters + pad_right, self.phase)

    # -- algebra ------------------------------------------------------
    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.num_qubits != other.num_qubits:
            raise ValueError("length mismatch in Pauli product")
        phase = self.phase * other.phase
        chars = []
        for a, b in zip(self.letters, other.letters):
            p, c = _MUL[(a, b)]
            phase *= p
            chars.append(c)
        return PauliString("".join(chars), phase)

    def commutes_with(self, other: "PauliString") -> bool:
        if self.num_qubits != other.num_qubits:
            raise ValueError("length mismatch in commutation check")
        anti = sum(
            1
            for a, b in zip(self.letters, other.letters)
            if a != "I" and b != "I" and a != b
        )
        return anti % 2 == 0

    # -- action on amplitude arrays ------------------------------------
    @cached_property
    def _masks(self) -> tuple[int, int, complex]:
        """(x_mask, z_mask, scalar): P|b> = scalar * (-1)^|b & z_mask| |b ^ x_mask>."""
        x_mask = z_mask = 0
        n_y = 0
        for q, c in enumerate(self.letters):
            if c in ("X", "Y"):
                x_mask |= 1 << q
            if c in ("Z", "Y"):
                z_mask |= 1 << q
            if c == "Y":
                n_y += 1
        return x_mask, z_mask, self.phase * (1j) ** n_y

    def apply_to(self, amplitudes: np.ndarray) -> np.ndarray:
        """Return P @ amplitudes for a dense 2^n amplitude array."""
        x_mask, z_mask, scalar = self._masks
        dim = amplitudes.shape[0]
        out = amplitudes
        if z_mask:
            idx = np.arange(dim)
            signs = 1.0 - 2.0 * _parity(idx & z_mask)
            out = out * signs
        if scalar != 1:
            out = out * scalar
        if x_mask:
            out = out[np.arange(dim) ^ x_mask]
        return out if out is not amplitudes else amplitudes.copy()

    def expectation_on(self, amplitudes: np.ndarray) -> complex:
        return complex(np.vdot(amplitudes, self.apply_to(amplitudes)))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; oracle-sized systems only."""
        if self.num_qubits > 12:
            raise ValueError("dense Pauli matrices capped at 12 qubits")
        singles = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        mat = np.array([[self.phase]], dtype=complex)
        # Qubit 0 is the least significant bit, so it sits rightmost in the kron.
        for c in self.letters:
            mat = np.kron(singles[c], mat)
        return mat

    def __str__(self) -> str:
        sign = {1 + 0j: "+", -1 + 0j: "-", 1j: "+i", -1j: "-i"}[self.phase]
        return sign + self.letters


@dataclass(frozen=True)
class PauliSum:
    """Linear combination of Pauli strings; phases are folded into coefficients."""

    terms: tuple[tuple[complex, PauliString], ...]

    @staticmethod
    def from_terms(terms: Iterable[tuple[complex, PauliString]]) -> "PauliSum":
        normalized = []
        n = None
        for coeff, pauli in terms:
            if n is None:
                n = pauli.num_qubits
            elif pauli.num_qubits != n:
                raise ValueError("mixed qubit counts in PauliSum")
            normalized.append((complex(coeff) * pauli.phase, PauliString(pauli.letters)))
        if not normalized:
            raise ValueError("empty PauliSum")
        return PauliSum(tuple(normalized))

    @property
    def num_qubits(self) -> int:
        return self.terms[0][1].num_qubits

    def coefficients_real(self, atol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= atol for c, _ in self.terms)

    def apply_to(self, amplitudes: np.ndarray) -> np.ndarray:
        out = np.zeros_like(amplitudes)
        for coeff, pauli in self.terms:
            out += coeff * pauli.apply_to(amplitudes)
        return out

    def expectation_on(self, amplitudes: np.ndarray) -> complex:
        return complex(np.vdot(amplitudes, self.apply_to(amplitudes)))

    def scaled(self, factor: complex) -> "PauliSum":
        return PauliSum(tuple((c * factor, p) for c, p in self.terms))

    def simplified(self, atol: float = 1e-14) -> "PauliSum":
        collected: dict[str, complex] = {}
        for coeff, pauli in self.terms:
            collected[pauli.letters] = collected.get(pauli.letters, 0j) + coeff
        kept = [
            (c, PauliString(letters))
            for letters, c in sorted(collected.items())
            if abs(c) > atol
        ]
        if not kept:
            kept = [(0j, PauliString.identity(self.num_qubits))]
        return PauliSum(tuple(kept))

    def compose(self, other: "PauliSum") -> "PauliSum":
        """Operator product self @ other, collected termwise."""
        products = []
        for c1, p1 in self.terms:
            for c2, p2 in other.terms:
                prod = p1 * p2
                products.append((c1 * c2 * prod.phase, PauliString(prod.letters)))
        return PauliSum(tuple(products)).simplified()

    def is_projector(self, atol: float = 1e-10) -> bool:
        square = self.compose(self)
        ref = {p.letters: c for c, p in self.simplified().terms}
        sq = {p.letters: c for c, p in square.terms}
        keys = set(ref) | set(sq)
        return all(abs(ref.get(k, 0j) - sq.get(k, 0j)) <= atol for k in keys)

    def to_matrix(self) -> np.ndarray:
        mat = np.zeros((2 ** self.num_qubits,) * 2, dtype=complex)
        for coeff, pauli in self.terms:
            mat += coeff * pauli.to_matrix()
        return mat
