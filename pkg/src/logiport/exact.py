"""Exact noisy expectation values without sampling.

Every headline quantity is a finite sum of Pauli-string expectations on the
ideal states.  A single-qubit Pauli channel maps a Pauli observable P to
lambda * P in the Heisenberg picture, with lambda = 1 - 2 (sum of the error
probabilities that anticommute with P's letter on that qubit); the logical
channel contributes an analogous factor from commutation with X_L, Y_L, Z_L.
Noisy expectations therefore factorize into precomputed ideal term values
times per-term attenuation products.  This is the exact forward model used by
the calibration fit; the density-operator oracle validates it independently.

Term tables are indexed by (physical-qubit letter A, coset family F), where F
ranges over the stabilizer group itself and its X_L / Y_L / Z_L cosets, in
expanded (256-term) and single-representative (bare) form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoiseSpec
from .pauli import PauliString
from .protocol import (
    NUM_RESOURCE_QUBITS,
    PHYSICAL_QUBIT,
    bloch_vector,
    prepare_resource_circuit,
)
from .shor import ShorCode
from .sim import StateVector

FAMILIES = "IXYZ"  # I = stabilizer group, X/Y/Z = logical cosets
PHYS_LETTERS = "IXYZ"

# Bell projector weights 4 * <bell| A (x) A |bell> for A = I, X, Y, Z.
BELL_WEIGHTS = {
    "phi_plus": (1.0, 1.0, -1.0, 1.0),
    "phi_minus": (1.0, -1.0, 1.0, 1.0),
    "psi_plus": (1.0, 1.0, 1.0, -1.0),
    "psi_minus": (1.0, -1.0, -1.0, -1.0),
}

# Conjugating the target by a feedforward correction flips these Bloch axes.
_CORRECTION_FLIPS = {
    "phi_plus": (1.0, 1.0, 1.0),
    "phi_minus": (-1.0, -1.0, 1.0),  # Z_L
    "psi_plus": (1.0, -1.0, -1.0),  # X_L
    "psi_minus": (-1.0, 1.0, -1.0),  # X_L Z_L
}


def channel_attenuations(probs: tuple[float, float, float]) -> np.ndarray:
    """lambda factors for observable letters (I, X, Y, Z) under one channel."""
    px, py, pz = probs
    return np.array([1.0, 1.0 - 2 * (py + pz), 1.0 - 2 * (px + pz), 1.0 - 2 * (px + py)])


@dataclass
class _TermTable:
    """One (A, F) block: per-term code-letter counts, logical signs, ideal values."""

    counts: np.ndarray  # (T, 3) X/Y/Z letter counts over the code qubits
    logical_signs: np.ndarray  # (T, 3) commutation signs vs X_L, Y_L, Z_L
    ideal: np.ndarray  # (T,) coefficient * ideal expectation
    phys_letter: int  # 0..3

    def value(self, lam_phys: np.ndarray, lam_code: np.ndarray, q_logical: float) -> float:
        factors = (
            lam_code[1] ** self.counts[:, 0]
            * lam_code[2] ** self.counts[:, 1]
            * lam_code[3] ** self.counts[:, 2]
        )
        if q_logical > 0.0:
            sign_sums = self.logical_signs.sum(axis=1)
            factors = factors * ((1.0 - q_logical) + (q_logical / 3.0) * sign_sums)
        return float(np.dot(self.ideal, factors) * lam_phys[self.phys_letter])


class ExactModel:
    """Exact characterization and teleportation quantities for a NoiseSpec."""

    def __init__(self, code: ShorCode | None = None):
        self.code = code or ShorCode()
        self.resource = prepare_resource_circuit(self.code).state
        self._logicals = (self.code.logical_x, self.code.logical_y, self.code.logical_z)
        self._tables: dict[tuple[int, str, bool], _TermTable] = {}
        group = self.code.stabilizer_group()
        reps = {
            "I": PauliString.identity(9),
            "X": self.code.logical_x,
            "Y": self.code.logical_y,
            "Z": self.code.logical_z,
        }
        for family, rep in reps.items():
            coset = [rep * g for g in group]
            for a_idx, a in enumerate(PHYS_LETTERS):
                self._tables[(a_idx, family, True)] = self._make_table(
                    a_idx, coset, 1.0 / len(coset)
                )
                self._tables[(a_idx, family, False)] = self._make_table(a_idx, [rep], 1.0)

    def _make_table(self, phys_letter: int, ops: list[PauliString], coeff: float) -> _TermTable:
        amps = self.resource.amplitudes
        counts = np.zeros((len(ops), 3), dtype=np.int64)
        signs = np.zeros((len(ops), 3), dtype=np.int64)
        ideal = np.zeros(len(ops))
        for t, op in enumerate(ops):
            for letter_idx, letter in enumerate("XYZ"):
                counts[t, letter_idx] = op.letters.count(letter)
                signs[t, letter_idx] = 1 if op.commutes_with(self._logicals[letter_idx]) else -1
            joint = op.embed(NUM_RESOURCE_QUBITS)
            if phys_letter:
                joint = joint * PauliString.single(
                    NUM_RESOURCE_QUBITS, PHYSICAL_QUBIT, PHYS_LETTERS[phys_letter]
                )
            value = joint.expectation_on(amps)
            if abs(value.imag) > 1e-10:
                raise AssertionError("non-real ideal expectation in term table")
            ideal[t] = coeff * value.real
        return _TermTable(counts, signs, ideal, phys_letter)

    # -- building blocks -------------------------------------------------
    def block(self, spec: NoiseSpec, phys_letter: int, family: str, sandwiched: bool) -> float:
        """Noisy <A (x) F Pi> (sandwiched) or <A (x) F> (bare) on the resource."""
        lam_code = channel_attenuations(spec.p_phys)
        lam_phys = lam_code  # same channel on every resource qubit
        table = self._tables[(phys_letter, family, sandwiched)]
        return table.value(lam_phys, lam_code, spec.q_logical)

    def _axis_block(
        self, spec: NoiseSpec, bloch: tuple[float, float, float], family: str, sandwiched: bool
    ) -> float:
        """<B (x) ...> for a physical-qubit observable B = bloch . (X, Y, Z)."""
        total = 0.0
        for comp, letter_idx in zip(bloch, (1, 2, 3)):
            if comp != 0.0:
                total += comp * self.block(spec, letter_idx, family, sandwiched)
        return total

    # -- resource characterization ----------------------------------------
    def resource_correlators(self, spec: NoiseSpec) -> dict[str, float]:
        """All raw and code-space-sandwiched correlators of the noisy resource."""
        out = {
            "p_cs": self.block(spec, 0, "I", True),
            "xx": self.block(spec, 1, "X", False),
            "yy": self.block(spec, 2, "Y", False),
            "zz": self.block(spec, 3, "Z", False),
            "zx": self.block(spec, 3, "X", False),
            "xz": self.block(spec, 1, "Z", False),
            "xx_cs": self.block(spec, 1, "X", True),
            "yy_cs": self.block(spec, 2, "Y", True),
            "zz_cs": self.block(spec, 3, "Z", True),
            "zx_cs": self.block(spec, 3, "X", True),
            "xz_cs": self.block(spec, 1, "Z", True),
        }
        return out

    def setting_probabilities(
        self, spec: NoiseSpec, bloch: tuple[float, float, float], logical_family: str
    ) -> np.ndarray:
        """Joint outcome probabilities for one characterization setting.

        Categories ordered (physical a, syndrome pass/fail, logical b):
        (+,pass,+), (+,pass,-), (+,fail,+), (+,fail,-), then a = -.
        """
        pi = self.block(spec, 0, "I", True)
        b_pi = self._axis_block(spec, bloch, "I", True)
        l_pi = self.block(spec, 0, logical_family, True)
        bl_pi = self._axis_block(spec, bloch, logical_family, True)
        b_bare = self._axis_block(spec, bloch, "I", False)
        l_bare = self.block(spec, 0, logical_family, False)
        bl_bare = self._axis_block(spec, bloch, logical_family, False)

        probs = []
        for a in (1, -1):
            for b in (1, -1):
                inside = 0.25 * (pi + a * b_pi + b * l_pi + a * b * bl_pi)
                total = 0.25 * (1.0 + a * b_bare + b * l_bare + a * b * bl_bare)
                probs.append((inside, total - inside))
        # reorder to (a, pass/fail, b)
        arr = np.array(
            [
                probs[0][0], probs[1][0], probs[0][1], probs[1][1],
                probs[2][0], probs[3][0], probs[2][1], probs[3][1],
            ]
        )
        arr = np.clip(arr, 0.0, None)
        return arr / arr.sum()

    # -- teleportation ------------------------------------------------------
    def _teleport_branch(
        self,
        spec: NoiseSpec,
        input_bloch: tuple[float, float, float],
        label: str,
    ) -> dict[str, float]:
        """Unnormalized branch quantities for one Bell outcome."""
        lam_in = channel_attenuations(spec.p_input)
        a_in = np.array(
            [1.0] + [input_bloch[i] * lam_in[i + 1] for i in range(3)]
        )
        weights = BELL_WEIGHTS[label]
        flips = _CORRECTION_FLIPS[label]
        target_bloch = tuple(f * c for f, c in zip(flips, input_bloch))

        den = 0.0
        pcs_num = 0.0
        fid_num = 0.0
        logical_bare = 0.0
        logical_cs = 0.0
        for a_idx in range(4):
            w = 0.25 * weights[a_idx] * a_in[a_idx]
            if w == 0.0:
                continue
            den += w * self.block(spec, a_idx, "I", False)
            pi_val = self.block(spec, a_idx, "I", True)
            pcs_num += w * pi_val
            m_cs = sum(
                target_bloch[k] * self.block(spec, a_idx, FAMILIES[k + 1], True)
                for k in range(3)
            )
            m_bare = sum(
                target_bloch[k] * self.block(spec, a_idx, FAMILIES[k + 1], False)
                for k in range(3)
            )
            fid_num += w * 0.5 * (pi_val + m_cs)
            logical_cs += w * m_cs
            logical_bare += w * m_bare
        return {
            "den": den,
            "pcs_num": pcs_num,
            "fid_num": fid_num,
            "logical_bare": logical_bare,
            "logical_cs": logical_cs,
        }

    def teleport_quantities(
        self,
        spec: NoiseSpec,
        input_sv: StateVector,
        mode: str = "postselect_phi_plus",
    ) -> dict[str, float]:
        """Exact raw/corrected teleportation fidelity and projection probability."""
        bloch = bloch_vector(input_sv)
        if mode == "postselect_phi_plus":
            branches = [self._teleport_branch(spec, bloch, "phi_plus")]
        elif mode == "feedforward":
            branches = [self._teleport_branch(spec, bloch, label) for label in BELL_WEIGHTS]
        else:
            raise ValueError(f"unknown teleport mode {mode!r}")
        den = sum(b["den"] for b in branches)
        pcs_num = sum(b["pcs_num"] for b in branches)
        fid_num = sum(b["fid_num"] for b in branches)
        logical_bare = sum(b["logical_bare"] for b in branches)
        logical_cs = sum(b["logical_cs"] for b in branches)
        return {
            "f_raw": fid_num / den,
            "f_cs": fid_num / pcs_num,
            "p_cs": pcs_num / den,
            "bsm_prob": den,
            "logical_bare": logical_bare / den,
            "logical_cs": logical_cs / den,
        }

    def teleport_setting_probabilities(
        self, spec: NoiseSpec, input_sv: StateVector, mode: str = "postselect_phi_plus"
    ) -> np.ndarray:
        """Outcome probabilities (pass+, pass-, fail+, fail-) for one teleport input."""
        q = self.teleport_quantities(spec, input_sv, mode)
        p_cs, m_cs, m_bare = q["p_cs"], q["logical_cs"], q["logical_bare"]
        inside_plus = 0.5 * (p_cs + m_cs)
        inside_minus = 0.5 * (p_cs - m_cs)
        out_plus = 0.5 * ((1 - p_cs) + (m_bare - m_cs))
        out_minus = 0.5 * ((1 - p_cs) - (m_bare - m_cs))
        arr = np.clip(np.array([inside_plus, inside_minus, out_plus, out_minus]), 0.0, None)
        return arr / arr.sum()
