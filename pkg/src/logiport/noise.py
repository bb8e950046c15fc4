"""Stochastic noise injection and Monte Carlo trajectory estimation.

The noise model mirrors the experiment's imperfection structure: one Pauli
channel per resource qubit applied after ideal state preparation, one Pauli
channel on the teleportation input qubit, and an in-code-space logical Pauli
channel (uniform over X_L, Y_L, Z_L) standing in for multi-pair emission
noise, which detectable-error projection cannot remove.

Trajectories are pure-state quantum jumps.  The batch engine deduplicates
sampled error patterns before evaluating observables; the estimator is
distributionally identical to a per-trajectory loop because a pattern fixes
the trajectory state exactly.  Reproducibility contract: estimates depend
only on the seed, never on scheduling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .pauli import PauliString, _parity
from .protocol import (
    NUM_RESOURCE_QUBITS,
    PHYSICAL_QUBIT,
    ResourceState,
    bsm_outcomes,
    prepare_resource_circuit,
)
from .shor import ShorCode, Syndrome
from .sim import PROB_FLOOR, StateVector

LETTERS = "IXYZ"
_LOGICAL_CHOICES = ("X", "Y", "Z")


def _validate_channel(probs: tuple[float, float, float]) -> tuple[float, float, float]:
    px, py, pz = (float(p) for p in probs)
    if min(px, py, pz) < 0 or px + py + pz > 1 + 1e-12:
        raise ValueError(f"invalid Pauli channel probabilities {probs}")
    return (px, py, pz)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-location channel strengths for one simulated experiment.

    ``p_phys`` is applied to each of the 10 resource qubits after ideal
    preparation, ``p_input`` to the teleportation input qubit, and with
    probability ``q_logical`` a uniformly chosen logical Pauli hits the code
    block (noise that stays inside the code space).
    """

    p_phys: tuple[float, float, float] = (0.0, 0.0, 0.0)
    p_input: tuple[float, float, float] = (0.0, 0.0, 0.0)
    q_logical: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_phys", _validate_channel(self.p_phys))
        object.__setattr__(self, "p_input", _validate_channel(self.p_input))
        if not 0.0 <= self.q_logical <= 1.0:
            raise ValueError(f"q_logical must be in [0, 1], got {self.q_logical}")

    @staticmethod
    def depolarizing(
        p_phys: float = 0.0, p_input: float = 0.0, q_logical: float = 0.0, seed: int = 0
    ) -> "NoiseSpec":
        """Isotropic channels: total flip probability p split evenly over X, Y, Z."""
        return NoiseSpec(
            p_phys=(p_phys / 3, p_phys / 3, p_phys / 3),
            p_input=(p_input / 3, p_input / 3, p_input / 3),
            q_logical=q_logical,
            seed=seed,
        )

    def to_dict(self) -> dict:
        return {
            "p_phys": list(self.p_phys),
            "p_input": list(self.p_input),
            "q_logical": self.q_logical,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(data: Mapping) -> "NoiseSpec":
        known = {"p_phys", "p_input", "q_logical", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown noise keys: {sorted(unknown)}")

        def triple(value) -> tuple[float, float, float]:
            if isinstance(value, (int, float)):
                return (value / 3, value / 3, value / 3)
            if len(value) != 3:
                raise ValueError(f"channel must be a scalar or a triple, got {value!r}")
            return tuple(float(v) for v in value)

        return NoiseSpec(
            p_phys=triple(data.get("p_phys", 0.0)),
            p_input=triple(data.get("p_input", 0.0)),
            q_logical=float(data.get("q_logical", 0.0)),
            seed=int(data.get("seed", 0)),
        )


def apply_pauli_channel(
    state: StateVector,
    qubit: int,
    probs: tuple[float, float, float],
    rng: np.random.Generator,
) -> tuple[StateVector, str]:
    """Sample I/X/Y/Z with (1 - sum, px, py, pz) and apply it to one qubit."""
    px, py, pz = _validate_channel(probs)
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    u = rng.random()
    if u < px:
        letter = "X"
    elif u < px + py:
        letter = "Y"
    elif u < px + py + pz:
        letter = "Z"
    else:
        return state, "I"
    err = PauliString.single(state.num_qubits, qubit, letter)
    return StateVector(state.num_qubits, err.apply_to(state.amplitudes)), letter


def sample_logical_pauli(q_logical: float, rng: np.random.Generator) -> str:
    """Return 'I' or a uniformly chosen logical letter with probability q."""
    if rng.random() < q_logical:
        return _LOGICAL_CHOICES[int(rng.integers(3))]
    return "I"


def noisy_resource(
    spec: NoiseSpec, rng: np.random.Generator, code: ShorCode | None = None
) -> ResourceState:
    """One noisy trajectory of the resource state."""
    code = code or ShorCode()
    resource = prepare_resource_circuit(code)
    state = resource.state
    for qubit in range(NUM_RESOURCE_QUBITS):
        state, _ = apply_pauli_channel(state, qubit, spec.p_phys, rng)
    letter = sample_logical_pauli(spec.q_logical, rng)
    if letter != "I":
        op = code.logical_operator(letter).embed(NUM_RESOURCE_QUBITS)
        state = StateVector(NUM_RESOURCE_QUBITS, op.apply_to(state.amplitudes))
    return ResourceState(state)


def run_trajectories(
    experiment: Callable[[np.random.Generator], float], n: int, base_seed: int
) -> tuple[float, float]:
    """Mean and standard error of a per-trajectory observable closure.

    Trajectory i runs on its own stream derived from (base_seed, i), so the
    result is independent of execution order.
    """
    if n < 1:
        raise ValueError("need at least one trajectory")
    values = np.empty(n)
    for i in range(n):
        values[i] = experiment(np.random.default_rng((base_seed, i)))
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, stderr


# ---------------------------------------------------------------------------
# Vectorized trajectory batches
# ---------------------------------------------------------------------------

# Pattern code layout (base-4 digits): resource qubit q at digit q, logical
# choice at digit 10, input letter at digit 11.

_LOGICAL_DIGIT = NUM_RESOURCE_QUBITS
_INPUT_DIGIT = NUM_RESOURCE_QUBITS + 1


def _sample_letter_codes(
    probs: tuple[float, float, float], n: int, rng: np.random.Generator
) -> np.ndarray:
    px, py, pz = probs
    edges = np.array([1.0 - px - py - pz, 1.0 - py - pz, 1.0 - pz])
    return np.searchsorted(edges, rng.random(n), side="right").astype(np.int64)


def sample_patterns(
    spec: NoiseSpec, n: int, rng: np.random.Generator, with_input: bool = False
) -> np.ndarray:
    """Encoded error patterns for n trajectories."""
    codes = np.zeros(n, dtype=np.int64)
    for q in range(NUM_RESOURCE_QUBITS):
        codes += _sample_letter_codes(spec.p_phys, n, rng) << (2 * q)
    logical = np.zeros(n, dtype=np.int64)
    hit = rng.random(n) < spec.q_logical
    logical[hit] = rng.integers(1, 4, size=int(hit.sum()))
    codes += logical << (2 * _LOGICAL_DIGIT)
    if with_input:
        codes += _sample_letter_codes(spec.p_input, n, rng) << (2 * _INPUT_DIGIT)
    return codes


@dataclass
class TrajectoryBatch:
    """Deduplicated trajectory ensemble: sampled patterns and per-pattern values."""

    n_trajectories: int
    pattern_codes: np.ndarray  # unique codes, shape (U,)
    counts: np.ndarray  # shape (U,)
    inverse: np.ndarray  # shape (n,), trajectory -> unique index
    values: dict[str, np.ndarray] = field(default_factory=dict)  # name -> (U,)

    def per_trajectory(self, name: str) -> np.ndarray:
        return self.values[name][self.inverse]

    def mean_stderr(self, name: str) -> tuple[float, float]:
        vals = self.values[name]
        w = self.counts
        n = self.n_trajectories
        mean = float(np.dot(w, vals) / n)
        if n > 1:
            var = float(np.dot(w, (vals - mean) ** 2) / (n - 1))
            return mean, float(np.sqrt(var / n))
        return mean, 0.0

    def ratio_batch_stderr(
        self, numerator: str | np.ndarray, denominator: str | np.ndarray, n_batches: int = 100
    ) -> tuple[float, float]:
        """Ratio-of-sums estimate with a batch-means standard error."""
        num = self.per_trajectory(numerator) if isinstance(numerator, str) else numerator
        den = self.per_trajectory(denominator) if isinstance(denominator, str) else denominator
        estimate = float(num.sum() / den.sum())
        b = min(n_batches, self.n_trajectories)
        size = self.n_trajectories // b
        if size == 0 or b < 2:
            return estimate, 0.0
        num_b = num[: b * size].reshape(b, size).sum(axis=1)
        den_b = den[: b * size].reshape(b, size).sum(axis=1)
        ratios = num_b / den_b
        return estimate, float(ratios.std(ddof=1) / np.sqrt(b))


class _MaskError:
    """Pauli error as (x_mask, z_mask) bit masks; global phase dropped."""

    __slots__ = ("x_mask", "z_mask")

    def __init__(self, x_mask: int = 0, z_mask: int = 0):
        self.x_mask = x_mask
        self.z_mask = z_mask

    def merge(self, other: "_MaskError") -> "_MaskError":
        return _MaskError(self.x_mask ^ other.x_mask, self.z_mask ^ other.z_mask)

    def apply(self, amps: np.ndarray) -> np.ndarray:
        dim = amps.shape[0]
        out = amps
        if self.z_mask:
            idx = np.arange(dim)
            out = out * (1.0 - 2.0 * _parity(idx & self.z_mask))
        if self.x_mask:
            out = out[np.arange(dim) ^ self.x_mask]
        return out.copy() if out is amps else out


def _letter_masks(code_int: int, qubit: int) -> tuple[int, int]:
    letter = code_int & 3
    bit = 1 << qubit
    x = bit if letter in (1, 2) else 0
    z = bit if letter in (2, 3) else 0
    return x, z


def _pattern_error(code_int: int, num_qubits: int, logical_masks) -> _MaskError:
    x_mask = z_mask = 0
    for q in range(num_qubits):
        x, z = _letter_masks(code_int >> (2 * q), q)
        x_mask |= x
        z_mask |= z
    err = _MaskError(x_mask, z_mask)
    logical = (code_int >> (2 * _LOGICAL_DIGIT)) & 3
    if logical:
        err = err.merge(logical_masks[logical - 1])
    return err


class _BatchContext:
    """Shared immutable data for batch evaluations."""

    def __init__(self, code: ShorCode | None = None):
        self.code = code or ShorCode()
        self.resource_amps = prepare_resource_circuit(self.code).state.amplitudes
        n = NUM_RESOURCE_QUBITS
        self.logical_masks = tuple(
            _MaskError(*op.embed(n)._masks[:2])
            for op in (self.code.logical_x, self.code.logical_y, self.code.logical_z)
        )
        self.generators10 = tuple(g.embed(n) for g in self.code.stabilizer_generators)
        self.generators9 = self.code.stabilizer_generators
        lx, ly, lz = self.code.logical_x, self.code.logical_y, self.code.logical_z
        self.observables10 = {
            "xx": self._joint("X", lx),
            "yy": self._joint("Y", ly),
            "zz": self._joint("Z", lz),
            "zx": self._joint("Z", lx),
            "xz": self._joint("X", lz),
        }

    @staticmethod
    def _joint(phys_letter: str, logical_op: PauliString) -> PauliString:
        embedded = logical_op.embed(NUM_RESOURCE_QUBITS)
        phys = PauliString.single(NUM_RESOURCE_QUBITS, PHYSICAL_QUBIT, phys_letter)
        product = phys * embedded
        return product

    def project_code(self, amps: np.ndarray, generators) -> np.ndarray:
        out = amps
        for gen in generators:
            out = 0.5 * (out + gen.apply_to(out))
        return out


_CHAR_KEYS = (
    "xx", "yy", "zz", "zx", "xz",
    "p_cs", "xx_cs", "yy_cs", "zz_cs", "zx_cs", "xz_cs",
)


def characterize_batch(
    spec: NoiseSpec, n: int, seed: int, code: ShorCode | None = None,
    context: "_BatchContext | None" = None,
    value_cache: dict | None = None,
) -> TrajectoryBatch:
    """Trajectory batch of the resource-characterization observables.

    Per-trajectory values are exact expectations of the trajectory's pure
    state; sampling noise comes from the error patterns alone.
    """
    ctx = context or _BatchContext(code)
    rng = np.random.default_rng(seed)
    codes = sample_patterns(spec, n, rng, with_input=False)
    unique, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)

    table = np.empty((len(unique), len(_CHAR_KEYS)))
    for i, code_int in enumerate(unique):
        key = int(code_int)
        cached = value_cache.get(key) if value_cache is not None else None
        if cached is None:
            cached = _characterize_values(key, ctx)
            if value_cache is not None:
                value_cache[key] = cached
        table[i] = cached

    values = {name: table[:, j].copy() for j, name in enumerate(_CHAR_KEYS)}
    return TrajectoryBatch(n, unique, counts, inverse, values)


def _characterize_values(code_int: int, ctx: _BatchContext) -> np.ndarray:
    err = _pattern_error(code_int, NUM_RESOURCE_QUBITS, ctx.logical_masks)
    amps = err.apply(ctx.resource_amps)
    out = np.empty(len(_CHAR_KEYS))
    for j, name in enumerate(_CHAR_KEYS[:5]):
        out[j] = np.real(np.vdot(amps, ctx.observables10[name].apply_to(amps)))
    projected = ctx.project_code(amps, ctx.generators10)
    out[5] = np.real(np.vdot(projected, projected))
    for j, name in enumerate(_CHAR_KEYS[:5]):
        out[6 + j] = np.real(np.vdot(projected, ctx.observables10[name].apply_to(projected)))
    return out


# ---------------------------------------------------------------------------
# Teleportation trajectories
# ---------------------------------------------------------------------------

_BELL_WEIGHTS = {
    # |bell> as w[p] vectors against input amplitudes: residual uses
    # w[p] = sum_i conj(bell[i, p]) * input[i].
    "phi_plus": np.array([[1, 0], [0, 1]], dtype=complex) / np.sqrt(2),
    "phi_minus": np.array([[1, 0], [0, -1]], dtype=complex) / np.sqrt(2),
    "psi_plus": np.array([[0, 1], [1, 0]], dtype=complex) / np.sqrt(2),
    "psi_minus": np.array([[0, 1], [-1, 0]], dtype=complex) / np.sqrt(2),
}

_TELEPORT_KEYS = ("f_raw", "p_acc", "f_proj", "f_active")


def _input_letter_apply(amps2: np.ndarray, letter_code: int) -> np.ndarray:
    if letter_code == 0:
        return amps2
    if letter_code == 1:  # X
        return amps2[::-1]
    if letter_code == 2:  # Y (global phase dropped)
        return np.array([-amps2[1], amps2[0]], dtype=complex)
    return np.array([amps2[0], -amps2[1]], dtype=complex)  # Z


def _teleport_values(
    code_int: int,
    bell_label: str,
    correction: PauliString | None,
    input_amps: np.ndarray,
    target_amps: np.ndarray,
    ctx: _BatchContext,
    with_active: bool,
) -> tuple[np.ndarray, float]:
    """Observables of one (pattern, BSM branch); also returns the branch probability."""
    err = _pattern_error(code_int, NUM_RESOURCE_QUBITS, ctx.logical_masks)
    res = err.apply(ctx.resource_amps)
    inp = _input_letter_apply(input_amps, (code_int >> (2 * _INPUT_DIGIT)) & 3)

    bell = _BELL_WEIGHTS[bell_label]  # bell[i, p]
    w = bell.conj().T @ inp  # w[p]
    half = 1 << (NUM_RESOURCE_QUBITS - 1)
    out = w[0] * res[:half] + w[1] * res[half:]
    prob = float(np.real(np.vdot(out, out)))
    if prob < PROB_FLOOR:
        return np.array([0.0, 0.0, 0.0, 0.0]), prob
    out = out / np.sqrt(prob)
    if correction is not None:
        out = correction.apply_to(out)

    f_raw = float(abs(np.vdot(target_amps, out)) ** 2)
    projected = ctx.project_code(out, ctx.generators9)
    p_acc = float(np.real(np.vdot(projected, projected)))
    f_proj = f_raw / p_acc if p_acc > PROB_FLOOR else 0.0

    f_active = 0.0
    if with_active:
        # Stabilizer outcomes are deterministic for Pauli-errored code states.
        syndrome_bits = tuple(
            1 if np.real(np.vdot(out, g.apply_to(out))) > 0 else -1
            for g in ctx.generators9
        )
        corr = ctx.code.decode_correction(Syndrome(syndrome_bits))
        f_active = float(abs(np.vdot(target_amps, corr.pauli.apply_to(out))) ** 2)
    return np.array([f_raw, p_acc, f_proj, f_active]), prob


def teleport_batch(
    spec: NoiseSpec,
    input_sv: StateVector,
    n: int,
    seed: int,
    mode: str = "postselect_phi_plus",
    code: ShorCode | None = None,
    context: "_BatchContext | None" = None,
    with_active: bool = False,
    value_cache: dict | None = None,
) -> TrajectoryBatch:
    """Trajectory batch for teleportation of one input state.

    In post-selected mode every trajectory is conditioned on the symmetric
    Bell branch (its probability is 1/4 independently of the Pauli error
    pattern, so the accepted ensemble has the unconditional pattern law).
    Feedforward mode Born-samples the branch and applies the correction.
    """
    ctx = context or _BatchContext(code)
    rng = np.random.default_rng(seed)
    codes = sample_patterns(spec, n, rng, with_input=True)

    outcomes = bsm_outcomes(ctx.code)
    if mode == "postselect_phi_plus":
        branch_of = np.zeros(n, dtype=np.int64)
    elif mode == "feedforward":
        branch_of = rng.integers(0, 4, size=n)
    else:
        raise ValueError(f"unknown teleport mode {mode!r}")

    keyed = codes * 4 + branch_of
    unique, inverse, counts = np.unique(keyed, return_inverse=True, return_counts=True)
    target = ctx.code.encode_logical(*input_sv.amplitudes).amplitudes

    table = np.empty((len(unique), len(_TELEPORT_KEYS)))
    for i, key in enumerate(unique):
        cached = value_cache.get(int(key)) if value_cache is not None else None
        if cached is None:
            pattern, branch = int(key) // 4, int(key) % 4
            outcome = outcomes[branch]
            correction = None if branch == 0 else outcome.correction
            vals, prob = _teleport_values(
                pattern, outcome.label, correction,
                input_sv.amplitudes, target, ctx, with_active,
            )
            # Pauli noise keeps every Bell branch at probability 1/4; if that
            # ever broke, the simple conditioning here would be invalid.
            if abs(prob - 0.25) > 1e-9:
                raise AssertionError("Bell branch probability deviated from 1/4")
            cached = vals
            if value_cache is not None:
                value_cache[int(key)] = cached
        table[i] = cached

    values = {name: table[:, j].copy() for j, name in enumerate(_TELEPORT_KEYS)}
    return TrajectoryBatch(n, unique, counts, inverse, values)


def teleport_estimates(
    batch: TrajectoryBatch, rng: np.random.Generator
) -> dict[str, tuple[float, float]]:
    """(estimate, stderr) of raw/projected/active fidelities and acceptance.

    Code-space projection is emulated per trajectory: accept with probability
    <Pi>, keep the projected fidelity of accepted runs.
    """
    out = {"f_raw": batch.mean_stderr("f_raw"), "f_active": batch.mean_stderr("f_active")}
    p_acc = batch.per_trajectory("p_acc")
    accepted = rng.random(batch.n_trajectories) < p_acc
    n_acc = int(accepted.sum())
    frac = n_acc / batch.n_trajectories
    frac_err = float(np.sqrt(max(frac * (1 - frac), 0.0) / batch.n_trajectories))
    out["p_cs"] = (frac, frac_err)
    if n_acc == 0:
        out["f_cs"] = (0.0, 0.0)
        return out
    f_proj = batch.per_trajectory("f_proj")[accepted]
    mean = float(f_proj.mean())
    err = float(f_proj.std(ddof=1) / np.sqrt(n_acc)) if n_acc > 1 else 0.0
    out["f_cs"] = (mean, err)
    return out
