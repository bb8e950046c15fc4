"""Headline quantities: fidelities, CHSH, projection probability, error bars.

The ideal resource's density matrix expands over the code-space projector and
the sandwiched two-party correlators, so the *raw* fidelity is
1/4 (<Pi> + <XX_L^cs> - <YY_L^cs> + <ZZ_L^cs>) with unnormalized sandwiched
terms, and the *corrected* fidelity renormalizes the same sum by <Pi> (the
fidelity of the state post-selected into the code space).  CHSH is treated
identically: sandwiched correlators, renormalized by <Pi> in corrected mode.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .shor import ShorCode
from .sim import PROB_FLOOR, DegenerateProjectionError, StateVector

SQRT2 = sqrt(2.0)

#: Maximum average teleportation fidelity of any measure-and-prepare strategy.
CLASSICAL_TELEPORT_LIMIT = 2.0 / 3.0


def classical_limit() -> float:
    """The 2/3 measure-and-prepare bound used in plots and pass/fail checks."""
    return CLASSICAL_TELEPORT_LIMIT


def resource_fidelity(observables: Mapping[str, float], corrected: bool) -> float:
    """Fidelity with the ideal physical-logical Bell resource.

    Expects the code-space projector expectation ``p_cs`` and the unnormalized
    sandwiched correlators ``xx_cs``, ``yy_cs``, ``zz_cs``.
    """
    total = 0.25 * (
        observables["p_cs"]
        + observables["xx_cs"]
        - observables["yy_cs"]
        + observables["zz_cs"]
    )
    if not corrected:
        return float(total)
    p = observables["p_cs"]
    if p < 1e-9:
        raise DegenerateProjectionError("code-space overlap vanishes")
    return float(total / p)


def chsh_correlators(observables: Mapping[str, float]) -> tuple[float, float, float, float]:
    """C1..C4 from the sandwiched correlators: physical axes (Z +- X)/sqrt(2)."""
    zx, xx = observables["zx_cs"], observables["xx_cs"]
    zz, xz = observables["zz_cs"], observables["xz_cs"]
    return (
        (zx + xx) / SQRT2,
        (zx - xx) / SQRT2,
        (zz + xz) / SQRT2,
        (zz - xz) / SQRT2,
    )


def chsh(
    correlators: Sequence[float],
    corrected: bool = False,
    projection_prob: float | None = None,
) -> float:
    """C1 - C2 + C3 + C4, renormalized by <Pi> in corrected mode."""
    c1, c2, c3, c4 = correlators
    value = c1 - c2 + c3 + c4
    if not corrected:
        return float(value)
    if projection_prob is None:
        raise ValueError("corrected CHSH needs the projection probability")
    if projection_prob < 1e-9:
        raise DegenerateProjectionError("code-space overlap vanishes")
    return float(value / projection_prob)


def teleport_fidelity(
    outputs: Iterable[StateVector],
    target: tuple[complex, complex],
    corrected: bool,
    code: ShorCode | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Ensemble teleportation fidelity and code-space acceptance.

    Corrected mode projects each trajectory onto the code space first.  With
    an ``rng`` the discards are Bernoulli-sampled (acceptance *fraction*);
    without one the exact acceptance-weighted expectation is returned.
    """
    code = code or ShorCode()
    target_amps = code.encode_logical(*target).amplitudes
    fids, accs = [], []
    for out in outputs:
        if out.num_qubits != 9:
            raise ValueError("teleport outputs must be nine-qubit states")
        f = float(abs(np.vdot(target_amps, out.amplitudes)) ** 2)
        amps = out.amplitudes.copy()
        for gen in code.stabilizer_generators:
            amps = 0.5 * (amps + gen.apply_to(amps))
        p = float(np.real(np.vdot(amps, amps)))
        fids.append(f)
        accs.append(p)
    fids_arr, accs_arr = np.array(fids), np.array(accs)
    if fids_arr.size == 0:
        raise ValueError("empty output ensemble")
    if not corrected:
        return float(fids_arr.mean()), float(accs_arr.mean())

    if rng is None:
        total_acc = accs_arr.sum()
        if total_acc < PROB_FLOOR:
            raise DegenerateProjectionError("no trajectory has code-space support")
        return float(fids_arr.sum() / total_acc), float(accs_arr.mean())
    keep = rng.random(len(fids_arr)) < accs_arr
    if not keep.any():
        raise DegenerateProjectionError("all trajectories rejected by projection")
    projected = fids_arr[keep] / accs_arr[keep]
    return float(projected.mean()), float(keep.mean())


# ---------------------------------------------------------------------------
# Count statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountSetting:
    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.labels),):
            raise ValueError("counts shape does not match labels")
        if counts.min() < 0:
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class CountTable:
    """Per-setting outcome histograms of one simulated run."""

    settings: dict[str, CountSetting]

    def total(self, name: str) -> int:
        return int(self.settings[name].counts.sum())

    def resampled(self, rng: np.random.Generator) -> "CountTable":
        return CountTable(
            {
                name: CountSetting(s.labels, rng.poisson(s.counts))
                for name, s in self.settings.items()
            }
        )

    def to_dict(self) -> dict:
        return {
            name: {"labels": list(s.labels), "counts": s.counts.tolist()}
            for name, s in self.settings.items()
        }


def poisson_resample(
    counts: CountTable,
    derived: Callable[[CountTable], float],
    n_resamples: int,
    rng: np.random.Generator,
) -> float:
    """Std. deviation of a derived quantity under Poisson count resampling."""
    if n_resamples < 100:
        raise ValueError("need at least 100 resamples for a stable error bar")
    values = np.empty(n_resamples)
    for i in range(n_resamples):
        values[i] = derived(counts.resampled(rng))
    return float(values.std(ddof=1))


# ---------------------------------------------------------------------------
# Experiment records
# ---------------------------------------------------------------------------

HEADLINE_FIELDS = ("f_raw", "f_cs", "p_cs", "chsh_raw", "chsh_cs")
TELEPORT_FIELDS = ("f_raw", "f_cs", "p_cs", "f_active")


@dataclass
class ExperimentRecord:
    """Named observable set with statistical errors and run metadata."""

    scenario: str
    f_raw: float | None = None
    f_cs: float | None = None
    p_cs: float | None = None
    chsh_raw: float | None = None
    chsh_cs: float | None = None
    teleport: dict[str, dict[str, float | None]] = field(default_factory=dict)
    errors: dict[str, float] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("f_raw", "f_cs", "p_cs"):
            value = getattr(self, name)
            if value is not None and not -1e-9 <= value <= 1 + 1e-9:
                raise ValueError(f"{name}={value} outside [0, 1]")
        for entry in self.teleport.values():
            for key in ("f_raw", "f_cs", "p_cs"):
                value = entry.get(key)
                if value is not None and not -1e-9 <= value <= 1 + 1e-9:
                    raise ValueError(f"teleport {key}={value} outside [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "scenario": self.scenario,
            "f_raw": self.f_raw,
            "f_cs": self.f_cs,
            "p_cs": self.p_cs,
            "chsh_raw": self.chsh_raw,
            "chsh_cs": self.chsh_cs,
            "teleport": {
                name: {k: entry.get(k) for k in TELEPORT_FIELDS}
                for name, entry in self.teleport.items()
            },
            "errors": dict(sorted(self.errors.items())),
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def csv_header(self) -> list[str]:
        cols = []
        for name in HEADLINE_FIELDS:
            cols += [name, f"{name}_err"]
        for input_name in self.teleport:
            for key in TELEPORT_FIELDS:
                cols += [
                    f"teleport_{input_name}_{key}",
                    f"teleport_{input_name}_{key}_err",
                ]
        cols += ["shots", "seed", "p_phys", "p_input", "q_logical"]
        return cols

    def csv_row(self) -> list:
        def fmt(value):
            return "" if value is None else repr(float(value))

        def triple(value) -> str:
            if not value:
                return ""
            return ";".join(repr(float(v)) for v in value)

        row = []
        for name in HEADLINE_FIELDS:
            row += [fmt(getattr(self, name)), fmt(self.errors.get(name))]
        for input_name, entry in self.teleport.items():
            for key in TELEPORT_FIELDS:
                row += [
                    fmt(entry.get(key)),
                    fmt(self.errors.get(f"teleport_{input_name}_{key}")),
                ]
        noise = self.metadata.get("noise", {})
        row += [
            str(self.metadata.get("shots", "")),
            str(self.metadata.get("seed", "")),
            triple(noise.get("p_phys")),
            triple(noise.get("p_input")),
            repr(float(noise["q_logical"])) if "q_logical" in noise else "",
        ]
        return row

    def to_csv(self) -> str:
        header = ",".join(self.csv_header())
        row = ",".join(str(x) for x in self.csv_row())
        return header + "\n" + row + "\n"
