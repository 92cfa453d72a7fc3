"""Multi-core CPU power models.

A physical machine's power dissipation is modelled top-down from a fitted
polynomial surface over (frequency step, active cores), an idle curve over
the frequency step alone, and a quadratic power ratio that maps a workload's
CPU-boundedness (beta) to the utilisation it induces on a core.

Two architecture profiles ship with the package: a measured ARM profile and
a synthetic Intel profile derived by rescaling the ARM surface (the Intel
coefficients were never published; see ``intel_profile``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class PowerModelError(ValueError):
    """Base class for power-model domain errors."""


class OffLadderFrequency(PowerModelError):
    """Frequency is inside the ladder bounds but not on the step grid."""


class OutOfRange(PowerModelError):
    """Frequency outside [f_min, f_max]."""


class OutOfGrid(PowerModelError):
    """Step index or core count outside the calibrated grid."""


class BetaOutOfRange(PowerModelError):
    """CPU-boundedness outside [0, 1]."""


class RankDeficient(PowerModelError):
    """Fit samples do not determine all seven surface coefficients."""


#: absolute tolerance (GHz) when snapping a frequency onto the ladder grid
GRID_TOL_GHZ = 1e-9


@dataclass(frozen=True)
class FrequencyLadder:
    """Discrete set of allowed CPU frequencies from f_min to f_max.

    Step indices are 1-based: index 1 is f_min, index ``step_count`` is
    f_max. All frequencies are in GHz.
    """

    f_min: float
    f_max: float
    f_step: float
    frequencies: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.f_min < self.f_max:
            raise PowerModelError(f"f_min {self.f_min} must be < f_max {self.f_max}")
        if self.f_step <= 0:
            raise PowerModelError(f"f_step must be positive, got {self.f_step}")
        span = (self.f_max - self.f_min) / self.f_step
        if abs(span - round(span)) * self.f_step > GRID_TOL_GHZ:
            raise PowerModelError(
                f"ladder span {self.f_min}..{self.f_max} is not a multiple of {self.f_step}"
            )
        n = int(round(span)) + 1
        freqs = tuple(self.f_min + i * self.f_step for i in range(n - 1)) + (self.f_max,)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def step_count(self) -> int:
        return len(self.frequencies)

    def freq_at(self, q: int) -> float:
        """Ladder frequency for 1-based step index ``q``."""
        if not 1 <= q <= self.step_count:
            raise OutOfGrid(f"step index {q} outside 1..{self.step_count}")
        return self.frequencies[q - 1]


def freq_to_step(ladder: FrequencyLadder, f: float) -> int:
    """Map a ladder frequency in GHz to its 1-based step index.

    Raises OutOfRange when f lies outside the ladder bounds and
    OffLadderFrequency when it is between steps.
    """
    if f < ladder.f_min - GRID_TOL_GHZ or f > ladder.f_max + GRID_TOL_GHZ:
        raise OutOfRange(f"{f} GHz outside ladder [{ladder.f_min}, {ladder.f_max}]")
    q = int(round((f - ladder.f_min) / ladder.f_step)) + 1
    q = min(max(q, 1), ladder.step_count)
    if abs(f - ladder.frequencies[q - 1]) > GRID_TOL_GHZ:
        raise OffLadderFrequency(f"{f} GHz not on the {ladder.f_step} GHz grid")
    return q


@dataclass(frozen=True)
class PowerCoefficients:
    """Coefficients of the fitted active-power surface, in W per monomial.

    Active power at step q with c busy cores is

        p00 + p10*q + p01*c + p20*q^2 + p11*q*c + p30*q^3 + p21*q^2*c

    and idle power drops the core terms.
    """

    p00: float
    p10: float
    p01: float
    p20: float
    p11: float
    p30: float
    p21: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.p00, self.p10, self.p01, self.p20, self.p11, self.p30, self.p21]
        )

    def scaled(self, factor: float) -> "PowerCoefficients":
        return PowerCoefficients(*(factor * v for v in self.as_array()))


def active_power(coeffs: PowerCoefficients, q: int, c: int) -> float:
    """Power in W with all c cores busy at frequency step q."""
    if q < 1 or c < 1:
        raise OutOfGrid(f"step {q} and cores {c} must both be >= 1")
    return (
        coeffs.p00
        + coeffs.p10 * q
        + coeffs.p01 * c
        + coeffs.p20 * q * q
        + coeffs.p11 * q * c
        + coeffs.p30 * q * q * q
        + coeffs.p21 * q * q * c
    )


def idle_power(coeffs: PowerCoefficients, q: int) -> float:
    """Power in W of an idle machine at frequency step q (core terms dropped)."""
    if q < 1:
        raise OutOfGrid(f"step {q} must be >= 1")
    return coeffs.p00 + coeffs.p10 * q + coeffs.p20 * q * q + coeffs.p30 * q * q * q


@dataclass(frozen=True)
class RatioCoefficients:
    """Quadratic mapping of CPU-boundedness to a per-core power ratio.

    The ratio is (g0*beta^2 + g1*beta + g2) / norm where ``norm`` is fixed
    to g0 + g1 + g2 so a fully CPU-bound core (beta = 1) yields exactly 1.
    """

    g0: float
    g1: float
    g2: float
    norm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "norm", self.g0 + self.g1 + self.g2)
        if self.norm <= 0:
            raise PowerModelError("ratio coefficients must sum to a positive norm")


def power_ratio(rc: RatioCoefficients, beta: float) -> float:
    """Utilisation a core shows when running a workload of the given beta."""
    if not 0.0 <= beta <= 1.0:
        raise BetaOutOfRange(f"beta {beta} outside [0, 1]")
    return (rc.g0 * beta * beta + rc.g1 * beta + rc.g2) / rc.norm


@dataclass(frozen=True)
class PowerModel:
    """One CPU architecture's power profile: ladder, surface and ratio.

    ``synthetic`` marks profiles whose coefficients were derived rather
    than measured (the default Intel profile); it is surfaced in reports.
    """

    architecture: str
    ladder: FrequencyLadder
    coeffs: PowerCoefficients
    ratio: RatioCoefficients
    core_count_max: int = 4
    synthetic: bool = False

    def __post_init__(self):
        if self.core_count_max < 1:
            raise PowerModelError("core_count_max must be >= 1")

    def active_power(self, q: int, c: int) -> float:
        if q > self.ladder.step_count or c > self.core_count_max:
            raise OutOfGrid(
                f"(q={q}, c={c}) outside calibrated grid "
                f"{self.ladder.step_count}x{self.core_count_max}"
            )
        return active_power(self.coeffs, q, c)

    def idle_power(self, q: int) -> float:
        if q > self.ladder.step_count:
            raise OutOfGrid(f"q={q} outside calibrated grid {self.ladder.step_count}")
        return idle_power(self.coeffs, q)


def pm_utilization(
    model: PowerModel, hosted_betas: list[float], pm_cores: int
) -> tuple[float, int]:
    """Utilisation of a machine hosting the given per-vCPU betas.

    Returns (u, cores_active). With more vCPUs than cores only the
    ``pm_cores`` highest-beta vCPUs count (placement normally prevents
    that state). An empty machine is (0.0, 0).
    """
    if pm_cores < 1:
        raise PowerModelError("pm_cores must be >= 1")
    if not hosted_betas:
        return 0.0, 0
    betas = sorted(hosted_betas, reverse=True)[:pm_cores]
    cores_active = len(betas)
    u = math.fsum(power_ratio(model.ratio, b) for b in betas) / cores_active
    return u, cores_active


def pm_power(
    model: PowerModel, f: float, hosted_betas: list[float], pm_cores: int
) -> float:
    """Power in W of a machine at frequency f hosting the given betas."""
    if pm_cores > model.core_count_max:
        raise OutOfGrid(
            f"pm_cores {pm_cores} exceeds model core_count_max {model.core_count_max}"
        )
    q = freq_to_step(model.ladder, f)
    u, cores_active = pm_utilization(model, hosted_betas, pm_cores)
    p_idle = model.idle_power(q)
    if cores_active == 0:
        return p_idle
    return p_idle + (model.active_power(q, cores_active) - p_idle) * u


@dataclass(frozen=True)
class FitResult:
    """Least-squares surface fit plus its deviation from the input samples."""

    coeffs: PowerCoefficients
    max_rel_dev: float
    mean_rel_dev: float


def fit_power_surface(samples: list[tuple[float, float, float]]) -> FitResult:
    """Fit the seven-coefficient power surface to (q, c, power_w) samples.

    Solves the linear least-squares problem over the monomials
    [1, q, c, q^2, q*c, q^3, q^2*c] and reports the maximum and mean
    relative deviation of the fitted surface from the samples.

    Raises RankDeficient when the samples do not span all seven monomials
    (this includes having fewer than 7 samples).
    """
    if len(samples) < 7:
        raise RankDeficient(f"need at least 7 samples, got {len(samples)}")
    arr = np.asarray(samples, dtype=float)
    q, c, w = arr[:, 0], arr[:, 1], arr[:, 2]
    design = np.column_stack([np.ones_like(q), q, c, q * q, q * c, q**3, q * q * c])
    solution, _, rank, _ = np.linalg.lstsq(design, w, rcond=None)
    if rank < 7:
        raise RankDeficient(f"design matrix rank {rank} < 7; samples are degenerate")
    p00, p10, p01, p20, p11, p30, p21 = solution
    coeffs = PowerCoefficients(p00, p10, p01, p20, p11, p30, p21)
    predicted = design @ solution
    rel = np.abs(predicted - w) / np.abs(w)
    return FitResult(coeffs, float(rel.max()), float(rel.mean()))


def load_fit_samples(path: str) -> list[tuple[float, float, float]]:
    """Read fit samples from a CSV file with header ``q,c,power_w``."""
    samples = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["q", "c", "power_w"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise PowerModelError(
                f"{path}: expected header 'q,c,power_w', got {reader.fieldnames}"
            )
        for i, row in enumerate(reader, start=2):
            try:
                samples.append((float(row["q"]), float(row["c"]), float(row["power_w"])))
            except (TypeError, ValueError) as exc:
                raise PowerModelError(f"{path}: bad value on row {i}: {exc}") from exc
    return samples


# Measured quad-core ARM profile: 0.8-1.8 GHz in 100 MHz steps (11 steps).
ARM_COEFFICIENTS = PowerCoefficients(
    p00=1.318, p10=0.2243, p01=0.03559, p20=0.03137, p11=-0.00318, p30=0.00711,
    p21=0.000438,
)
ARM_RATIO = RatioCoefficients(g0=-1.362, g1=2.798, g2=1.31)
ARM_LADDER = FrequencyLadder(f_min=0.8, f_max=1.8, f_step=0.1)
INTEL_LADDER = FrequencyLadder(f_min=2.6, f_max=3.4, f_step=0.2)

#: default peak power target (W) used to derive the synthetic Intel surface
INTEL_DEFAULT_PEAK_W = 95.0


def arm_profile() -> PowerModel:
    """The measured ARM power profile."""
    return PowerModel("arm", ARM_LADDER, ARM_COEFFICIENTS, ARM_RATIO, core_count_max=4)


def intel_profile(peak_w: float = INTEL_DEFAULT_PEAK_W) -> PowerModel:
    """A synthetic Intel profile: 2.6-3.4 GHz in 200 MHz steps (5 steps).

    No measured Intel coefficients are available, so the ARM surface is
    rescaled so that full quad-core power at the top Intel step equals
    ``peak_w``. The profile is flagged synthetic and reports carry the flag.
    """
    q_max = INTEL_LADDER.step_count
    anchor = active_power(ARM_COEFFICIENTS, q_max, 4)
    coeffs = ARM_COEFFICIENTS.scaled(peak_w / anchor)
    return PowerModel(
        "intel", INTEL_LADDER, coeffs, ARM_RATIO, core_count_max=4, synthetic=True
    )
