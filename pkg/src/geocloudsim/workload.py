"""Seeded generators for PM fleets and VM request streams.

All generators are pure functions of their parameters and the RNG state,
so a scenario seed reproduces the same cloud byte-for-byte. VM
CPU-boundedness is drawn from an exponential distribution truncated to
[0, 1], which concentrates mass near 0 the way average CPU usage of real
shared-infrastructure VMs does.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class VmSpec:
    """One VM request: size, CPU-boundedness and lifetime in step indices."""

    id: str
    vcpus: int
    ram_gb: int
    beta: float
    boot_t: int
    delete_t: int

    def __post_init__(self):
        if self.vcpus < 1:
            raise WorkloadError(f"{self.id}: vcpus must be >= 1")
        if self.ram_gb <= 0:
            raise WorkloadError(f"{self.id}: ram_gb must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise WorkloadError(f"{self.id}: beta {self.beta} outside [0, 1]")
        if not self.boot_t < self.delete_t:
            raise WorkloadError(
                f"{self.id}: boot step {self.boot_t} must precede delete step {self.delete_t}"
            )


@dataclass(frozen=True)
class PmSpec:
    """One physical machine: capacity, site and architecture."""

    id: str
    cores: int
    ram_gb: int
    location: str
    architecture: str

    def __post_init__(self):
        if self.cores < 1:
            raise WorkloadError(f"{self.id}: cores must be >= 1")
        if self.ram_gb <= 0:
            raise WorkloadError(f"{self.id}: ram_gb must be positive")


@dataclass(frozen=True)
class BetaDistribution:
    """Exponential distribution truncated to [0, 1] for CPU-boundedness."""

    rate: float = 5.0

    def __post_init__(self):
        if self.rate <= 0:
            raise WorkloadError(f"rate must be positive, got {self.rate}")


def sample_beta(dist: BetaDistribution, rng: np.random.Generator) -> float:
    """Draw one CPU-boundedness value by inverse CDF (rejection-free)."""
    u = rng.random()
    lam = dist.rate
    return -math.log(1.0 - u * (1.0 - math.exp(-lam))) / lam


def gen_fleet(
    n_pms: int,
    locations,
    architecture: str,
    rng: np.random.Generator,
    cores_range: tuple[int, int] = (1, 4),
    ram_range: tuple[int, int] = (16, 32),
) -> list[PmSpec]:
    """Generate a PM fleet with uniform sizes and round-robin locations.

    Locations are assigned round-robin first (so every location gets an
    equal share) and then shuffled so PM ids carry no location pattern.
    """
    if n_pms < 1:
        raise WorkloadError("n_pms must be >= 1")
    loc_ids = [loc.id for loc in locations]
    if not loc_ids:
        raise WorkloadError("at least one location required")
    cores = rng.integers(cores_range[0], cores_range[1] + 1, size=n_pms)
    rams = rng.integers(ram_range[0], ram_range[1] + 1, size=n_pms)
    assigned = [loc_ids[i % len(loc_ids)] for i in range(n_pms)]
    rng.shuffle(assigned)
    width = len(str(n_pms - 1))
    return [
        PmSpec(
            id=f"pm{i:0{width}d}",
            cores=int(cores[i]),
            ram_gb=int(rams[i]),
            location=assigned[i],
            architecture=architecture,
        )
        for i in range(n_pms)
    ]


def gen_requests(
    n_vms: int,
    horizon_steps: int,
    beta_dist: BetaDistribution,
    rng: np.random.Generator,
    vcpu_choices: tuple[int, ...] = (1, 2),
    ram_range: tuple[int, int] = (8, 16),
    fixed_beta: float | None = None,
    beta_pool=None,
) -> list[VmSpec]:
    """Generate a VM request stream with uniform sizes and lifetimes.

    Boot steps are uniform over {0..horizon-2} and delete steps uniform
    over {boot+1..horizon}, so every VM runs at least one step and delete
    events spread over the whole simulation. Sizes are drawn before betas,
    so pinning ``fixed_beta`` (or supplying a ``beta_pool`` of measured
    values) changes nothing else about the stream.
    """
    if horizon_steps < 2:
        raise WorkloadError("horizon_steps must be >= 2")
    boots = rng.integers(0, horizon_steps - 1, size=n_vms)
    deletes = np.array(
        [rng.integers(b + 1, horizon_steps + 1) for b in boots], dtype=int
    )
    vcpus = rng.choice(np.asarray(vcpu_choices), size=n_vms)
    rams = rng.integers(ram_range[0], ram_range[1] + 1, size=n_vms)
    if fixed_beta is not None:
        betas = [float(fixed_beta)] * n_vms
    elif beta_pool is not None:
        pool = np.asarray(beta_pool, dtype=float)
        betas = [float(b) for b in rng.choice(pool, size=n_vms)]
    else:
        betas = [sample_beta(beta_dist, rng) for _ in range(n_vms)]
    width = len(str(max(n_vms - 1, 1)))
    return [
        VmSpec(
            id=f"vm{i:0{width}d}",
            vcpus=int(vcpus[i]),
            ram_gb=int(rams[i]),
            beta=betas[i],
            boot_t=int(boots[i]),
            delete_t=int(deletes[i]),
        )
        for i in range(n_vms)
    ]


def load_cpu_usage_betas(path: str) -> list[float]:
    """Read measured CPU-boundedness values from a ``vm_id,avg_cpu_pct`` CSV.

    Average CPU usage percentages map linearly onto beta (avg/100). Use the
    result as ``beta_pool`` in ``gen_requests`` when real traces are at hand.
    """
    betas = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["vm_id", "avg_cpu_pct"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise WorkloadError(
                f"{path}: expected header 'vm_id,avg_cpu_pct', got {reader.fieldnames}"
            )
        for i, row in enumerate(reader, start=2):
            try:
                pct = float(row["avg_cpu_pct"])
            except (TypeError, ValueError) as exc:
                raise WorkloadError(f"{path}: bad value on row {i}: {exc}") from exc
            if not 0.0 <= pct <= 100.0:
                raise WorkloadError(f"{path}: row {i}: avg_cpu_pct {pct} outside [0, 100]")
            betas.append(pct / 100.0)
    if not betas:
        raise WorkloadError(f"{path}: no data rows")
    return betas
