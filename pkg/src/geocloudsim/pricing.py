"""Hourly VM pricing under performance-based and perceived-performance modes.

The hourly price of a VM is a base charge plus a CPU term that grows
linearly with the frequency provisioned above the ladder minimum, plus a
RAM term, all divided by an architecture price scale (ARM capacity sells
at 1/11 of the Intel price for the same nominal frequency). In perceived
mode the billed frequency of a vCPU is blended toward the host's maximum
frequency by how little the workload actually depends on the CPU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .power import FrequencyLadder, GRID_TOL_GHZ


class PricingError(ValueError):
    """Base class for pricing domain errors."""


class FrequencyOutOfRange(PricingError):
    """Billed frequency outside the architecture's ladder bounds."""


PERFORMANCE_BASED = "performance_based"
PERCEIVED_PERFORMANCE = "perceived_performance"
MODES = (PERFORMANCE_BASED, PERCEIVED_PERFORMANCE)

#: price divisor applied to the whole VM price on ARM infrastructure
ARM_PRICE_SCALE = 11.0


@dataclass(frozen=True)
class PricingScheme:
    """Pricing constants of one provider-like scheme.

    All monetary constants are $/h; ``ramsize_base`` is the RAM amount (GB)
    that the RAM weight is quoted for.
    """

    name: str
    c_base: float
    c_cpu: float
    c_ram: float
    ramsize_base: float
    mode: str = PERCEIVED_PERFORMANCE
    arch_scale: float = 1.0

    def __post_init__(self):
        if min(self.c_base, self.c_cpu, self.c_ram) < 0:
            raise PricingError(f"{self.name}: monetary constants must be >= 0")
        if self.ramsize_base <= 0:
            raise PricingError(f"{self.name}: ramsize_base must be positive")
        if self.arch_scale < 1:
            raise PricingError(f"{self.name}: arch_scale must be >= 1")
        if self.mode not in MODES:
            raise PricingError(f"{self.name}: unknown pricing mode {self.mode!r}")


PRESETS = {
    "elastichosts": dict(c_base=0.027, c_cpu=0.018, c_ram=0.025, ramsize_base=1.0),
    "cloudsigma": dict(c_base=0.0045, c_cpu=0.0017, c_ram=0.004, ramsize_base=1.0),
}


def preset_scheme(
    name: str,
    mode: str = PERCEIVED_PERFORMANCE,
    arch_scale: float = 1.0,
    **overrides,
) -> PricingScheme:
    """Build a scheme from a preset, optionally overriding its constants."""
    if name not in PRESETS:
        raise PricingError(f"unknown pricing preset {name!r}; have {sorted(PRESETS)}")
    constants = dict(PRESETS[name])
    constants.update(overrides)
    return PricingScheme(name=name, mode=mode, arch_scale=arch_scale, **constants)


def effective_frequency(
    beta: float, f: float, f_max: float, mode: str = PERCEIVED_PERFORMANCE
) -> float:
    """The billed per-vCPU frequency in GHz.

    In perceived mode a workload that barely uses the CPU (beta near 0) is
    billed near f_max regardless of the actual clock; a fully CPU-bound
    workload (beta = 1) is billed the actual clock.
    """
    if not 0.0 <= beta <= 1.0:
        raise PricingError(f"beta {beta} outside [0, 1]")
    if mode == PERFORMANCE_BASED:
        return f
    return beta * f + (1.0 - beta) * f_max


def vm_price(scheme: PricingScheme, vm, per_vcpu_freq: float, ladder: FrequencyLadder) -> float:
    """Hourly price in $ of one VM billed at the given per-vCPU frequency.

    ``vm`` needs ``vcpus``, ``ram_gb`` and ``beta`` attributes. The billed
    frequency may sit between ladder steps but must stay within the ladder
    bounds; the CPU charge is relative to the ladder minimum.
    """
    f = per_vcpu_freq
    if f < ladder.f_min - GRID_TOL_GHZ or f > ladder.f_max + GRID_TOL_GHZ:
        raise FrequencyOutOfRange(
            f"{f} GHz outside ladder [{ladder.f_min}, {ladder.f_max}]"
        )
    f_base = ladder.f_min
    f_eff = effective_frequency(vm.beta, f, ladder.f_max, scheme.mode)
    cpu_term = scheme.c_cpu * vm.vcpus * ((f_eff - f_base) / f_base)
    ram_term = scheme.c_ram * (vm.ram_gb / scheme.ramsize_base)
    return math.fsum([scheme.c_base, cpu_term, ram_term]) / scheme.arch_scale


def pm_revenue(scheme: PricingScheme, vms_on_pm, pm_freq: float, ladder: FrequencyLadder) -> float:
    """Hourly revenue in $ from all VMs hosted on one machine."""
    return math.fsum(vm_price(scheme, vm, pm_freq, ladder) for vm in vms_on_pm)


def for_architecture(scheme: PricingScheme, architecture: str) -> PricingScheme:
    """Apply the architecture price scale (ARM sells at 1/11 of Intel)."""
    scale = ARM_PRICE_SCALE if architecture == "arm" else 1.0
    return replace(scheme, arch_scale=scale)
