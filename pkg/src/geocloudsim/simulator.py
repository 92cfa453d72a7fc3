"""Hourly simulation driver: workload events, control, accounting.

Each step runs in a fixed order: expire VMs whose delete step arrived,
collect newly booted (and previously deferred) VMs, invoke the selected
controller, then account power, energy cost and service revenue for the
resulting state. Runs are deterministic in the scenario seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .controllers import (
    MIGRATE,
    PLACE,
    Action,
    CloudState,
    SortWeights,
    bcf_migration_stage,
    bcffs_frequency_stage,
    bfd_stage,
)
from .geotemporal import (
    GeotemporalTrace,
    Location,
    TraceParams,
    step_energy_cost,
    synth_trace,
    total_power,
)
from .power import PowerModel, freq_to_step, pm_power
from .pricing import PricingScheme, pm_revenue
from .workload import BetaDistribution, PmSpec, VmSpec, gen_fleet, gen_requests

CONTROLLERS = ("bfd", "bcf", "bcffs")

#: number of uniform CPU-boundedness bins in the occurrence histogram
BETA_BINS = 20


class ConfigError(ValueError):
    """Scenario or configuration is invalid; nothing was run."""


@dataclass(frozen=True)
class Scenario:
    """Everything that determines one simulation run."""

    locations: tuple[Location, ...]
    model: PowerModel
    scheme: PricingScheme
    controller: str = "bcffs"
    n_pms: int = 200
    n_vms: int = 200
    horizon_steps: int = 168
    step_h: float = 1.0
    seed: int = 0
    trace_mode: str = "rtep"
    underutil_threshold: float = 0.3
    prune: bool = True
    sort_weights: SortWeights = field(default_factory=SortWeights)
    beta_rate: float = 5.0
    fixed_beta: float | None = None
    pm_cores_range: tuple[int, int] = (1, 4)
    pm_ram_range: tuple[int, int] = (16, 32)
    vm_vcpu_choices: tuple[int, ...] = (1, 2)
    vm_ram_range: tuple[int, int] = (8, 16)
    trace_params: TraceParams = field(default_factory=TraceParams)
    traces: tuple[GeotemporalTrace, ...] | None = None
    beta_pool: tuple[float, ...] | None = None
    # explicit inputs replace the seeded generators when set
    explicit_fleet: tuple[PmSpec, ...] | None = None
    explicit_vms: tuple[VmSpec, ...] | None = None

    def describe(self) -> dict:
        """JSON-serialisable echo of the scenario, written into reports."""
        return {
            "controller": self.controller,
            "architecture": self.model.architecture,
            "power_model_synthetic": self.model.synthetic,
            "pricing_scheme": self.scheme.name,
            "pricing_mode": self.scheme.mode,
            "arch_price_scale": self.scheme.arch_scale,
            "n_pms": self.n_pms,
            "n_vms": self.n_vms,
            "horizon_steps": self.horizon_steps,
            "step_h": self.step_h,
            "seed": self.seed,
            "trace_mode": self.trace_mode,
            "underutil_threshold": self.underutil_threshold,
            "prune": self.prune,
            "beta_rate": self.beta_rate,
            "fixed_beta": self.fixed_beta,
            "locations": [loc.id for loc in self.locations],
        }


SERIES_KEYS = (
    "it_power_w",
    "total_power_w",
    "energy_cost",
    "it_cost",
    "service_revenue",
    "migrations",
    "active_pms",
    "mean_freq_ghz",
    "deferred",
)


@dataclass
class SimulationReport:
    """Per-step series, aggregates and the occurrence histogram of one run."""

    scenario: Scenario
    series: dict[str, list]
    aggregates: dict[str, float]
    histogram: np.ndarray
    actions: list[Action]
    ledger: dict[str, list]
    states: list[tuple[dict[str, str], dict[str, float]]] | None = None
    fleet: list[PmSpec] = field(default_factory=list)
    vms: list[VmSpec] = field(default_factory=list)


def _validate(scenario: Scenario) -> None:
    if scenario.controller not in CONTROLLERS:
        raise ConfigError(
            f"unknown controller {scenario.controller!r}; expected one of {CONTROLLERS}"
        )
    if scenario.horizon_steps < 1:
        raise ConfigError("horizon_steps must be >= 1")
    if scenario.step_h <= 0:
        raise ConfigError("step_h must be positive")
    if scenario.n_pms < 1 or scenario.n_vms < 0:
        raise ConfigError("fleet and workload sizes must be positive")
    if not scenario.locations:
        raise ConfigError("at least one location required")
    if scenario.seed < 0:
        raise ConfigError("seed must be non-negative")
    if scenario.trace_mode not in ("fixed", "rtep"):
        raise ConfigError(f"unknown trace mode {scenario.trace_mode!r}")
    if scenario.fixed_beta is not None and not 0.0 <= scenario.fixed_beta <= 1.0:
        raise ConfigError("fixed_beta must lie in [0, 1]")


def build_inputs(
    scenario: Scenario,
) -> tuple[list[PmSpec], list[VmSpec], dict[str, GeotemporalTrace]]:
    """Generate (or adopt) the fleet, request stream and traces for a run."""
    _validate(scenario)
    ss = np.random.SeedSequence(scenario.seed)
    fleet_ss, request_ss = ss.spawn(2)
    if scenario.explicit_fleet is not None:
        fleet = list(scenario.explicit_fleet)
    else:
        fleet = gen_fleet(
            scenario.n_pms,
            scenario.locations,
            scenario.model.architecture,
            np.random.default_rng(fleet_ss),
            cores_range=scenario.pm_cores_range,
            ram_range=scenario.pm_ram_range,
        )
    if scenario.explicit_vms is not None:
        requests = list(scenario.explicit_vms)
    else:
        requests = gen_requests(
            scenario.n_vms,
            scenario.horizon_steps,
            BetaDistribution(scenario.beta_rate),
            np.random.default_rng(request_ss),
            vcpu_choices=scenario.vm_vcpu_choices,
            ram_range=scenario.vm_ram_range,
            fixed_beta=scenario.fixed_beta,
            beta_pool=scenario.beta_pool,
        )
    if scenario.traces is not None:
        traces = {trace.location: trace for trace in scenario.traces}
    else:
        traces = {
            loc.id: synth_trace(
                loc,
                scenario.horizon_steps,
                scenario.trace_mode,
                scenario.seed,
                scenario.trace_params,
            )
            for loc in scenario.locations
        }
    for loc in scenario.locations:
        trace = traces.get(loc.id)
        if trace is None:
            raise ConfigError(f"no trace for location {loc.id!r}")
        if len(trace) < scenario.horizon_steps:
            raise ConfigError(
                f"trace for {loc.id!r} has {len(trace)} steps, "
                f"horizon needs {scenario.horizon_steps}"
            )
        if trace.step_h != scenario.step_h:
            raise ConfigError(
                f"trace for {loc.id!r} has step {trace.step_h} h, scenario uses "
                f"{scenario.step_h} h"
            )
    return fleet, requests, traces


def _beta_bin(beta: float) -> int:
    return min(int(beta * BETA_BINS), BETA_BINS - 1)


def beta_freq_histogram(
    states: list[tuple[dict[str, str], dict[str, float]]],
    vms: dict[str, VmSpec],
    model: PowerModel,
    beta_bins: int = BETA_BINS,
) -> np.ndarray:
    """Occurrence counts of (beta, frequency) pairs over VM-steps.

    For each step and each allocated VM, the bin of the VM's beta (uniform
    bins over [0, 1]) and the host's ladder frequency are incremented.
    """
    counts = np.zeros((beta_bins, model.ladder.step_count), dtype=np.int64)
    for allocation, pm_freq in states:
        for vm_id, pm_id in allocation.items():
            b = min(int(vms[vm_id].beta * beta_bins), beta_bins - 1)
            q = freq_to_step(model.ladder, pm_freq[pm_id])
            counts[b, q - 1] += 1
    return counts


def run(scenario: Scenario, keep_states: bool = False) -> SimulationReport:
    """Simulate one scenario and return its report.

    With ``keep_states`` the report also carries per-step snapshots of the
    allocation and frequency maps (used by tests and the histogram
    operation; the histogram itself is always computed).
    """
    fleet_list, vm_list, traces = build_inputs(scenario)
    fleet = {pm.id: pm for pm in fleet_list}
    vms = {vm.id: vm for vm in vm_list}
    model = scenario.model
    ladder = model.ladder
    scheme = scenario.scheme
    step_h = scenario.step_h
    pm_location = {pm.id: pm.location for pm in fleet_list}

    boots: dict[int, list[VmSpec]] = {}
    expiries: dict[int, list[VmSpec]] = {}
    for vm in vm_list:
        boots.setdefault(vm.boot_t, []).append(vm)
        expiries.setdefault(vm.delete_t, []).append(vm)

    state = CloudState(fleet, ladder.f_max)
    series: dict[str, list] = {key: [] for key in SERIES_KEYS}
    ledger: dict[str, list] = {
        "pm": [], "step": [], "p_it_w": [], "p_tot_w": [], "cost": [], "location": []
    }
    histogram = np.zeros((BETA_BINS, ladder.step_count), dtype=np.int64)
    actions: list[Action] = []
    states: list[tuple[dict[str, str], dict[str, float]]] = []
    deferred: list[VmSpec] = []
    pruned_total = 0

    for t in range(scenario.horizon_steps):
        for vm in expiries.get(t, ()):
            if vm.id in state.allocation:
                state.remove(vm)
        for pm_id in state.fleet:
            if not state.hosted[pm_id]:
                state.pm_freq[pm_id] = ladder.f_max
        pending = [vm for vm in deferred if vm.delete_t > t] + boots.get(t, [])
        prices = {loc.id: traces[loc.id].prices[t] for loc in scenario.locations}
        temps = {loc.id: traces[loc.id].temps[t] for loc in scenario.locations}

        if scenario.controller == "bfd":
            step_actions, deferred = bfd_stage(
                state, pending, fleet, vms, model,
                scenario.underutil_threshold, t, scenario.sort_weights,
            )
        else:
            step_actions, deferred = bcf_migration_stage(
                state, pending, fleet, vms, prices, temps,
                scenario.underutil_threshold, t, scenario.sort_weights,
            )
            if scenario.controller == "bcffs":
                freq_actions, pruned = bcffs_frequency_stage(
                    state, fleet, vms, prices, temps, scheme, model,
                    step_h, t, prune=scenario.prune,
                )
                step_actions.extend(freq_actions)
                pruned_total += len(pruned)
        actions.extend(step_actions)

        active = sorted(pm for pm in fleet if state.hosted[pm])
        it_powers, tot_powers, costs, it_costs, revenues, freqs = [], [], [], [], [], []
        for pm_id in active:
            spec = fleet[pm_id]
            f = state.pm_freq[pm_id]
            betas = state.hosted_betas(pm_id, vms)
            temp = temps[spec.location]
            price = prices[spec.location]
            p_it = pm_power(model, f, betas, spec.cores)
            p_tot = total_power(p_it, temp)
            cost = step_energy_cost(p_it, temp, price, step_h)
            hosted_vms = [vms[v] for v in state.hosted[pm_id]]
            revenue = step_h * pm_revenue(scheme, hosted_vms, f, ladder)
            it_powers.append(p_it)
            tot_powers.append(p_tot)
            costs.append(cost)
            it_costs.append(step_h * (p_it / 1000.0) * price)
            revenues.append(revenue)
            freqs.append(f)
            ledger["pm"].append(pm_id)
            ledger["step"].append(t)
            ledger["p_it_w"].append(p_it)
            ledger["p_tot_w"].append(p_tot)
            ledger["cost"].append(cost)
            ledger["location"].append(pm_location[pm_id])
            q = freq_to_step(ladder, f)
            for vm_id in state.hosted[pm_id]:
                histogram[_beta_bin(vms[vm_id].beta), q - 1] += 1

        series["it_power_w"].append(math.fsum(it_powers))
        series["total_power_w"].append(math.fsum(tot_powers))
        series["energy_cost"].append(math.fsum(costs))
        series["it_cost"].append(math.fsum(it_costs))
        series["service_revenue"].append(math.fsum(revenues))
        series["migrations"].append(sum(1 for a in step_actions if a.kind == MIGRATE))
        series["active_pms"].append(len(active))
        series["mean_freq_ghz"].append(math.fsum(freqs) / len(freqs) if freqs else 0.0)
        series["deferred"].append(len(deferred))
        if keep_states:
            states.append((dict(state.allocation), dict(state.pm_freq)))

    aggregates = {
        "it_energy_kwh": math.fsum(series["it_power_w"]) * step_h / 1000.0,
        "it_cost": math.fsum(series["it_cost"]),
        "total_energy_kwh": math.fsum(series["total_power_w"]) * step_h / 1000.0,
        "total_cost": math.fsum(series["energy_cost"]),
        "service_revenue": math.fsum(series["service_revenue"]),
        "migrations": int(sum(series["migrations"])),
        "placements": sum(1 for a in actions if a.kind == PLACE),
        "deferred_total": int(sum(series["deferred"])),
        "pruned_pms": pruned_total,
    }
    return SimulationReport(
        scenario=scenario,
        series=series,
        aggregates=aggregates,
        histogram=histogram,
        actions=actions,
        ledger=ledger,
        states=states if keep_states else None,
        fleet=fleet_list,
        vms=vm_list,
    )


COMPARISON_METRICS = (
    "it_energy_kwh",
    "it_cost",
    "total_energy_kwh",
    "total_cost",
    "service_revenue",
)


@dataclass
class ComparisonReport:
    """Absolute and baseline-normalised aggregates for several controllers."""

    baseline: str
    reports: dict[str, SimulationReport]
    absolute: dict[str, dict[str, float]]
    normalized: dict[str, dict[str, float]]


def compare(
    scenario: Scenario, controllers=CONTROLLERS, keep_states: bool = False
) -> ComparisonReport:
    """Run several controllers on the same fleet, workload and traces.

    Results are normalised to the best-fit-decreasing baseline when it is
    among the controllers, or to the first controller otherwise.
    """
    controllers = tuple(controllers)
    if not controllers:
        raise ConfigError("at least one controller required")
    for name in controllers:
        if name not in CONTROLLERS:
            raise ConfigError(f"unknown controller {name!r}")
    reports = {
        name: run(replace(scenario, controller=name), keep_states=keep_states)
        for name in controllers
    }
    baseline = "bfd" if "bfd" in controllers else controllers[0]
    absolute = {
        name: {m: reports[name].aggregates[m] for m in COMPARISON_METRICS}
        for name in controllers
    }
    base = absolute[baseline]
    normalized = {
        name: {
            m: (absolute[name][m] / base[m]) if base[m] != 0 else float("nan")
            for m in COMPARISON_METRICS
        }
        for name in controllers
    }
    return ComparisonReport(baseline, reports, absolute, normalized)
