"""Cloud controllers: placement, migration and frequency-scaling policies.

Three controllers are provided:

* ``bfd`` - power-aware best-fit-decreasing baseline. Places each VM on the
  active PM with the smallest power increase, never scales frequencies.
* ``bcf`` - best-cost-fit: the migration stage alone. Consolidates VMs onto
  large PMs at locations that are currently cheap to power and cool.
* ``bcffs`` - best-cost-fit plus a frequency-scaling stage that walks each
  active PM down its frequency ladder while the predicted one-step energy
  cost saving exceeds the predicted one-step revenue loss.

Controllers mutate a CloudState in place and emit an ordered action log;
replaying the log against the prior state reproduces the new state exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geotemporal import ppue, step_energy_cost
from .power import PowerModel, pm_power
from .pricing import PricingScheme, pm_revenue
from .workload import PmSpec, VmSpec

PLACE = "place"
MIGRATE = "migrate"
SUSPEND = "suspend"
SET_FREQ = "set_freq"


@dataclass(frozen=True)
class SortWeights:
    """Weights of the normalised capacity/resource terms in placement sorts.

    A PM's capacity score is pm_cores*(cores/4) + pm_ram*(ram/32); a VM's
    resource score is vm_vcpus*(vcpus/2) + vm_ram*(ram/16). The defaults
    weight both terms equally.
    """

    pm_cores: float = 0.5
    pm_ram: float = 0.5
    vm_vcpus: float = 0.5
    vm_ram: float = 0.5

    def capacity_score(self, pm: "PmSpec") -> float:
        return self.pm_cores * (pm.cores / 4.0) + self.pm_ram * (pm.ram_gb / 32.0)

    def resource_score(self, vm: "VmSpec") -> float:
        return self.vm_vcpus * (vm.vcpus / 2.0) + self.vm_ram * (vm.ram_gb / 16.0)


DEFAULT_WEIGHTS = SortWeights()


@dataclass(frozen=True, slots=True)
class Action:
    """One control decision. ``saving``/``loss`` are the predicted one-step
    energy-cost saving and revenue loss of a frequency decrease; they are 0
    for every other kind."""

    kind: str
    step: int
    vm: str | None = None
    pm: str | None = None
    pm_from: str | None = None
    f_from: float | None = None
    f_to: float | None = None
    saving: float = 0.0
    loss: float = 0.0


class CloudState:
    """Allocation map, per-PM frequency and capacity bookkeeping.

    A PM is active iff it hosts at least one VM. Suspended PMs draw no
    power; their frequency entry rests at the ladder maximum.
    """

    def __init__(self, fleet: dict[str, PmSpec], f_max: float):
        self.fleet = fleet
        self.f_max = f_max
        self.allocation: dict[str, str] = {}
        self.pm_freq: dict[str, float] = {pm: f_max for pm in fleet}
        self.hosted: dict[str, list[str]] = {pm: [] for pm in fleet}
        self.free_vcpus: dict[str, int] = {pm: spec.cores for pm, spec in fleet.items()}
        self.free_ram: dict[str, int] = {pm: spec.ram_gb for pm, spec in fleet.items()}

    def copy(self) -> "CloudState":
        clone = CloudState.__new__(CloudState)
        clone.fleet = self.fleet
        clone.f_max = self.f_max
        clone.allocation = dict(self.allocation)
        clone.pm_freq = dict(self.pm_freq)
        clone.hosted = {pm: list(vms) for pm, vms in self.hosted.items()}
        clone.free_vcpus = dict(self.free_vcpus)
        clone.free_ram = dict(self.free_ram)
        return clone

    def fits(self, vm: VmSpec, pm: str) -> bool:
        return self.free_vcpus[pm] >= vm.vcpus and self.free_ram[pm] >= vm.ram_gb

    def place(self, vm: VmSpec, pm: str) -> None:
        if not self.fits(vm, pm):
            raise ValueError(f"{vm.id} does not fit on {pm}")
        self.allocation[vm.id] = pm
        self.hosted[pm].append(vm.id)
        self.free_vcpus[pm] -= vm.vcpus
        self.free_ram[pm] -= vm.ram_gb

    def remove(self, vm: VmSpec) -> str:
        pm = self.allocation.pop(vm.id)
        self.hosted[pm].remove(vm.id)
        self.free_vcpus[pm] += vm.vcpus
        self.free_ram[pm] += vm.ram_gb
        return pm

    def is_active(self, pm: str) -> bool:
        return bool(self.hosted[pm])

    def active_pms(self) -> list[str]:
        return [pm for pm in self.fleet if self.hosted[pm]]

    def cpu_occupancy(self, pm: str) -> float:
        """Fraction of the PM's cores claimed by hosted vCPUs."""
        spec = self.fleet[pm]
        return (spec.cores - self.free_vcpus[pm]) / spec.cores

    def hosted_betas(self, pm: str, vms: dict[str, VmSpec]) -> list[float]:
        """Per-vCPU betas on a PM (a VM's beta repeats per vCPU)."""
        betas: list[float] = []
        for vm_id in self.hosted[pm]:
            vm = vms[vm_id]
            betas.extend([vm.beta] * vm.vcpus)
        return betas

    def mean_beta(self, pm: str, vms: dict[str, VmSpec]) -> float:
        """Unweighted mean beta over the VMs hosted on a PM."""
        ids = self.hosted[pm]
        if not ids:
            return 0.0
        return math.fsum(vms[v].beta for v in ids) / len(ids)


def location_cost(pm: PmSpec, prices: dict[str, float], temps: dict[str, float]) -> float:
    """Effective $/kWh of powering a PM right now: price times cooling overhead."""
    return prices[pm.location] * ppue(temps[pm.location])


def pm_sort_key(
    pm: PmSpec,
    prices: dict[str, float],
    temps: dict[str, float],
    weights: SortWeights = DEFAULT_WEIGHTS,
) -> tuple:
    """Sort key: capacity decreasing, current location cost increasing, id."""
    return (-weights.capacity_score(pm), location_cost(pm, prices, temps), pm.id)


def _vm_sort_key(vm: VmSpec, weights: SortWeights) -> tuple:
    # resource requirements decreasing, id for determinism
    return (-weights.resource_score(vm), vm.id)


def _collect_to_alloc(
    state: CloudState,
    pending_vms: list[VmSpec],
    vms: dict[str, VmSpec],
    threshold: float,
    weights: SortWeights,
) -> tuple[list[VmSpec], dict[str, str]]:
    """New VMs plus VMs pulled off underutilised PMs, with their old hosts.

    VMs from underutilised PMs are deallocated at collection time (treated
    as in flight), so their source PM no longer counts as active while they
    are being re-placed.
    """
    to_alloc = list(pending_vms)
    previous_host: dict[str, str] = {}
    underutilised = [
        pm
        for pm in state.fleet
        if state.hosted[pm] and state.cpu_occupancy(pm) < threshold
    ]
    for pm in underutilised:
        for vm_id in list(state.hosted[pm]):
            vm = vms[vm_id]
            previous_host[vm_id] = state.remove(vm)
            to_alloc.append(vm)
    to_alloc.sort(key=lambda v: _vm_sort_key(v, weights))
    return to_alloc, previous_host


def _finish_placements(
    state: CloudState,
    placements: dict[str, str],
    previous_host: dict[str, str],
    hosted_before: set[str],
    step: int,
) -> list[Action]:
    """Turn raw placements into place/migrate/suspend records."""
    actions = []
    for vm_id, pm in placements.items():
        old = previous_host.get(vm_id)
        if old is None:
            actions.append(Action(PLACE, step, vm=vm_id, pm=pm))
        elif old != pm:
            actions.append(Action(MIGRATE, step, vm=vm_id, pm=pm, pm_from=old))
    for pm in sorted(hosted_before):
        if not state.hosted[pm]:
            actions.append(Action(SUSPEND, step, pm=pm))
            state.pm_freq[pm] = state.f_max
    return actions


def bcf_migration_stage(
    state: CloudState,
    pending_vms: list[VmSpec],
    fleet: dict[str, PmSpec],
    vms: dict[str, VmSpec],
    prices: dict[str, float],
    temps: dict[str, float],
    threshold: float,
    step: int,
    weights: SortWeights = DEFAULT_WEIGHTS,
) -> tuple[list[Action], list[VmSpec]]:
    """Allocate new VMs and re-place VMs from underutilised PMs.

    VMs are handled hardest-to-fit first. For each VM the active PMs are
    scanned in order of capacity decreasing and current location cost
    increasing, and the VM lands on the first PM that fits; when none
    fits, the head of the identically-sorted inactive list is activated.
    A VM that fits nowhere is deferred to the next step.
    """
    hosted_before = {pm for pm in fleet if state.hosted[pm]}
    to_alloc, previous_host = _collect_to_alloc(
        state, pending_vms, vms, threshold, weights
    )
    placements: dict[str, str] = {}
    deferred: list[VmSpec] = []
    for vm in to_alloc:
        active = [fleet[pm] for pm in fleet if state.hosted[pm]]
        inactive = [fleet[pm] for pm in fleet if not state.hosted[pm]]
        inactive.sort(key=lambda p: pm_sort_key(p, prices, temps, weights))
        chosen: str | None = None
        while chosen is None:
            active.sort(key=lambda p: pm_sort_key(p, prices, temps, weights))
            for pm in active:
                if state.fits(vm, pm.id):
                    chosen = pm.id
                    break
            if chosen is None:
                if not inactive:
                    break
                active.append(inactive.pop(0))
        if chosen is None:
            # nothing in the fleet fits: restore a pulled VM, defer a new one
            old = previous_host.pop(vm.id, None)
            if old is not None and state.fits(vm, old):
                state.place(vm, old)
            else:
                deferred.append(vm)
            continue
        state.place(vm, chosen)
        placements[vm.id] = chosen
    actions = _finish_placements(state, placements, previous_host, hosted_before, step)
    return actions, deferred


def bfd_stage(
    state: CloudState,
    pending_vms: list[VmSpec],
    fleet: dict[str, PmSpec],
    vms: dict[str, VmSpec],
    model: PowerModel,
    threshold: float,
    step: int,
    weights: SortWeights = DEFAULT_WEIGHTS,
) -> tuple[list[Action], list[VmSpec]]:
    """Power-aware best-fit-decreasing baseline.

    Each VM goes to the fitting active PM whose power increase at the
    maximum frequency is smallest; ties fall to the fuller PM, then the
    lower id. When no active PM fits, the fitting inactive PM with the
    lowest idle power is activated. Frequencies are never scaled.
    """
    hosted_before = {pm for pm in fleet if state.hosted[pm]}
    to_alloc, previous_host = _collect_to_alloc(
        state, pending_vms, vms, threshold, weights
    )
    placements: dict[str, str] = {}
    deferred: list[VmSpec] = []
    f_max = model.ladder.f_max
    q_max = model.ladder.step_count
    for vm in to_alloc:
        best: tuple | None = None
        chosen: str | None = None
        for pm_id in fleet:
            if not state.hosted[pm_id] or not state.fits(vm, pm_id):
                continue
            spec = fleet[pm_id]
            betas = state.hosted_betas(pm_id, vms)
            before = pm_power(model, f_max, betas, spec.cores)
            after = pm_power(model, f_max, betas + [vm.beta] * vm.vcpus, spec.cores)
            key = (after - before, -state.cpu_occupancy(pm_id), pm_id)
            if best is None or key < best:
                best = key
                chosen = pm_id
        if chosen is None:
            candidates = [
                pm_id
                for pm_id in fleet
                if not state.hosted[pm_id] and state.fits(vm, pm_id)
            ]
            if candidates:
                # idle power is architecture-wide, so break the tie toward
                # the largest machine to keep consolidation comparable
                chosen = min(
                    candidates,
                    key=lambda p: (
                        model.idle_power(q_max),
                        -weights.capacity_score(fleet[p]),
                        p,
                    ),
                )
        if chosen is None:
            old = previous_host.pop(vm.id, None)
            if old is not None and state.fits(vm, old):
                state.place(vm, old)
            else:
                deferred.append(vm)
            continue
        state.place(vm, chosen)
        placements[vm.id] = chosen
    actions = _finish_placements(state, placements, previous_host, hosted_before, step)
    return actions, deferred


def bcffs_frequency_stage(
    state: CloudState,
    fleet: dict[str, PmSpec],
    vms: dict[str, VmSpec],
    prices: dict[str, float],
    temps: dict[str, float],
    scheme: PricingScheme,
    model: PowerModel,
    step_h: float,
    step: int,
    prune: bool = True,
) -> tuple[list[Action], set[str]]:
    """Scale active PMs down their ladder while savings exceed revenue losses.

    Every active PM is first reset to the maximum frequency. The ladder is
    then descended one step at a time; a step is kept only when the
    predicted one-step energy cost saving strictly exceeds the predicted
    one-step revenue loss, and the descent stops at the first rejection.
    When a PM accepts no decrease at all, PMs with strictly higher mean
    hosted beta, strictly lower electricity price and strictly lower
    temperature are pruned from the remaining iteration (they are reset to
    the maximum frequency and would fare no better); ``prune=False``
    disables the heuristic and evaluates every PM.

    Returns the actions plus the set of pruned PM ids.
    """
    ladder = model.ladder
    f_max = ladder.f_max
    actions: list[Action] = []
    active = sorted(pm for pm in fleet if state.hosted[pm])
    for pm_id in active:
        if state.pm_freq[pm_id] != f_max:
            actions.append(
                Action(SET_FREQ, step, pm=pm_id, f_from=state.pm_freq[pm_id], f_to=f_max)
            )
            state.pm_freq[pm_id] = f_max
    pruned: set[str] = set()
    for pm_id in active:
        if pm_id in pruned:
            continue
        spec = fleet[pm_id]
        hosted_vms = [vms[v] for v in state.hosted[pm_id]]
        betas = state.hosted_betas(pm_id, vms)
        price = prices[spec.location]
        temp = temps[spec.location]
        revenue_cur = step_h * pm_revenue(scheme, hosted_vms, f_max, ladder)
        en_cost_cur = step_energy_cost(
            pm_power(model, f_max, betas, spec.cores), temp, price, step_h
        )
        decrease_feasible = False
        q = ladder.step_count
        while q > 1:
            q -= 1
            f = ladder.freq_at(q)
            revenue_new = step_h * pm_revenue(scheme, hosted_vms, f, ladder)
            en_cost_new = step_energy_cost(
                pm_power(model, f, betas, spec.cores), temp, price, step_h
            )
            revenue_loss = revenue_cur - revenue_new
            en_savings = en_cost_cur - en_cost_new
            if en_savings > revenue_loss:
                actions.append(
                    Action(
                        SET_FREQ,
                        step,
                        pm=pm_id,
                        f_from=ladder.freq_at(q + 1),
                        f_to=f,
                        saving=en_savings,
                        loss=revenue_loss,
                    )
                )
                state.pm_freq[pm_id] = f
                revenue_cur = revenue_new
                en_cost_cur = en_cost_new
                decrease_feasible = True
            else:
                break
        if not decrease_feasible and prune:
            my_beta = state.mean_beta(pm_id, vms)
            for other_id in active:
                if other_id == pm_id or other_id in pruned:
                    continue
                other = fleet[other_id]
                if (
                    state.mean_beta(other_id, vms) > my_beta
                    and prices[other.location] < price
                    and temps[other.location] < temp
                ):
                    pruned.add(other_id)
    return actions, pruned


def replay(state: CloudState, actions: list[Action], vms: dict[str, VmSpec]) -> CloudState:
    """Apply an action log to a copy of ``state`` and return the result."""
    result = state.copy()
    for action in actions:
        if action.kind == PLACE:
            result.place(vms[action.vm], action.pm)
        elif action.kind == MIGRATE:
            result.remove(vms[action.vm])
            result.place(vms[action.vm], action.pm)
        elif action.kind == SUSPEND:
            result.pm_freq[action.pm] = result.f_max
        elif action.kind == SET_FREQ:
            result.pm_freq[action.pm] = action.f_to
        else:
            raise ValueError(f"unknown action kind {action.kind!r}")
    return result
