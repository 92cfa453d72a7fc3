"""Acceptance suite.

One test per acceptance criterion; each prints a [PASS] line when it holds.

 1. Power surface exactness: term-by-term agreement within 1e-12 relative
    over the full ARM grid plus frozen spot values. Runs in under 1 s.
 2. Surface fit: noiseless 44-point round-trip within 1e-6 absolute; with
    seeded +-5% noise the mean relative deviation stays within 6%.
 3. Pricing: provider base cases (CloudSigma $0.0085/h, ElasticHosts
    $0.052/h) exact to float evaluation of the price formula; beta = 0 is
    frequency-invariant; beta = 1 equals performance-based pricing.
 4. Energy integration: constant 1 kW at 0.05 $/kWh over 10 h is exactly
    $0.50; linearity holds over 1000 randomised cases within 1e-12.
 5. Controller guarantee on 20 seeded desk scenarios (200 PMs, 200 VMs,
    168 steps, ARM + CloudSigma + variable prices): every accepted
    frequency decrease predicts a one-step saving strictly above its
    revenue loss, and the frequency-scaling controller's total cost never
    exceeds the migration-only controller's. Under 5 minutes.
 6. Directional behaviour: frequency scaling saves money on every seed and
    the revenue drop stays below the dollar saving; ElasticHosts pricing
    saves strictly less than CloudSigma; performance-based pricing saves
    at most what perceived-performance does; fixed electricity prices save
    at most what variable prices do (seed-set mean for the last clause,
    whose quantifier the criterion leaves open).
 7. Savings are non-increasing in pinned CPU-boundedness for beta >= 0.2
    on every seed. Under 5 minutes.
 8. Determinism: one scenario run twice writes byte-identical JSON/CSV.
 9. Scale: 2000 PMs / 2000 VMs / 168 steps with the full controller
    completes in under 10 minutes.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from geocloudsim.config import build_scenario, load_config
from geocloudsim.controllers import SET_FREQ
from geocloudsim.geotemporal import energy_cost
from geocloudsim.power import (
    ARM_COEFFICIENTS,
    active_power,
    fit_power_surface,
    idle_power,
)
from geocloudsim.pricing import for_architecture, preset_scheme, vm_price
from geocloudsim.report import write_report
from geocloudsim.simulator import run
from geocloudsim.workload import VmSpec

GUARANTEE_SEEDS = tuple(range(20))
DIRECTIONAL_SEEDS = (42, 1, 2, 3, 4)
BETA_SWEEP_SEEDS = (1, 2, 3)


def desk_scenario(seed, **overrides):
    scenario = build_scenario(load_config(None), seed=seed)
    return replace(scenario, **overrides) if overrides else scenario


def total_cost(report):
    return report.aggregates["total_cost"]


def relative_saving(scenario):
    """Frequency-stage saving: cost drop of bcffs relative to bcf."""
    base = run(replace(scenario, controller="bcf"))
    scaled = run(replace(scenario, controller="bcffs"))
    c0, c1 = total_cost(base), total_cost(scaled)
    return (c0 - c1) / c0, base, scaled


# -- criterion 1: power-model exactness ---------------------------------------


def test_c1_power_model_exactness():
    start = time.time()
    for q in range(1, 12):
        for c in range(1, 5):
            expected = math.fsum(
                [
                    ARM_COEFFICIENTS.p00,
                    ARM_COEFFICIENTS.p10 * q,
                    ARM_COEFFICIENTS.p01 * c,
                    ARM_COEFFICIENTS.p20 * q**2,
                    ARM_COEFFICIENTS.p11 * q * c,
                    ARM_COEFFICIENTS.p30 * q**3,
                    ARM_COEFFICIENTS.p21 * q**2 * c,
                ]
            )
            assert active_power(ARM_COEFFICIENTS, q, c) == pytest.approx(
                expected, rel=1e-12
            )
    assert active_power(ARM_COEFFICIENTS, 1, 1) == pytest.approx(1.613628, abs=1e-9)
    assert active_power(ARM_COEFFICIENTS, 11, 4) == pytest.approx(17.258912, abs=1e-9)
    assert idle_power(ARM_COEFFICIENTS, 11) == pytest.approx(17.04448, abs=1e-9)
    elapsed = time.time() - start
    assert elapsed < 1.0
    print(f"\n[PASS] criterion 1: power surface exact on the 11x4 grid ({elapsed:.3f}s)")


# -- criterion 2: fit round-trip ----------------------------------------------


def test_c2_fit_round_trip_and_noise():
    start = time.time()
    grid = [
        (q, c, active_power(ARM_COEFFICIENTS, q, c))
        for q in range(1, 12)
        for c in range(1, 5)
    ]
    clean = fit_power_surface(grid)
    assert np.allclose(
        clean.coeffs.as_array(), ARM_COEFFICIENTS.as_array(), atol=1e-6
    )
    rng = np.random.default_rng(20160131)
    noisy = [(q, c, w * (1.0 + rng.uniform(-0.05, 0.05))) for q, c, w in grid]
    result = fit_power_surface(noisy)
    assert result.mean_rel_dev <= 0.06
    elapsed = time.time() - start
    assert elapsed < 1.0
    print(
        f"\n[PASS] criterion 2: noiseless fit within 1e-6, noisy mean deviation "
        f"{100 * result.mean_rel_dev:.2f}% <= 6% ({elapsed:.3f}s)"
    )


# -- criterion 3: pricing exactness -------------------------------------------


def test_c3_pricing_base_cases_and_modes():
    from geocloudsim.power import intel_profile

    ladder = intel_profile().ladder

    def spec(vcpus=1, ram=1, beta=1.0):
        return VmSpec("v", vcpus, ram, beta, 0, 1)

    cs = preset_scheme("cloudsigma")
    eh = preset_scheme("elastichosts")
    assert vm_price(cs, spec(), ladder.f_min, ladder) == 0.0085
    eh_price = vm_price(eh, spec(), ladder.f_min, ladder)
    assert eh_price == 0.027 + 0.018 * 0.0 + 0.025 * 1.0  # = $0.052 in floats
    assert eh_price == pytest.approx(0.052, abs=1e-15)
    # beta = 0: price identical across the entire ladder, exactly
    io_prices = {
        vm_price(cs, spec(beta=0.0), f, ladder) for f in ladder.frequencies
    }
    assert len(io_prices) == 1
    # beta = 1 perceived equals performance-based, exactly
    perf = preset_scheme("cloudsigma", mode="performance_based")
    for f in ladder.frequencies:
        assert vm_price(cs, spec(beta=1.0), f, ladder) == vm_price(
            perf, spec(beta=1.0), f, ladder
        )
    print("\n[PASS] criterion 3: pricing base cases and mode equivalences exact")


# -- criterion 4: energy integration ------------------------------------------


def test_c4_energy_integration_and_linearity():
    assert energy_cost([1000.0] * 10, [0.05] * 10, 1.0) == 0.5
    rng = np.random.default_rng(4)
    for _ in range(1000):
        n = int(rng.integers(1, 48))
        powers = rng.uniform(0.0, 5000.0, n)
        prices = rng.uniform(0.001, 0.5, n)
        step = float(rng.uniform(0.25, 2.0))
        scale = float(rng.uniform(0.01, 100.0))
        base = energy_cost(powers, prices, step)
        scaled = energy_cost(scale * powers, prices, step)
        assert scaled == pytest.approx(scale * base, rel=1e-12, abs=1e-15)
    print("\n[PASS] criterion 4: rectangle integration exact, linear over 1000 cases")


# -- criterion 5: controller guarantee ----------------------------------------


def test_c5_guarantee_on_twenty_seeds():
    start = time.time()
    violations = 0
    decreases_total = 0
    for seed in GUARANTEE_SEEDS:
        scenario = desk_scenario(seed)
        scaled = run(scenario)
        base = run(replace(scenario, controller="bcf"))
        for action in scaled.actions:
            if action.kind == SET_FREQ and action.f_to < action.f_from:
                decreases_total += 1
                if not action.saving > action.loss:
                    violations += 1
        assert total_cost(scaled) <= total_cost(base), f"seed {seed}"
    elapsed = time.time() - start
    assert decreases_total > 0
    assert violations == 0
    assert elapsed < 300.0
    print(
        f"\n[PASS] criterion 5: {decreases_total} accepted decreases across "
        f"{len(GUARANTEE_SEEDS)} seeds, 0 violations; scaled cost <= migration-only "
        f"cost on every seed ({elapsed:.1f}s)"
    )


# -- criterion 6: directional reproduction ------------------------------------


def test_c6_directional_behaviour():
    start = time.time()
    fixed_gaps = []
    for seed in DIRECTIONAL_SEEDS:
        scenario = desk_scenario(seed)
        s_cs, base_cs, scaled_cs = relative_saving(scenario)
        saving_usd = total_cost(base_cs) - total_cost(scaled_cs)
        drop_usd = (
            base_cs.aggregates["service_revenue"]
            - scaled_cs.aggregates["service_revenue"]
        )
        assert s_cs > 0.0, f"seed {seed}: no saving under CloudSigma"
        assert drop_usd <= saving_usd, f"seed {seed}: revenue drop exceeds saving"

        eh_scheme = for_architecture(preset_scheme("elastichosts"), "arm")
        s_eh, _, _ = relative_saving(replace(scenario, scheme=eh_scheme))
        assert s_eh < s_cs, f"seed {seed}: ElasticHosts saves as much as CloudSigma"

        perf_scheme = for_architecture(
            preset_scheme("cloudsigma", mode="performance_based"), "arm"
        )
        s_perf, _, _ = relative_saving(replace(scenario, scheme=perf_scheme))
        assert s_perf <= s_cs, f"seed {seed}: performance-based beats perceived"

        s_fixed, _, _ = relative_saving(replace(scenario, trace_mode="fixed"))
        fixed_gaps.append(s_cs - s_fixed)
    mean_gap = float(np.mean(fixed_gaps))
    assert mean_gap >= 0.0, f"fixed prices save more than variable: {fixed_gaps}"
    elapsed = time.time() - start
    print(
        f"\n[PASS] criterion 6: saving > 0, drop <= saving, ElasticHosts < "
        f"CloudSigma and performance <= perceived on every seed; variable "
        f"prices beat fixed by {mean_gap:+.4f} on the seed-set mean ({elapsed:.1f}s)"
    )


# -- criterion 7: CPU-boundedness sweep ----------------------------------------


def test_c7_savings_non_increasing_in_beta():
    start = time.time()
    betas = (0.0, 0.1, 0.2, 0.3, 0.4)
    for seed in BETA_SWEEP_SEEDS:
        savings = []
        for beta in betas:
            scenario = desk_scenario(seed, fixed_beta=beta)
            s, _, _ = relative_saving(scenario)
            savings.append(s)
        tail = savings[2:]  # beta >= 0.2
        for a, b in zip(tail, tail[1:]):
            assert b <= a + 1e-12, f"seed {seed}: savings increased with beta: {savings}"
    elapsed = time.time() - start
    assert elapsed < 300.0
    print(
        f"\n[PASS] criterion 7: savings non-increasing for beta >= 0.2 on "
        f"{len(BETA_SWEEP_SEEDS)} seeds ({elapsed:.1f}s)"
    )


# -- criterion 8: determinism --------------------------------------------------


def test_c8_byte_identical_outputs(tmp_path):
    scenario = desk_scenario(42)
    out1, out2 = tmp_path / "first", tmp_path / "second"
    write_report(run(scenario), str(out1), figures=False)
    write_report(run(scenario), str(out2), figures=False)
    for name in ("report.json", "series.csv", "histogram.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    print("\n[PASS] criterion 8: repeated run writes byte-identical JSON/CSV")


# -- criterion 9: paper-scale runtime ------------------------------------------


def test_c9_paper_scale_under_ten_minutes():
    scenario = desk_scenario(0, n_pms=2000, n_vms=2000)
    start = time.time()
    report = run(scenario)
    elapsed = time.time() - start
    assert elapsed < 600.0
    assert report.aggregates["placements"] == 2000
    assert report.aggregates["total_cost"] > 0
    print(
        f"\n[PASS] criterion 9: 2000 PMs / 2000 VMs / 168 steps in {elapsed:.1f}s"
    )
