"""Configuration loading, validation and scenario assembly.

One YAML file drives everything. Every key has a default, unknown keys are
rejected with their full path, and all cross-references (architecture,
controller, pricing preset, trace files) are checked before a run starts.
CLI flags override config keys.

The bundled defaults reproduce the desk-scale evaluation scenario: 200 PMs
and 200 VMs across six sites for 168 hourly steps on ARM infrastructure
with CloudSigma-like perceived-performance pricing. The six sites and
their mean prices/temperatures are synthetic stand-ins for a realistic
world-wide deployment (two US, four non-US).
"""

from __future__ import annotations

import copy
import os

import yaml

from .controllers import SortWeights
from .geotemporal import Location, TraceParams, load_trace
from .power import (
    FrequencyLadder,
    PowerCoefficients,
    PowerModel,
    RatioCoefficients,
    arm_profile,
    intel_profile,
)
from .pricing import PRESETS, for_architecture, preset_scheme
from .simulator import ConfigError, Scenario
from .workload import load_cpu_usage_betas

#: environment variable that overrides the configured output directory
OUTPUT_DIR_ENV = "GEOCLOUDSIM_OUT"

DEFAULT_CONFIG: dict = {
    "output_dir": "out",
    # synthetic wholesale-like price means; each price tier pairs sites in
    # far-apart timezones so real-time prices rotate the cheapest site
    "locations": [
        {"id": "us_nw", "timezone_offset_h": -8, "mean_price": 0.014, "mean_temp": 12.0},
        {"id": "us_mw", "timezone_offset_h": -6, "mean_price": 0.010, "mean_temp": 10.0},
        {"id": "eu_west", "timezone_offset_h": 1, "mean_price": 0.020, "mean_temp": 10.0},
        {"id": "eu_north", "timezone_offset_h": 2, "mean_price": 0.021, "mean_temp": 5.0},
        {"id": "asia_se", "timezone_offset_h": 8, "mean_price": 0.0105, "mean_temp": 27.0},
        {"id": "asia_east", "timezone_offset_h": 8, "mean_price": 0.0145, "mean_temp": 23.0},
    ],
    "power_models": {},
    "pricing": {
        "scheme": "cloudsigma",
        "mode": "perceived_performance",
        "overrides": {},
    },
    "fleet": {
        "n_pms": 200,
        "cores_range": [1, 4],
        "ram_gb_range": [16, 32],
    },
    "workload": {
        "n_vms": 200,
        "beta_rate": 5.0,
        "fixed_beta": None,
        "vcpu_choices": [1, 2],
        "ram_gb_range": [8, 16],
        "cpu_usage_csv": None,
    },
    "scenario": {
        "architecture": "arm",
        "controller": "bcffs",
        "trace_mode": "rtep",
        "horizon_steps": 168,
        "step_h": 1.0,
        "seed": 42,
        "underutil_threshold": 0.3,
        "prune": True,
        "sort_weights": {
            "pm_cores": 0.5,
            "pm_ram": 0.5,
            "vm_vcpus": 0.5,
            "vm_ram": 0.5,
        },
    },
    "traces": {
        "price_amplitude_frac": 0.3,
        "price_noise_frac": 0.05,
        "price_floor_frac": 0.2,
        "temp_amplitude_c": 6.0,
        "temp_noise_c": 1.0,
        "price_peak_local_h": 16.0,
        "temp_peak_local_h": 15.0,
    },
}

_LOCATION_KEYS = {"id", "timezone_offset_h", "mean_price", "mean_temp", "trace_file"}
_PROFILE_KEYS = {
    "f_min_ghz",
    "f_max_ghz",
    "f_step_ghz",
    "coefficients",
    "gamma",
    "core_count_max",
    "scale_arm_to_peak_w",
}
_COEFF_KEYS = {"p00", "p10", "p01", "p20", "p11", "p30", "p21"}
_GAMMA_KEYS = {"g0", "g1", "g2"}


def _check_keys(section: dict, allowed: set, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key {path}.{key!r}")


def _merge(base: dict, override: dict, path: str) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        # non-empty dict defaults merge key-wise; open-ended sections
        # (power_models, pricing.overrides) and lists are replaced wholesale
        if isinstance(base[key], dict) and base[key] and isinstance(value, dict):
            merged[key] = _merge(base[key], value, here)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: str | None = None) -> dict:
    """Load and validate a config file, merged over the defaults."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                user = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if user is None:
            user = {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        config = _merge(config, user, "")
    validate_config(config)
    return config


def validate_config(config: dict) -> None:
    """Check structure, value ranges and cross-references."""
    _check_keys(config, set(DEFAULT_CONFIG), "config")
    locations = config["locations"]
    if not isinstance(locations, list) or not locations:
        raise ConfigError("locations must be a non-empty list")
    seen = set()
    for i, loc in enumerate(locations):
        if not isinstance(loc, dict):
            raise ConfigError(f"locations[{i}] must be a mapping")
        _check_keys(loc, _LOCATION_KEYS, f"locations[{i}]")
        for required in ("id", "timezone_offset_h", "mean_price", "mean_temp"):
            if required not in loc:
                raise ConfigError(f"locations[{i}] missing key {required!r}")
        if loc["id"] in seen:
            raise ConfigError(f"duplicate location id {loc['id']!r}")
        seen.add(loc["id"])
    for arch, profile in config["power_models"].items():
        if not isinstance(profile, dict):
            raise ConfigError(f"power_models.{arch} must be a mapping")
        _check_keys(profile, _PROFILE_KEYS, f"power_models.{arch}")
        if "scale_arm_to_peak_w" not in profile:
            for required in ("f_min_ghz", "f_max_ghz", "f_step_ghz", "coefficients", "gamma"):
                if required not in profile:
                    raise ConfigError(f"power_models.{arch} missing key {required!r}")
            _check_keys(profile["coefficients"], _COEFF_KEYS, f"power_models.{arch}.coefficients")
            if set(profile["coefficients"]) != _COEFF_KEYS:
                raise ConfigError(f"power_models.{arch}.coefficients needs all of {sorted(_COEFF_KEYS)}")
            _check_keys(profile["gamma"], _GAMMA_KEYS, f"power_models.{arch}.gamma")
            if set(profile["gamma"]) != _GAMMA_KEYS:
                raise ConfigError(f"power_models.{arch}.gamma needs all of {sorted(_GAMMA_KEYS)}")
    pricing = config["pricing"]
    if pricing["scheme"] not in PRESETS:
        raise ConfigError(
            f"pricing.scheme {pricing['scheme']!r} unknown; have {sorted(PRESETS)}"
        )
    allowed_overrides = {"c_base", "c_cpu", "c_ram", "ramsize_base", "arch_scale"}
    _check_keys(pricing["overrides"], allowed_overrides, "pricing.overrides")
    scn = config["scenario"]
    if scn["controller"] not in ("bfd", "bcf", "bcffs"):
        raise ConfigError(f"scenario.controller {scn['controller']!r} unknown")
    architecture = scn["architecture"]
    if architecture not in ("arm", "intel") and architecture not in config["power_models"]:
        raise ConfigError(
            f"scenario.architecture {architecture!r} has no power model profile"
        )
    for loc in locations:
        trace_file = loc.get("trace_file")
        if trace_file is not None and not os.path.exists(trace_file):
            raise ConfigError(f"trace file not found: {trace_file}")
    csv_path = config["workload"]["cpu_usage_csv"]
    if csv_path is not None and not os.path.exists(csv_path):
        raise ConfigError(f"cpu usage file not found: {csv_path}")


def _build_profile(architecture: str, config: dict) -> PowerModel:
    profiles = config["power_models"]
    if architecture in profiles:
        profile = profiles[architecture]
        if "scale_arm_to_peak_w" in profile:
            base = intel_profile(float(profile["scale_arm_to_peak_w"]))
            return PowerModel(
                architecture, base.ladder, base.coeffs, base.ratio,
                core_count_max=base.core_count_max, synthetic=True,
            )
        ladder = FrequencyLadder(
            profile["f_min_ghz"], profile["f_max_ghz"], profile["f_step_ghz"]
        )
        coeffs = PowerCoefficients(**{k: float(v) for k, v in profile["coefficients"].items()})
        ratio = RatioCoefficients(**{k: float(v) for k, v in profile["gamma"].items()})
        return PowerModel(
            architecture, ladder, coeffs, ratio,
            core_count_max=int(profile.get("core_count_max", 4)),
        )
    if architecture == "arm":
        return arm_profile()
    if architecture == "intel":
        return intel_profile()
    raise ConfigError(f"no power model profile for {architecture!r}")


def build_locations(config: dict) -> tuple[list[Location], dict[str, str]]:
    """Locations plus the map of ids to user-supplied trace files."""
    locations = []
    trace_files = {}
    for loc in config["locations"]:
        locations.append(
            Location(
                id=loc["id"],
                timezone_offset_h=int(loc["timezone_offset_h"]),
                mean_price=float(loc["mean_price"]),
                mean_temp=float(loc["mean_temp"]),
            )
        )
        if loc.get("trace_file") is not None:
            trace_files[loc["id"]] = loc["trace_file"]
    return locations, trace_files


def build_scenario(config: dict, **overrides) -> Scenario:
    """Assemble a Scenario from a validated config.

    ``overrides`` accepts scenario-section keys (controller, seed, ...)
    coming from CLI flags; they take precedence over the file.
    """
    scn = dict(config["scenario"])
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in scn:
            raise ConfigError(f"unknown scenario override {key!r}")
        scn[key] = value
    architecture = scn["architecture"]
    model = _build_profile(architecture, config)
    pricing_cfg = config["pricing"]
    scheme = preset_scheme(
        pricing_cfg["scheme"],
        mode=pricing_cfg["mode"],
        **pricing_cfg["overrides"],
    )
    if "arch_scale" not in pricing_cfg["overrides"]:
        scheme = for_architecture(scheme, architecture)
    locations, trace_files = build_locations(config)
    traces = None
    if trace_files:
        loaded = []
        for loc in locations:
            path = trace_files.get(loc.id)
            if path is None:
                raise ConfigError(
                    f"location {loc.id!r} has no trace_file while others do; "
                    "supply traces for all locations or none"
                )
            loaded.append(load_trace(path, location_id=loc.id))
        traces = tuple(loaded)
    beta_pool = None
    if config["workload"]["cpu_usage_csv"] is not None:
        beta_pool = tuple(load_cpu_usage_betas(config["workload"]["cpu_usage_csv"]))
    fleet_cfg = config["fleet"]
    wl = config["workload"]
    return Scenario(
        locations=tuple(locations),
        model=model,
        scheme=scheme,
        controller=scn["controller"],
        n_pms=int(fleet_cfg["n_pms"]),
        n_vms=int(wl["n_vms"]),
        horizon_steps=int(scn["horizon_steps"]),
        step_h=float(scn["step_h"]),
        seed=int(scn["seed"]),
        trace_mode=scn["trace_mode"],
        underutil_threshold=float(scn["underutil_threshold"]),
        prune=bool(scn["prune"]),
        sort_weights=SortWeights(
            **{k: float(v) for k, v in scn["sort_weights"].items()}
        ),
        beta_rate=float(wl["beta_rate"]),
        fixed_beta=None if wl["fixed_beta"] is None else float(wl["fixed_beta"]),
        pm_cores_range=tuple(fleet_cfg["cores_range"]),
        pm_ram_range=tuple(fleet_cfg["ram_gb_range"]),
        vm_vcpu_choices=tuple(wl["vcpu_choices"]),
        vm_ram_range=tuple(wl["ram_gb_range"]),
        trace_params=TraceParams(**config["traces"]),
        traces=traces,
        beta_pool=beta_pool,
    )


def output_dir(config: dict, cli_value: str | None = None) -> str:
    """Output directory: CLI flag beats env var beats config file."""
    if cli_value:
        return cli_value
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return env
    return config["output_dir"]
