"""Geo-distributed cloud simulator with multi-core power models,
geotemporal energy cost accounting, performance-based VM pricing and
frequency-scaling cloud controllers."""

from .power import (
    FrequencyLadder,
    PowerCoefficients,
    PowerModel,
    RatioCoefficients,
    active_power,
    arm_profile,
    fit_power_surface,
    freq_to_step,
    idle_power,
    intel_profile,
    pm_power,
    pm_utilization,
    power_ratio,
)
from .geotemporal import (
    GeotemporalTrace,
    Location,
    TraceParams,
    energy_cost,
    load_trace,
    ppue,
    synth_trace,
    total_power,
)
from .pricing import (
    PricingScheme,
    effective_frequency,
    pm_revenue,
    preset_scheme,
    vm_price,
)
from .workload import (
    BetaDistribution,
    PmSpec,
    VmSpec,
    gen_fleet,
    gen_requests,
    sample_beta,
)
from .controllers import (
    Action,
    CloudState,
    bcf_migration_stage,
    bcffs_frequency_stage,
    bfd_stage,
    pm_sort_key,
    replay,
)
from .simulator import (
    ComparisonReport,
    ConfigError,
    Scenario,
    SimulationReport,
    beta_freq_histogram,
    compare,
    run,
)

__version__ = "0.1.0"
