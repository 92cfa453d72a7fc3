import pytest

from geocloudsim.config import build_scenario, load_config
from geocloudsim.power import arm_profile, intel_profile


@pytest.fixture(scope="session")
def arm():
    return arm_profile()


@pytest.fixture(scope="session")
def intel():
    return intel_profile()


@pytest.fixture(scope="session")
def default_config():
    return load_config(None)


@pytest.fixture()
def small_scenario(default_config):
    """A fast desk scenario: 30 PMs / 30 VMs / 24 steps."""

    def make(**overrides):
        from dataclasses import replace

        scenario = build_scenario(default_config, seed=overrides.pop("seed", 7))
        fields = {"n_pms": 30, "n_vms": 30, "horizon_steps": 24}
        fields.update(overrides)
        return replace(scenario, **fields)

    return make
