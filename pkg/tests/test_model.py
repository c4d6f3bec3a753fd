import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ntniot.model import (
    ConfigurationError,
    FadingParams,
    Platform,
    PlatformKind,
    RelayParams,
    ScenarioConfig,
    TechId,
    TechnologyProfile,
    build_scenario,
    default_profile,
    make_platform,
    uniform_disk,
)


def test_nbiot_profile_matches_catalog():
    p = default_profile("nbiot")
    assert (p.tx_power_dbm, p.carrier_freq_hz, p.bandwidth_hz) == (23.0, 0.9e9, 0.18e6)
    assert p.noise_figure_db == 3.0


def test_sigfox_profile_matches_catalog():
    p = default_profile(TechId.SIGFOX)
    assert (p.tx_power_dbm, p.carrier_freq_hz) == (14.0, 0.868e9)
    assert p.bandwidth_hz == 0.2e6 and p.micro_channel_hz == 100.0
    assert p.max_payload == 12


def test_lora_profile_matches_catalog():
    p = default_profile("lora")
    assert (p.tx_antenna_gain_db, p.rx_antenna_gain_db, p.noise_figure_db) == (2.15, 8.0, 3.0)
    assert (p.tx_power_dbm, p.carrier_freq_hz, p.bandwidth_hz) == (14.0, 0.868e9, 0.125e6)


def test_loraplus_shares_lora_column():
    a, b = default_profile("lora"), default_profile("loraplus")
    assert a.to_dict() | {"tech_id": "x"} == b.to_dict() | {"tech_id": "x"}


@pytest.mark.parametrize("tech", list(TechId))
def test_profile_round_trip(tech):
    p = default_profile(tech)
    assert TechnologyProfile.from_dict(p.to_dict()) == p


def test_profile_validation():
    p = default_profile("lora")
    with pytest.raises(ConfigurationError):
        TechnologyProfile(**{**p.__dict__, "bandwidth_hz": 0.0})
    with pytest.raises(ConfigurationError):
        TechnologyProfile(**{**p.__dict__, "max_payload": 0})


def test_platform_altitudes_and_relay():
    assert make_platform("tg").altitude_km == 0
    assert make_platform("uav").altitude_km == 0.6
    assert make_platform("hap").altitude_km == 20
    assert make_platform("leo").altitude_km == 600
    relay = make_platform("hap-relay-leo").relay_params
    assert relay == RelayParams()
    assert (relay.tx_power_dbm, relay.carrier_freq_hz, relay.bandwidth_hz, relay.tx_antenna_gain_db) == (
        52.0,
        38e9,
        400e6,
        37.9,
    )
    with pytest.raises(ConfigurationError):
        Platform(PlatformKind.LEO, 500.0)
    with pytest.raises(ConfigurationError):
        Platform(PlatformKind.HAP, 20.0, relay_params=RelayParams())
    with pytest.raises(ConfigurationError):
        Platform(PlatformKind.HAP_RELAY_LEO, 20.0)


def test_fading_defaults_and_validation():
    f = FadingParams()
    assert (f.nakagami_m0, f.sr_omega, f.sr_b0, f.sr_m) == (15.0, 1.29, 0.158, 19.4)
    assert (f.extra_loss_los, f.extra_loss_nlos) == (0.0154, 18.4615)
    with pytest.raises(ConfigurationError):
        FadingParams(sr_m=0.0)
    with pytest.raises(ConfigurationError):
        FadingParams(extra_loss_los=-1.0)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ScenarioConfig(aoi_radius_km=0.0)
    with pytest.raises(ConfigurationError):
        ScenarioConfig(id_density=-1.0)


def test_zero_density_gives_no_devices():
    s = build_scenario(ScenarioConfig(id_density=0.0, aoi_radius_km=3.0), 1)
    assert s.n_devices == 0


def test_poisson_device_count_mean():
    cfg = ScenarioConfig(aoi_radius_km=5.0, id_density=50.0, tg_density=0.0)
    counts = [build_scenario(cfg, seed).n_devices for seed in range(100)]
    expected = 50 * math.pi * 25
    assert abs(np.mean(counts) / expected - 1) < 0.02


def test_fig3_setup_counts():
    cfg = ScenarioConfig(aoi_radius_km=10.0, id_density=10.0, tg_density=1.0)
    s = build_scenario(cfg, 3)
    area = math.pi * 100
    assert abs(s.n_devices - 10 * area) < 5 * math.sqrt(10 * area)
    assert abs(s.n_gateways - area) < 5 * math.sqrt(area)


def test_fixed_counts_switch():
    cfg = ScenarioConfig(aoi_radius_km=2.0, id_density=10.0, tg_density=1.0, fixed_counts=True)
    s = build_scenario(cfg, 0)
    assert s.n_devices == round(10 * math.pi * 4)
    assert s.n_gateways == round(math.pi * 4)
    assert build_scenario(cfg.with_(n_devices=7), 0).n_devices == 7


@pytest.mark.property
@given(st.integers(0, 2**63 - 1), st.floats(0.1, 30.0))
def test_scenario_reproducible_and_inside_disk(seed, radius):
    cfg = ScenarioConfig(aoi_radius_km=radius, id_density=2.0, tg_density=0.5, ntn_platforms=("leo",))
    a, b = build_scenario(cfg, seed), build_scenario(cfg, seed)
    assert np.array_equal(a.device_positions, b.device_positions)
    assert np.array_equal(a.gateway_positions, b.gateway_positions)
    for pts in (a.device_positions, a.gateway_positions):
        assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= radius * (1 + 1e-12))
    assert a.platform(PlatformKind.LEO).altitude_km == 600


def test_scenario_is_immutable():
    s = build_scenario(ScenarioConfig(aoi_radius_km=1.0), 0)
    with pytest.raises(ValueError):
        s.device_positions[0, 0] = 1.0


@pytest.mark.property
def test_uniform_disk_chi_square():
    rng = np.random.default_rng(7)
    pts = uniform_disk(rng, 200_000, 3.0)
    r = np.hypot(pts[:, 0], pts[:, 1]) / 3.0
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    # equal-area annuli and equal angular sectors
    r_bin = np.minimum((r**2 * 5).astype(int), 4)
    t_bin = np.minimum(((theta + np.pi) / (2 * np.pi) * 8).astype(int), 7)
    counts = np.bincount(r_bin * 8 + t_bin, minlength=40)
    assert stats.chisquare(counts).pvalue > 0.01


def test_missing_platform_is_configuration_error():
    s = build_scenario(ScenarioConfig(aoi_radius_km=1.0), 0)
    with pytest.raises(ConfigurationError):
        s.platform(PlatformKind.UAV)
