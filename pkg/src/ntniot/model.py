"""Domain types, parameter catalogs and seeded scenario generation."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid or inconsistent configuration."""


class TechId(str, Enum):
    LORA = "lora"
    LORA_PLUS = "loraplus"
    NBIOT = "nbiot"
    SIGFOX = "sigfox"

    @property
    def is_lora(self) -> bool:
        return self in (TechId.LORA, TechId.LORA_PLUS)


class PlatformKind(str, Enum):
    TG = "tg"
    UAV = "uav"
    HAP = "hap"
    LEO = "leo"
    HAP_RELAY_LEO = "hap-relay-leo"


PLATFORM_ALTITUDE_KM = {
    PlatformKind.TG: 0.0,
    PlatformKind.UAV: 0.6,
    PlatformKind.HAP: 20.0,
    PlatformKind.LEO: 600.0,
    PlatformKind.HAP_RELAY_LEO: 20.0,
}


@dataclass(frozen=True)
class SensitivityRule:
    """Receiver sensitivity as a function of the link mode.

    ``lora_sf``: base + step * (SF - 7).
    ``nbiot_rep``: base + step * log2(R).
    ``constant``: base.
    """

    kind: str
    base_dbm: float
    step_db: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("lora_sf", "nbiot_rep", "constant"):
            raise ConfigurationError(f"unknown sensitivity rule {self.kind!r}")


@dataclass(frozen=True)
class TechnologyProfile:
    tech_id: TechId
    tx_power_dbm: float
    carrier_freq_hz: float
    bandwidth_hz: float
    tx_antenna_gain_db: float
    rx_antenna_gain_db: float
    noise_figure_db: float
    max_payload: int
    sensitivity_rule: SensitivityRule
    # uplink PHY rate, used by the NB-IoT slot grid and the SigFox replica length
    data_rate_bps: float | None = None
    # SigFox only: width of one ultra-narrowband micro-channel
    micro_channel_hz: float | None = None

    def __post_init__(self) -> None:
        if self.bandwidth_hz <= 0:
            raise ConfigurationError("bandwidth must be positive")
        if self.max_payload < 1:
            raise ConfigurationError("max_payload must be >= 1")

    @property
    def eirp_plus_rx_gain_db(self) -> float:
        return self.tx_power_dbm + self.tx_antenna_gain_db + self.rx_antenna_gain_db

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tech_id"] = self.tech_id.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TechnologyProfile:
        d = dict(d)
        d["tech_id"] = TechId(d["tech_id"])
        d["sensitivity_rule"] = SensitivityRule(**d["sensitivity_rule"])
        return cls(**d)


_LORA_RULE = SensitivityRule("lora_sf", -127.0, -2.5)
_NBIOT_RULE = SensitivityRule("nbiot_rep", -102.2, -2.8)
_SIGFOX_RULE = SensitivityRule("constant", -140.0)


def default_profile(tech_id: TechId | str) -> TechnologyProfile:
    """Return the catalog radio parameters for a technology (LoRa+ shares LoRa's)."""
    tech_id = TechId(tech_id)
    if tech_id.is_lora:
        return TechnologyProfile(
            tech_id=tech_id,
            tx_power_dbm=14.0,
            carrier_freq_hz=0.868e9,
            bandwidth_hz=0.125e6,
            tx_antenna_gain_db=2.15,
            rx_antenna_gain_db=8.0,
            noise_figure_db=3.0,
            max_payload=12,
            sensitivity_rule=_LORA_RULE,
        )
    if tech_id is TechId.NBIOT:
        return TechnologyProfile(
            tech_id=tech_id,
            tx_power_dbm=23.0,
            carrier_freq_hz=0.900e9,
            bandwidth_hz=0.18e6,
            tx_antenna_gain_db=0.0,
            rx_antenna_gain_db=8.0,
            noise_figure_db=3.0,
            max_payload=12,
            sensitivity_rule=_NBIOT_RULE,
            data_rate_bps=90e3,
        )
    return TechnologyProfile(
        tech_id=tech_id,
        tx_power_dbm=14.0,
        carrier_freq_hz=0.868e9,
        bandwidth_hz=0.2e6,
        tx_antenna_gain_db=2.15,
        rx_antenna_gain_db=8.0,
        noise_figure_db=3.0,
        max_payload=12,
        sensitivity_rule=_SIGFOX_RULE,
        data_rate_bps=100.0,
        micro_channel_hz=100.0,
    )


@dataclass(frozen=True)
class RelayParams:
    """HAP-to-LEO backhaul leg of the relay topology."""

    tx_power_dbm: float = 52.0
    carrier_freq_hz: float = 38e9
    bandwidth_hz: float = 400e6
    tx_antenna_gain_db: float = 37.9
    rx_antenna_gain_db: float = 0.0
    noise_figure_db: float = 0.0
    upstream_altitude_km: float = 600.0


@dataclass(frozen=True)
class Platform:
    kind: PlatformKind
    altitude_km: float
    position: tuple[float, float] = (0.0, 0.0)
    # None -> use the technology profile's receive gain
    rx_antenna_gain_db: float | None = None
    relay_params: RelayParams | None = None
    # parallel receive paths, each on its own uplink channel
    rx_channels: int = 1

    def __post_init__(self) -> None:
        if self.kind is not PlatformKind.HAP_RELAY_LEO and not math.isclose(
            self.altitude_km, PLATFORM_ALTITUDE_KM[self.kind]
        ):
            raise ConfigurationError(
                f"{self.kind.value} altitude must be {PLATFORM_ALTITUDE_KM[self.kind]} km"
            )
        if (self.relay_params is not None) != (self.kind is PlatformKind.HAP_RELAY_LEO):
            raise ConfigurationError("relay_params present iff kind is hap-relay-leo")
        if self.rx_channels < 1:
            raise ConfigurationError("rx_channels must be >= 1")

    def rx_gain(self, profile: TechnologyProfile) -> float:
        if self.rx_antenna_gain_db is None:
            return profile.rx_antenna_gain_db
        return self.rx_antenna_gain_db


def make_platform(kind: PlatformKind | str, rx_channels: int = 1, **kw) -> Platform:
    kind = PlatformKind(kind)
    relay = RelayParams() if kind is PlatformKind.HAP_RELAY_LEO else None
    return Platform(
        kind=kind,
        altitude_km=PLATFORM_ALTITUDE_KM[kind],
        relay_params=relay,
        rx_channels=rx_channels,
        **kw,
    )


@dataclass(frozen=True)
class FadingParams:
    nakagami_m0: float = 15.0
    sr_omega: float = 1.29
    sr_b0: float = 0.158
    sr_m: float = 19.4
    extra_loss_los: float = 0.0154
    extra_loss_nlos: float = 18.4615

    def __post_init__(self) -> None:
        for name in ("nakagami_m0", "sr_omega", "sr_b0", "sr_m"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.extra_loss_los < 0 or self.extra_loss_nlos < 0:
            raise ConfigurationError("extra losses must be non-negative")

    @property
    def sr_mean_power(self) -> float:
        return 2 * self.sr_b0 + self.sr_omega


@dataclass(frozen=True)
class ScenarioConfig:
    aoi_radius_km: float = 5.0
    id_density: float = 10.0
    tg_density: float = 1.0
    arrival_rate: float = 1 / 1800
    horizon_s: float = 3600.0
    ntn_platforms: tuple[str, ...] = ()
    # fixed counts bypass Poisson sampling of the device/gateway populations
    fixed_counts: bool = False
    n_devices: int | None = None
    n_gateways: int | None = None
    tg_rx_channels: int = 1
    ntn_rx_channels: int = 1

    def __post_init__(self) -> None:
        if not self.aoi_radius_km > 0:
            raise ConfigurationError("aoi radius must be positive")
        if self.id_density < 0 or self.tg_density < 0:
            raise ConfigurationError("densities must be non-negative")
        if self.arrival_rate < 0:
            raise ConfigurationError("arrival rate must be non-negative")
        if not self.horizon_s > 0:
            raise ConfigurationError("horizon must be positive")

    @property
    def area_km2(self) -> float:
        return math.pi * self.aoi_radius_km**2

    def with_(self, **changes) -> ScenarioConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class Scenario:
    aoi_radius_km: float
    id_density: float
    tg_density: float
    device_positions: np.ndarray
    gateway_positions: np.ndarray
    ntn_platforms: tuple[Platform, ...]
    arrival_rate: float
    horizon_s: float
    rng_seed: int
    tg_rx_channels: int = 1

    @property
    def n_devices(self) -> int:
        return len(self.device_positions)

    @property
    def n_gateways(self) -> int:
        return len(self.gateway_positions)

    def platform(self, kind: PlatformKind) -> Platform:
        for p in self.ntn_platforms:
            if p.kind is kind:
                return p
        raise ConfigurationError(f"scenario has no {kind.value} platform")


def uniform_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """n i.i.d. points uniform on a disk centred at the origin."""
    rho = radius * np.sqrt(rng.random(n))
    theta = rng.uniform(0.0, 2 * np.pi, n)
    pts = np.column_stack((rho * np.cos(theta), rho * np.sin(theta)))
    pts.setflags(write=False)
    return pts


def build_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    rng = np.random.default_rng(seed)
    area = config.area_km2
    if config.fixed_counts:
        n_dev = config.n_devices if config.n_devices is not None else round(config.id_density * area)
        n_gw = config.n_gateways if config.n_gateways is not None else round(config.tg_density * area)
    else:
        n_dev = config.n_devices if config.n_devices is not None else rng.poisson(config.id_density * area)
        n_gw = config.n_gateways if config.n_gateways is not None else rng.poisson(config.tg_density * area)
    devices = uniform_disk(rng, int(n_dev), config.aoi_radius_km)
    gateways = uniform_disk(rng, int(n_gw), config.aoi_radius_km)
    platforms = tuple(make_platform(k, rx_channels=config.ntn_rx_channels) for k in config.ntn_platforms)
    return Scenario(
        aoi_radius_km=config.aoi_radius_km,
        id_density=config.id_density,
        tg_density=config.tg_density,
        device_positions=devices,
        gateway_positions=gateways,
        ntn_platforms=platforms,
        arrival_rate=config.arrival_rate,
        horizon_s=config.horizon_s,
        rng_seed=seed,
        tg_rx_channels=config.tg_rx_channels,
    )
