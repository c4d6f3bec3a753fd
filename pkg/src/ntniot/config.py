"""Flat INI configuration, one section per module; unknown sections or keys are errors.

Example::

    [scenario]
    aoi_radius_km = 0.35
    ntn_platforms = uav, leo

    [technology]
    tech = lora
    tx_power_dbm = 14

    [channel]
    los_model = los
    atmospheric_g2leo = 0.0

    [fading]
    nakagami_m0 = 15

    [phymac]
    capture_db = 6
    sigfox_micro_channels = 1

    [sim]
    drops = 25
    seed = 0

    [offload]
    arrival_rate = 0.0027777777777777775
    payload_bytes = 50
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

from .channel import ChannelParams, LinkKind
from .model import ConfigurationError, FadingParams, ScenarioConfig, TechId, TechnologyProfile, default_profile
from .offload import OffloadSettings
from .phymac import MacParams
from .sim import SimSettings

_PROFILE_KEYS = (
    "tx_power_dbm",
    "carrier_freq_hz",
    "bandwidth_hz",
    "tx_antenna_gain_db",
    "rx_antenna_gain_db",
    "noise_figure_db",
    "max_payload",
)


@dataclass(frozen=True)
class RunOptions:
    drops: int = 25
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class Config:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    tech: TechId | None = None
    profile_overrides: dict = field(default_factory=dict)
    sim: SimSettings = field(default_factory=SimSettings)
    offload: OffloadSettings = field(default_factory=OffloadSettings)
    run: RunOptions = field(default_factory=RunOptions)

    def profile(self, tech: TechId | str) -> TechnologyProfile:
        return replace(default_profile(tech), **self.profile_overrides)


def _coerce(name: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if default is None:
            if raw.lower() in ("", "none"):
                return None
            try:
                return int(raw)
            except ValueError:
                return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {name}: {raw!r}") from exc


def _apply(obj, section: configparser.SectionProxy, skip=()):
    names = {f.name: f for f in dataclasses.fields(obj) if f.name not in skip}
    changes = {}
    for key, raw in section.items():
        if key not in names:
            raise ConfigurationError(f"unknown key [{section.name}] {key}")
        changes[key] = _coerce(key, raw, getattr(obj, key))
    return replace(obj, **changes)


def parse_config(text: str) -> Config:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    known = {"scenario", "technology", "channel", "fading", "phymac", "sim", "offload"}
    for name in cp.sections():
        if name not in known:
            raise ConfigurationError(f"unknown section [{name}]")

    scenario = _apply(ScenarioConfig(), cp["scenario"]) if cp.has_section("scenario") else ScenarioConfig()

    tech, overrides = None, {}
    if cp.has_section("technology"):
        base = default_profile(TechId.LORA)
        for key, raw in cp["technology"].items():
            if key == "tech":
                try:
                    tech = TechId(raw.strip())
                except ValueError as exc:
                    raise ConfigurationError(f"unknown technology {raw!r}") from exc
            elif key in _PROFILE_KEYS:
                overrides[key] = _coerce(key, raw, getattr(base, key))
            else:
                raise ConfigurationError(f"unknown key [technology] {key}")

    fading = _apply(FadingParams(), cp["fading"]) if cp.has_section("fading") else FadingParams()
    channel = ChannelParams(fading=fading)
    if cp.has_section("channel"):
        atm = {}
        plain = configparser.ConfigParser()
        plain.add_section("channel")
        for key, raw in cp["channel"].items():
            if key.startswith("atmospheric_"):
                kind = key[len("atmospheric_") :]
                if kind not in {k.value for k in LinkKind}:
                    raise ConfigurationError(f"unknown link kind in {key}")
                atm[kind] = _coerce(key, raw, 0.0)
            else:
                plain["channel"][key] = raw
        channel = _apply(channel, plain["channel"], skip=("fading", "atmospheric_db"))
        channel = replace(channel, atmospheric_db=atm)
        if channel.los_model not in ("los", "sigmoid"):
            raise ConfigurationError(f"unknown los_model {channel.los_model!r}")

    mac = _apply(MacParams(), cp["phymac"]) if cp.has_section("phymac") else MacParams()

    run = RunOptions()
    sim = SimSettings(channel=channel, mac=mac)
    if cp.has_section("sim"):
        run_keys = {f.name for f in dataclasses.fields(RunOptions)}
        sim_sec = configparser.ConfigParser()
        sim_sec.add_section("sim")
        run_sec = configparser.ConfigParser()
        run_sec.add_section("sim")
        for key, raw in cp["sim"].items():
            (run_sec if key in run_keys else sim_sec)["sim"][key] = raw
        sim = _apply(sim, sim_sec["sim"], skip=("channel", "mac"))
        run = _apply(run, run_sec["sim"])

    offload = OffloadSettings(channel=channel)
    if cp.has_section("offload"):
        offload = _apply(offload, cp["offload"], skip=("channel",))
    return Config(scenario, tech, overrides, sim, offload, run)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
