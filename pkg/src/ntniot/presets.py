"""Figure and table reproduction presets and the sweep runners behind them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelParams
from .coverage import max_range, min_platforms
from .model import ConfigurationError, ScenarioConfig, TechId, build_scenario, default_profile, make_platform
from .offload import OffloadMode, OffloadSettings, evaluate_offload_scenario
from .sim import SimSettings, drop_seeds, run_simulation


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    kind: str  # simulate | coverage | platforms | offload
    description: str
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    techs: tuple[str, ...] = ()
    targets: tuple[str, ...] = ()  # topologies or platform kinds
    sweep: str = ""
    values: tuple[float, ...] = ()
    sf_mins: tuple[int, ...] = (7, 9, 11)
    drops: int = 25


FIG2_DEVICES = (1000, 2000, 5000, 10000, 20000, 50000, 100000)
FIG4_RADII = tuple(float(f"{10 ** (k / 10):.6g}") for k in range(0, 32))

PRESETS = {
    "fig2": ExperimentPreset(
        "fig2",
        "simulate",
        "goodput and success probability vs device count, r = 0.35 km",
        ScenarioConfig(aoi_radius_km=0.35, tg_density=0.0),
        techs=("lora", "loraplus", "nbiot", "sigfox"),
        targets=("id-u", "id-h", "id-l"),
        sweep="n_devices",
        values=FIG2_DEVICES,
        drops=3,
    ),
    "fig3": ExperimentPreset(
        "fig3",
        "simulate",
        "LoRa success probability vs AoI radius for ID-TG, ID-L and ID-H-L",
        # NTN receivers demodulate 16 uplink channels in parallel, like a standard LoRa gateway
        ScenarioConfig(tg_density=1.0, id_density=10.0, ntn_rx_channels=16),
        techs=("lora",),
        targets=("id-tg", "id-l", "id-h-l"),
        sweep="aoi_radius_km",
        values=(5.0, 7.5, 10.0, 12.5, 15.0),
        drops=25,
    ),
    "fig4": ExperimentPreset(
        "fig4",
        "platforms",
        "minimum platform count vs AoI radius",
        techs=("lora", "nbiot"),
        targets=("tg", "uav", "hap", "leo"),
        sweep="aoi_radius_km",
        values=FIG4_RADII,
    ),
    "fig5a": ExperimentPreset(
        "fig5a",
        "offload",
        "offloading success vs TG density, rho_ID = 50",
        ScenarioConfig(aoi_radius_km=5.0, id_density=50.0, ntn_platforms=("leo",)),
        sweep="tg_density",
        values=(0.1, 0.2, 0.3, 0.4, 0.5),
        drops=5,
    ),
    "fig5b": ExperimentPreset(
        "fig5b",
        "offload",
        "offloading success vs ID density, rho_TG = 0.1",
        ScenarioConfig(aoi_radius_km=5.0, tg_density=0.1, ntn_platforms=("leo",)),
        sweep="id_density",
        values=(10.0, 25.0, 50.0, 75.0, 100.0),
        drops=5,
    ),
    "table3": ExperimentPreset(
        "table3",
        "coverage",
        "maximum range and minimum elevation per technology and platform",
        techs=("lora", "nbiot"),
        targets=("tg", "uav", "hap", "leo"),
    ),
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def _fmt(x: float, digits: int = 6) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return f"{x:.{digits}g}" if isinstance(x, float) else str(x)


def simulate_rows(
    base: ScenarioConfig,
    techs,
    topologies,
    sweep: str,
    values,
    drops: int,
    seed: int,
    settings: SimSettings = SimSettings(),
    workers: int = 1,
    profiles: dict | None = None,
) -> list[dict]:
    rows = []
    for tech in techs:
        for topo in topologies:
            for v in values:
                if sweep == "n_devices":
                    cfg = base.with_(n_devices=int(v))
                elif sweep:
                    cfg = base.with_(**{sweep: float(v)})
                else:
                    cfg = base
                prof = (profiles or {}).get(tech)
                res = run_simulation(cfg, tech, topo, drops, seed, settings, workers, prof)
                rows.append(
                    {
                        "tech": tech,
                        "topology": topo,
                        "sweep": sweep or "none",
                        "sweep_value": _fmt(v) if sweep else "",
                        "drops": drops,
                        "goodput_bytes_per_h": _fmt(res.goodput),
                        "offered_bytes_per_h": _fmt(res.offered_load),
                        "success_probability": _fmt(res.success_probability),
                        "ci_halfwidth": _fmt(res.confidence_halfwidth),
                    }
                )
    return rows


def coverage_rows(techs, platforms, params: ChannelParams = ChannelParams(), profiles: dict | None = None) -> list[dict]:
    rows = []
    for kind in platforms:
        for tech in techs:
            prof = (profiles or {}).get(tech) or default_profile(tech)
            res = max_range(prof, make_platform(kind), params)
            rows.append(
                {
                    "platform": kind,
                    "tech": tech,
                    "range_km": _fmt(round(res.max_range_km, 3)),
                    "elev_deg": _fmt(round(res.min_elevation_deg, 3)),
                    "margin_db": _fmt(round(res.budget_margin_db, 4)),
                    "note": res.diagnostic,
                }
            )
    return rows


def platform_rows(techs, platforms, radii, params: ChannelParams = ChannelParams(), profiles: dict | None = None) -> list[dict]:
    rows = []
    for kind in platforms:
        for tech in techs:
            prof = (profiles or {}).get(tech) or default_profile(tech)
            rc = max_range(prof, make_platform(kind), params).max_range_km
            for r in radii:
                count = min_platforms(r, rc) if rc > 0 else ""
                rows.append(
                    {
                        "platform": kind,
                        "tech": tech,
                        "r_aoi_km": _fmt(float(r)),
                        "coverage_radius_km": _fmt(round(rc, 3)),
                        "platform_count": count,
                    }
                )
    return rows


def offload_rows(
    base: ScenarioConfig,
    sweep: str,
    values,
    sf_mins,
    drops: int,
    seed: int,
    settings: OffloadSettings = OffloadSettings(),
    modes=(OffloadMode.STANDALONE_TG, OffloadMode.LEO_OFFLOAD),
) -> list[dict]:
    """Mean success per sweep point, averaged over drops that contain at least one TG."""
    rows = []
    modes = [OffloadMode(m) for m in modes]
    for v in values:
        cfg = base.with_(**{sweep: float(v)}) if sweep else base
        if "leo" not in cfg.ntn_platforms:
            cfg = cfg.with_(ntn_platforms=tuple(cfg.ntn_platforms) + ("leo",))
        scenarios = []
        for i in range(drops):
            scen = build_scenario(cfg, drop_seeds(seed, i)[0])
            if scen.n_gateways > 0:
                scenarios.append(scen)
        if not scenarios:
            raise ConfigurationError(f"no drop at {sweep}={v} contains a terrestrial gateway")
        curves = []
        if OffloadMode.STANDALONE_TG in modes:
            curves.append((OffloadMode.STANDALONE_TG, None))
        if OffloadMode.LEO_OFFLOAD in modes:
            curves += [(OffloadMode.LEO_OFFLOAD, s) for s in sf_mins]
        for mode, sf_min in curves:
            ps = [evaluate_offload_scenario(s, sf_min or 7, mode, settings) for s in scenarios]
            rows.append(
                {
                    "sweep": sweep or "none",
                    "sweep_value": _fmt(float(v)) if sweep else "",
                    "mode": mode.value,
                    "sf_min": "" if sf_min is None else sf_min,
                    "p_success": _fmt(float(np.nanmean(ps))),
                    "drops": len(scenarios),
                }
            )
    return rows


def run_preset(
    name: str,
    seed: int = 0,
    drops: int | None = None,
    settings: SimSettings = SimSettings(),
    offload_settings: OffloadSettings = OffloadSettings(),
    workers: int = 1,
) -> list[dict]:
    p = get_preset(name)
    n = p.drops if drops is None else drops
    if p.kind == "simulate":
        return simulate_rows(p.scenario, p.techs, p.targets, p.sweep, p.values, n, seed, settings, workers)
    if p.kind == "coverage":
        return coverage_rows(p.techs, p.targets, settings.channel)
    if p.kind == "platforms":
        return platform_rows(p.techs, p.targets, p.values, settings.channel)
    offload = replace(offload_settings, channel=settings.channel)
    return offload_rows(p.scenario, p.sweep, p.values, p.sf_mins, n, seed, offload)
