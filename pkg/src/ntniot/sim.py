"""Monte Carlo drops: MAR traffic, per-receiver collision resolution, metric aggregation."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from .channel import (
    ChannelParams,
    LinkKind,
    backhaul_snr,
    link_kind_for,
    link_path_loss,
    nakagami_power,
    noise_floor_dbm,
    profile_received_power,
    sample_fading,
    shadowed_rician_power,
)
from .model import (
    ConfigurationError,
    PlatformKind,
    Scenario,
    ScenarioConfig,
    TechId,
    TechnologyProfile,
    build_scenario,
    default_profile,
    make_platform,
)
from .phymac import (
    MacParams,
    SfPolicy,
    assign_sf_array,
    lora_sensitivity_array,
    lora_toa_array,
    nbiot_min_repetitions_array,
    nbiot_sensitivity_array,
    resolve_lora_arrays,
    resolve_nbiot_arrays,
    resolve_sigfox_arrays,
    sensitivity,
)


class Topology(str, Enum):
    ID_TG = "id-tg"
    ID_U = "id-u"
    ID_H = "id-h"
    ID_L = "id-l"
    ID_H_L = "id-h-l"

    @property
    def platform_kind(self) -> PlatformKind:
        return {
            Topology.ID_TG: PlatformKind.TG,
            Topology.ID_U: PlatformKind.UAV,
            Topology.ID_H: PlatformKind.HAP,
            Topology.ID_L: PlatformKind.LEO,
            Topology.ID_H_L: PlatformKind.HAP_RELAY_LEO,
        }[self]


@dataclass(frozen=True)
class SimSettings:
    channel: ChannelParams = field(default_factory=ChannelParams)
    mac: MacParams = field(default_factory=MacParams)
    payload_shape: float = 2.5
    payload_scale: float = 1.0
    # bypasses payload sampling (offloading study uses 50 bytes)
    fixed_payload: int | None = None


@dataclass(frozen=True)
class DropResult:
    attempted: int
    delivered: int
    delivered_bytes: int
    horizon: float
    offered_bytes: int = 0


@dataclass(frozen=True)
class SimulationResult:
    goodput: float
    success_probability: float
    confidence_halfwidth: float
    drops: int
    offered_load: float = 0.0


def sample_payload(rng: np.random.Generator, max_bytes: int, shape: float = 2.5, scale: float = 1.0, size=None):
    """Pareto payload in bytes, rounded to an integer and clamped to [1, max_bytes]."""
    if max_bytes < 1:
        raise ValueError("max payload must be >= 1")
    x = scale * (1.0 - rng.random(size)) ** (-1.0 / shape)
    out = np.clip(np.floor(x + 0.5), 1, max_bytes).astype(np.int64)
    return int(out) if size is None else out


def sample_arrivals(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson arrival times on [0, horizon)."""
    if rate < 0 or not horizon > 0:
        raise ValueError("need rate >= 0 and horizon > 0")
    n = rng.poisson(rate * horizon)
    return np.sort(rng.uniform(0.0, horizon, n))


def _combined_fading(kind: LinkKind, settings: SimSettings, reps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Fading power averaged over the repetitions of each event (R=1 is plain block fading)."""
    f = settings.channel.fading
    out = np.empty(len(reps))
    for r in np.unique(reps):
        idx = np.flatnonzero(reps == r)
        if r == 1 or kind in (LinkKind.GROUND_TO_GROUND, LinkKind.HAP_TO_LEO):
            out[idx] = sample_fading(kind, f, rng, len(idx))
        elif kind is LinkKind.GROUND_TO_LEO:
            acc = np.zeros(len(idx))
            for _ in range(int(r)):
                acc += shadowed_rician_power(f.sr_omega, f.sr_b0, f.sr_m, rng, len(idx))
            out[idx] = acc / r
        else:
            # mean of r unit-mean Gamma(m0) powers is Gamma(r*m0) with unit mean
            out[idx] = nakagami_power(f.nakagami_m0 * r, rng, len(idx))
    return out


def run_drop(
    scenario: Scenario,
    tech: TechId | str,
    topology: Topology | str,
    rng: np.random.Generator,
    settings: SimSettings = SimSettings(),
    profile: TechnologyProfile | None = None,
) -> DropResult:
    tech = TechId(tech)
    topology = Topology(topology)
    profile = profile or default_profile(tech)
    params = settings.channel
    dev = scenario.device_positions
    n_dev = len(dev)

    if topology is Topology.ID_TG:
        if scenario.n_gateways == 0:
            raise ConfigurationError("id-tg topology needs at least one terrestrial gateway")
        platform = make_platform(PlatformKind.TG, rx_channels=scenario.tg_rx_channels)
        if n_dev:
            dist, serving = cKDTree(scenario.gateway_positions).query(dev)
        else:
            dist, serving = np.empty(0), np.empty(0, np.int64)
    else:
        platform = scenario.platform(topology.platform_kind)
        dist = np.hypot(dev[:, 0] - platform.position[0], dev[:, 1] - platform.position[1])
        serving = np.zeros(n_dev, dtype=np.int64)
    kind = link_kind_for(platform)
    pl, _ = link_path_loss(profile, platform, dist, params, rng if params.los_model == "sigmoid" else None)
    mean_rx = np.asarray(profile_received_power(profile, platform, pl, 1.0), dtype=float).reshape(n_dev)

    nf = noise_floor_dbm(profile.bandwidth_hz, profile.noise_figure_db)
    relay = topology is Topology.ID_H_L
    if relay:
        snr_hl = backhaul_snr(platform, params)
        assign_rx = nf + np.minimum(mean_rx - nf, snr_hl)
    else:
        assign_rx = mean_rx

    # per-device link mode
    if tech.is_lora:
        policy = SfPolicy.SCRAMBLED_PLUS if tech is TechId.LORA_PLUS else SfPolicy.LOWEST_FEASIBLE
        mode = assign_sf_array(assign_rx, policy, rng)
        mode = np.where(mode == 0, 12, mode)
    elif tech is TechId.NBIOT:
        mode = nbiot_min_repetitions_array(assign_rx)
        mode = np.where(mode == 0, 128, mode)
    else:
        mode = np.zeros(n_dev, dtype=np.int64)

    # traffic
    counts = rng.poisson(scenario.arrival_rate * scenario.horizon_s, n_dev)
    owner = np.repeat(np.arange(n_dev), counts)
    n_ev = len(owner)
    if n_ev == 0:
        return DropResult(0, 0, 0, scenario.horizon_s, 0)
    start = rng.uniform(0.0, scenario.horizon_s, n_ev)
    if settings.fixed_payload is not None:
        payload = np.full(n_ev, settings.fixed_payload, dtype=np.int64)
    else:
        payload = sample_payload(rng, profile.max_payload, settings.payload_shape, settings.payload_scale, n_ev)
    ev_mode = mode[owner]
    reps = ev_mode if tech is TechId.NBIOT else np.ones(n_ev, dtype=np.int64)
    h = _combined_fading(kind, settings, reps, rng)
    with np.errstate(divide="ignore"):
        rx = mean_rx[owner] + 10 * np.log10(h)
    detect_rx = nf + np.minimum(rx - nf, snr_hl) if relay else rx
    rx_id = serving[owner].astype(np.int64)

    if tech.is_lora:
        C = platform.rx_channels
        ch = rng.integers(0, C, n_ev)
        key = (rx_id * 16 + ev_mode) * C + ch
        dur = lora_toa_array(ev_mode, profile.bandwidth_hz, payload)
        det = detect_rx >= lora_sensitivity_array(ev_mode)
        ok, _ = resolve_lora_arrays(key, start, dur, rx, det, settings.mac.capture_db)
    elif tech is TechId.SIGFOX:
        mac = settings.mac
        chans = rng.integers(0, mac.sigfox_micro_channels, (n_ev, mac.sigfox_replicas))
        rep_dur = mac.sigfox_replica_s(profile, payload)
        det = detect_rx >= sensitivity(profile)
        offs = mac.sigfox_offsets(rep_dur, rng)
        ok, _ = resolve_sigfox_arrays(rx_id, start, rep_dur, chans, det, offs)
    else:
        mac = settings.mac
        n_res = mac.nbiot_resources(profile)
        slot = np.ceil(start / mac.nbiot_slot_s(profile)).astype(np.int64)
        res = rng.integers(0, n_res, n_ev)
        det = detect_rx >= nbiot_sensitivity_array(ev_mode)
        ok, _ = resolve_nbiot_arrays(rx_id * n_res + res, slot, ev_mode, det)

    return DropResult(
        attempted=n_ev,
        delivered=int(ok.sum()),
        delivered_bytes=int(payload[ok].sum()),
        horizon=scenario.horizon_s,
        offered_bytes=int(payload.sum()),
    )


def aggregate(drops: list[DropResult]) -> SimulationResult:
    """Pooled success ratio and goodput with a normal-approximation 95% halfwidth."""
    if not drops:
        raise ValueError("aggregate needs at least one drop")
    att = sum(d.attempted for d in drops)
    dlv = sum(d.delivered for d in drops)
    nbytes = sum(d.delivered_bytes for d in drops)
    offered = sum(d.offered_bytes for d in drops)
    horizon = sum(d.horizon for d in drops)
    p = dlv / att if att else 0.0
    hw = 1.96 * math.sqrt(p * (1 - p) / att) if att else 0.0
    return SimulationResult(
        goodput=nbytes / horizon * 3600.0,
        success_probability=p,
        confidence_halfwidth=hw,
        drops=len(drops),
        offered_load=offered / horizon * 3600.0,
    )


def config_for_topology(config: ScenarioConfig, topology: Topology | str) -> ScenarioConfig:
    """Add the NTN platform a topology needs if the configuration lacks it."""
    topology = Topology(topology)
    if topology is Topology.ID_TG:
        return config
    kind = topology.platform_kind.value
    if kind in config.ntn_platforms:
        return config
    return config.with_(ntn_platforms=tuple(config.ntn_platforms) + (kind,))


def drop_seeds(seed: int, index: int) -> tuple[int, np.random.SeedSequence]:
    """Scenario seed and traffic seed sequence of one drop, fixed by (seed, index)."""
    ss_scen, ss_traffic = np.random.SeedSequence([seed, index]).spawn(2)
    return int(ss_scen.generate_state(1, np.uint64)[0]), ss_traffic


def _one_drop(args) -> DropResult:
    config, tech, topology, seed, index, settings, profile = args
    scen_seed, traffic = drop_seeds(seed, index)
    scenario = build_scenario(config, scen_seed)
    return run_drop(scenario, tech, topology, np.random.default_rng(traffic), settings, profile)


def run_drops(
    config: ScenarioConfig,
    tech: TechId | str,
    topology: Topology | str,
    drops: int = 25,
    seed: int = 0,
    settings: SimSettings = SimSettings(),
    workers: int = 1,
    profile: TechnologyProfile | None = None,
) -> list[DropResult]:
    """Independent drops; results depend only on (seed, drop index), not on ``workers``."""
    config = config_for_topology(config, topology)
    jobs = [(config, TechId(tech), Topology(topology), seed, i, settings, profile) for i in range(drops)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one_drop, jobs))
    return [_one_drop(j) for j in jobs]


def run_simulation(
    config: ScenarioConfig,
    tech: TechId | str,
    topology: Topology | str,
    drops: int = 25,
    seed: int = 0,
    settings: SimSettings = SimSettings(),
    workers: int = 1,
    profile: TechnologyProfile | None = None,
) -> SimulationResult:
    return aggregate(run_drops(config, tech, topology, drops, seed, settings, workers, profile))
