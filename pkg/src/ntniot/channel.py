"""Geometry, path loss, fading samplers, received power, SNR and DF relaying."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import FadingParams, Platform, PlatformKind, TechnologyProfile

EARTH_RADIUS_KM = 6371.0
THERMAL_NOISE_DBM_HZ = -174.0


class LinkKind(str, Enum):
    GROUND_TO_GROUND = "g2g"
    GROUND_TO_UAV = "g2uav"
    GROUND_TO_HAP = "g2hap"
    GROUND_TO_LEO = "g2leo"
    HAP_TO_LEO = "hap2leo"


def link_kind_for(platform: Platform) -> LinkKind:
    """Link kind of the device uplink towards ``platform``."""
    return {
        PlatformKind.TG: LinkKind.GROUND_TO_GROUND,
        PlatformKind.UAV: LinkKind.GROUND_TO_UAV,
        PlatformKind.HAP: LinkKind.GROUND_TO_HAP,
        PlatformKind.HAP_RELAY_LEO: LinkKind.GROUND_TO_HAP,
        PlatformKind.LEO: LinkKind.GROUND_TO_LEO,
    }[platform.kind]


@dataclass(frozen=True)
class ChannelParams:
    fading: FadingParams = field(default_factory=FadingParams)
    # dB per link kind, added on top of free-space loss
    atmospheric_db: dict = field(default_factory=dict)
    # "los": every air/space link is LOS; "sigmoid": elevation-dependent LOS probability
    los_model: str = "los"
    sigmoid_a: float = 4.88
    sigmoid_b: float = 0.43
    ground_exponent: float = 3.76
    ground_ref_loss_db: float = 7.7
    ground_ref_distance_m: float = 1.0

    def atmospheric(self, kind: LinkKind) -> float:
        return float(self.atmospheric_db.get(kind.value, 0.0))


@dataclass(frozen=True)
class LinkSample:
    distance: float
    elevation: float
    path_loss: float
    fading_power: float
    received_power: float
    snr: float


def slant_geometry(ground_distance, altitude, curvature: bool = False):
    """Slant range [km] and elevation [deg] towards a platform at ``altitude``.

    In curved mode ``ground_distance`` is the arc length along a spherical
    Earth of radius 6371 km.
    """
    d = np.asarray(ground_distance, dtype=float)
    h = float(altitude)
    if np.any(d < 0) or h < 0:
        raise ValueError("distance and altitude must be non-negative")
    if not curvature:
        slant = np.hypot(d, h)
        elev = np.degrees(np.arctan2(h, d))
    else:
        R = EARTH_RADIUS_KM
        gamma = d / R
        slant = np.sqrt(R**2 + (R + h) ** 2 - 2 * R * (R + h) * np.cos(gamma))
        elev = np.degrees(np.arctan2((R + h) * np.cos(gamma) - R, (R + h) * np.sin(gamma)))
    if slant.ndim == 0:
        return float(slant), float(elev)
    return slant, elev


def horizon_distance_km(altitude: float) -> float:
    """Arc length at which a platform at ``altitude`` sits on the horizon."""
    return EARTH_RADIUS_KM * math.acos(EARTH_RADIUS_KM / (EARTH_RADIUS_KM + altitude))


def free_space_path_loss(slant_km, freq_hz: float, atmospheric_db: float = 0.0, extra_db: float = 0.0):
    d = np.asarray(slant_km, dtype=float)
    if freq_hz <= 0 or np.any(d <= 0):
        raise ValueError("free-space loss needs positive distance and frequency")
    pl = 20 * np.log10(d * 1e3) + 20 * math.log10(freq_hz) - 147.55 + atmospheric_db + extra_db
    return float(pl) if pl.ndim == 0 else pl


def ground_path_loss(distance_km, exponent: float = 3.76, ref_loss_db: float = 7.7, ref_distance_m: float = 1.0):
    """Log-distance loss of the device-to-terrestrial-gateway link."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("ground path loss needs a positive distance")
    pl = ref_loss_db + 10 * exponent * np.log10(d * 1e3 / ref_distance_m)
    return float(pl) if pl.ndim == 0 else pl


def los_probability(elevation_deg, a: float = 4.88, b: float = 0.43):
    return 1.0 / (1.0 + a * np.exp(-b * (np.asarray(elevation_deg) - a)))


def extra_loss(elevation_deg, params: ChannelParams, rng: np.random.Generator | None = None):
    """LOS/NLOS excess loss. Without an RNG the LOS-probability-weighted mean is returned."""
    f = params.fading
    elev = np.asarray(elevation_deg, dtype=float)
    if params.los_model == "los":
        out = np.full(elev.shape, f.extra_loss_los)
    elif params.los_model == "sigmoid":
        p = los_probability(elev, params.sigmoid_a, params.sigmoid_b)
        if rng is None:
            out = p * f.extra_loss_los + (1 - p) * f.extra_loss_nlos
        else:
            los = rng.random(elev.shape) < p
            out = np.where(los, f.extra_loss_los, f.extra_loss_nlos)
    else:
        raise ValueError(f"unknown LOS model {params.los_model!r}")
    return float(out) if out.ndim == 0 else out


def uses_curvature(kind: PlatformKind) -> bool:
    # curvature is negligible below 1 km altitude
    return kind in (PlatformKind.HAP, PlatformKind.HAP_RELAY_LEO, PlatformKind.LEO)


def link_path_loss(
    profile: TechnologyProfile,
    platform: Platform,
    ground_distance,
    params: ChannelParams,
    rng: np.random.Generator | None = None,
):
    """Path loss [dB] and elevation [deg] from ground points to ``platform``.

    Points below the platform's horizon get infinite loss.
    """
    d = np.asarray(ground_distance, dtype=float)
    if platform.kind is PlatformKind.TG:
        pl = ground_path_loss(
            np.maximum(d, 1e-3), params.ground_exponent, params.ground_ref_loss_db, params.ground_ref_distance_m
        )
        return pl, np.full(d.shape, np.nan) if d.ndim else math.nan
    kind = link_kind_for(platform)
    curved = uses_curvature(platform.kind)
    slant, elev = slant_geometry(d, platform.altitude_km, curvature=curved)
    pl = free_space_path_loss(
        slant, profile.carrier_freq_hz, params.atmospheric(kind), extra_loss(elev, params, rng)
    )
    pl = np.where(np.asarray(elev) < 0, np.inf, pl)
    if pl.ndim == 0:
        return float(pl), float(elev)
    return pl, elev


def backhaul_path_loss(platform: Platform, params: ChannelParams) -> float:
    """HAP-to-LEO leg loss with both platforms above the AoI centre."""
    relay = platform.relay_params
    slant = relay.upstream_altitude_km - platform.altitude_km
    return free_space_path_loss(
        slant,
        relay.carrier_freq_hz,
        params.atmospheric(LinkKind.HAP_TO_LEO),
        params.fading.extra_loss_los,
    )


def nakagami_power(m0: float, rng: np.random.Generator, size=None):
    """Squared Nakagami-m envelope with unit mean."""
    return rng.gamma(m0, 1.0 / m0, size)


def shadowed_rician_power(omega: float, b0: float, m: float, rng: np.random.Generator, size=None):
    """Squared Shadowed-Rician envelope: Nakagami-m LOS amplitude plus circular Gaussian scatter.

    The LOS power has mean ``omega`` and the scatter component has power ``2*b0``.
    """
    los_amp = np.sqrt(rng.gamma(m, omega / m, size))
    sigma = math.sqrt(b0)
    re = los_amp + sigma * rng.standard_normal(size)
    im = sigma * rng.standard_normal(size)
    return re * re + im * im


def sample_fading(kind: LinkKind, params: FadingParams, rng: np.random.Generator, size=None):
    if kind in (LinkKind.GROUND_TO_UAV, LinkKind.GROUND_TO_HAP):
        return nakagami_power(params.nakagami_m0, rng, size)
    if kind is LinkKind.GROUND_TO_LEO:
        return shadowed_rician_power(params.sr_omega, params.sr_b0, params.sr_m, rng, size)
    # ground links are collision-dominated; the backhaul is a fixed LOS link
    return 1.0 if size is None else np.ones(size)


def fading_mean(kind: LinkKind, params: FadingParams) -> float:
    if kind is LinkKind.GROUND_TO_LEO:
        return params.sr_mean_power
    return 1.0


def received_power(tx_dbm: float, tx_gain_db: float, rx_gain_db: float, path_loss_db, fading):
    """Received power in dBm; zero fading maps to -inf (never detected)."""
    fading = np.asarray(fading, dtype=float)
    if np.any(fading < 0):
        raise ValueError("fading power must be non-negative")
    with np.errstate(divide="ignore"):
        p = tx_dbm + tx_gain_db + rx_gain_db - np.asarray(path_loss_db) + 10 * np.log10(fading)
    return float(p) if p.ndim == 0 else p


def profile_received_power(profile: TechnologyProfile, platform: Platform, path_loss_db, fading=1.0):
    return received_power(
        profile.tx_power_dbm, profile.tx_antenna_gain_db, platform.rx_gain(profile), path_loss_db, fading
    )


def noise_floor_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return THERMAL_NOISE_DBM_HZ + 10 * math.log10(bandwidth_hz) + noise_figure_db


def snr(received_power_dbm, bandwidth_hz: float, noise_figure_db: float):
    p = np.asarray(received_power_dbm, dtype=float) - noise_floor_dbm(bandwidth_hz, noise_figure_db)
    return float(p) if p.ndim == 0 else p


def relay_snr(leg_snrs):
    """End-to-end SNR of a decode-and-forward chain: the weakest leg."""
    legs = list(leg_snrs)
    if not legs:
        raise ValueError("relay_snr needs at least one leg")
    out = legs[0]
    for x in legs[1:]:
        out = np.minimum(out, x)
    return out


def backhaul_snr(platform: Platform, params: ChannelParams) -> float:
    relay = platform.relay_params
    p = received_power(
        relay.tx_power_dbm, relay.tx_antenna_gain_db, relay.rx_antenna_gain_db, backhaul_path_loss(platform, params), 1.0
    )
    return snr(p, relay.bandwidth_hz, relay.noise_figure_db)


def link_sample(
    profile: TechnologyProfile,
    platform: Platform,
    ground_distance: float,
    params: ChannelParams,
    rng: np.random.Generator | None = None,
) -> LinkSample:
    """One link realisation; unit fading when no RNG is given."""
    pl, elev = link_path_loss(profile, platform, ground_distance, params, rng)
    if platform.kind is PlatformKind.TG:
        dist = float(ground_distance)
    else:
        dist, _ = slant_geometry(ground_distance, platform.altitude_km, uses_curvature(platform.kind))
    h = 1.0 if rng is None else float(sample_fading(link_kind_for(platform), params.fading, rng))
    p = profile_received_power(profile, platform, pl, h)
    return LinkSample(dist, elev, pl, h, p, snr(p, profile.bandwidth_hz, profile.noise_figure_db))


def channel_table(profile: TechnologyProfile, platform: Platform, distances_km, params: ChannelParams) -> list[dict]:
    rows = []
    for d in distances_km:
        s = link_sample(profile, platform, d, params)
        rows.append(
            {
                "distance_km": d,
                "slant_km": round(s.distance, 6),
                "elevation_deg": round(s.elevation, 4) if not math.isnan(s.elevation) else "",
                "path_loss_db": round(s.path_loss, 4),
                "rx_power_dbm": round(s.received_power, 4),
                "snr_db": round(s.snr, 4),
            }
        )
    return rows
