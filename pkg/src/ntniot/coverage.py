"""Link-budget inversion (maximum range, minimum elevation) and platform counts over an AoI."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelParams,
    horizon_distance_km,
    link_path_loss,
    profile_received_power,
    slant_geometry,
    uses_curvature,
)
from .model import Platform, PlatformKind, TechnologyProfile
from .phymac import lowest_sensitivity

RANGE_TOLERANCE_KM = 1e-3


@dataclass(frozen=True)
class CoverageResult:
    max_range_km: float
    # NaN for terrestrial gateways, where the elevation is not meaningful
    min_elevation_deg: float
    budget_margin_db: float
    diagnostic: str = ""


def _margin(profile: TechnologyProfile, platform: Platform, d: float, params: ChannelParams, sens: float) -> float:
    pl, _ = link_path_loss(profile, platform, d, params)
    return float(profile_received_power(profile, platform, pl, 1.0)) - sens


def max_range(
    profile: TechnologyProfile,
    platform: Platform,
    params: ChannelParams | None = None,
    tol_km: float = RANGE_TOLERANCE_KM,
) -> CoverageResult:
    """Largest ground distance at which the mean received power meets the lowest sensitivity.

    Curved-Earth platforms are additionally capped at their radio horizon.
    """
    params = params or ChannelParams()
    sens = lowest_sensitivity(profile)
    m0 = _margin(profile, platform, 0.0, params, sens)
    if m0 < 0:
        return CoverageResult(0.0, math.nan, m0, f"nadir link fails by {-m0:.2f} dB")

    curved = platform.kind is not PlatformKind.TG and uses_curvature(platform.kind)
    diagnostic = ""
    if curved:
        hi = horizon_distance_km(platform.altitude_km)
        if _margin(profile, platform, hi, params, sens) >= 0:
            lo = hi
            diagnostic = "horizon-limited"
    else:
        hi = 1.0
        while _margin(profile, platform, hi, params, sens) >= 0:
            hi *= 2.0
            if hi > 1e6:
                raise RuntimeError("range search diverged")
    if not diagnostic:
        lo = 0.0
        while hi - lo > tol_km:
            mid = 0.5 * (lo + hi)
            if _margin(profile, platform, mid, params, sens) >= 0:
                lo = mid
            else:
                hi = mid
    margin = _margin(profile, platform, lo, params, sens)
    if platform.kind is PlatformKind.TG:
        elev = math.nan
    else:
        _, elev = slant_geometry(lo, platform.altitude_km, curvature=curved)
    return CoverageResult(lo, float(elev), margin, diagnostic)


def _hexagon_distance(centres: np.ndarray, circumradius: float) -> np.ndarray:
    """Distance from the origin to pointy-top hexagons with the given centres."""
    angles = np.radians(90.0 + 60.0 * np.arange(6))
    verts = circumradius * np.column_stack((np.cos(angles), np.sin(angles)))
    a = centres[:, None, :] + verts[None, :, :]
    b = centres[:, None, :] + np.roll(verts, -1, axis=0)[None, :, :]
    ab = b - a
    t = np.clip(np.einsum("nkj,nkj->nk", -a, ab) / np.einsum("nkj,nkj->nk", ab, ab), 0.0, 1.0)
    closest = a + t[..., None] * ab
    edge_dist = np.linalg.norm(closest, axis=2).min(axis=1)
    # origin inside the hexagon: all cross products share the sign of the winding
    cross = ab[..., 0] * (-a[..., 1]) - ab[..., 1] * (-a[..., 0])
    inside = np.all(cross >= 0, axis=1)
    return np.where(inside, 0.0, edge_dist)


def hex_sites(aoi_radius: float, coverage_radius: float) -> np.ndarray:
    """Sites of the hexagonal lattice (pitch sqrt(3)*coverage_radius, one site at the AoI centre)
    whose hexagonal cell reaches into the AoI disk."""
    pitch = math.sqrt(3.0) * coverage_radius
    n = int(math.ceil(aoi_radius / pitch)) + 2
    i, j = np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="ij")
    x = pitch * (i + 0.5 * j)
    y = 1.5 * coverage_radius * j
    centres = np.column_stack((x.ravel(), y.ravel())).astype(float)
    near = np.hypot(centres[:, 0], centres[:, 1]) < aoi_radius + coverage_radius
    centres = centres[near]
    keep = _hexagon_distance(centres, coverage_radius) < aoi_radius
    return centres[keep]


def min_platforms(aoi_radius: float, coverage_radius: float) -> int:
    """Platforms needed to cover the AoI disk with coverage disks on a hexagonal lattice.

    Each disk circumscribes one hexagonal cell, so the cells meeting the AoI cover it.
    """
    if not (aoi_radius > 0 and coverage_radius > 0):
        raise ValueError("radii must be positive")
    if aoi_radius <= coverage_radius:
        return 1
    return int(len(hex_sites(aoi_radius, coverage_radius)))
