"""LEO offloading for congested LoRa terrestrial gateways.

Outer problem: per-SF offload fractions eta_k maximising
    P_S_k = (1 - eta_k) * P_TG_k(eta_k) + eta_k * gate_k * P_L,
where the LEO success P_L comes from an inner SF-mixing problem over the offloaded load.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import lambertw
from scipy.spatial import cKDTree

from .channel import ChannelParams, link_path_loss, profile_received_power
from .model import ConfigurationError, PlatformKind, Scenario, TechId, default_profile, make_platform
from .phymac import LORA_SFS, SfPolicy, assign_sf_array, lora_toa, sensitivity

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def p_success_tg(eta: float, toa: float, rate: float, count: float) -> float:
    """Pure-ALOHA success at a TG after offloading a fraction ``eta`` of its devices."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must be in [0, 1]")
    return math.exp(-(1.0 - eta) * toa * rate * count)


def inner_objective(alpha, costs) -> float:
    a = np.asarray(alpha, dtype=float)
    return float(np.sum(a * np.exp(-a * np.asarray(costs, dtype=float))))


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def _kkt_alpha(costs: np.ndarray) -> np.ndarray | None:
    """Stationary point of the concave region, or None when no multiplier brackets it.

    Stationarity (1 - a c) exp(-a c) = mu gives a_v = (1 - W0(mu e)) / c_v. The factor
    1 - W0(mu e) is shared by every v, so the simplex constraint fixes it to 1/S with
    S = sum(1/c) and the multiplier is explicit: mu = (1 - 1/S) exp(-1/S). It lies in
    the concave bracket [-exp(-2), 1) iff S >= 1/2.
    """
    with np.errstate(divide="ignore", over="ignore"):
        s = float(np.sum(1.0 / costs))
    if s < 0.5 or not math.isfinite(s):
        # tiny loads overflow 1/c; the objective is then flat and other candidates suffice
        return None
    mu = (1.0 - 1.0 / s) * math.exp(-1.0 / s)
    w = lambertw(max(mu * math.e, -1.0 / math.e), 0).real
    # the branch point W0(-1/e) = -1 is not always hit exactly in floating point
    a = (1.0 - (w if np.isfinite(w) else -1.0)) / costs
    if not (np.all(np.isfinite(a)) and a.sum() > 0):
        return None
    return a / a.sum()


def _projected_gradient(costs: np.ndarray, start: np.ndarray, iters: int = 2000) -> np.ndarray:
    a = start.copy()
    step = 1.0 / max(2.0 * costs.max(), 1.0)
    for _ in range(iters):
        grad = (1.0 - a * costs) * np.exp(-a * costs)
        nxt = _project_simplex(a + step * grad)
        if np.max(np.abs(nxt - a)) < 1e-13:
            a = nxt
            break
        a = nxt
    return a


def solve_inner_alpha(total_offloaded: float, rate: float, toa_by_v, sf_min: int | None = None):
    """SF-mixing distribution for the offloaded devices and the resulting LEO success.

    ``toa_by_v`` lists the airtime of each SF v = sf_min..12. Returns (alpha, p_s_leo).
    """
    toa = np.asarray(toa_by_v, dtype=float)
    if sf_min is not None and len(toa) != 13 - sf_min:
        raise ValueError("toa_by_v must cover sf_min..12")
    if total_offloaded < 0:
        raise ValueError("offloaded device count must be non-negative")
    n = len(toa)
    if total_offloaded == 0:
        return np.full(n, 1.0 / n), 1.0
    if n == 1:
        return np.ones(1), inner_objective([1.0], toa * rate * total_offloaded)
    costs = toa * rate * total_offloaded
    candidates = [np.full(n, 1.0 / n)] + [np.eye(n)[i] for i in range(n)]
    kkt = _kkt_alpha(costs)
    if kkt is not None:
        candidates.append(kkt)
    else:
        # bracket failed: multi-start projected-gradient ascent
        candidates += [_projected_gradient(costs, s) for s in list(candidates)]
    best = max(candidates, key=lambda a: inner_objective(a, costs))
    best = best / best.sum()
    return best, inner_objective(best, costs)


def grid_inner_alpha(total_offloaded: float, rate: float, toa_by_v, step: float = 1e-3):
    """Exhaustive search over the simplex grid of the given step (test oracle).

    The objective is separable, so the grid optimum is found exactly by dynamic
    programming over the discretised budget instead of enumerating grid points.
    """
    toa = np.asarray(toa_by_v, dtype=float)
    m = int(round(1.0 / step))
    grid = np.arange(m + 1) * step
    costs = toa * rate * total_offloaded
    vals = grid[None, :] * np.exp(-grid[None, :] * costs[:, None])
    best = vals[0].copy()
    choice = []
    for v in range(1, len(toa)):
        # best_new[b] = max_j best[b - j] + vals[v, j]
        cand = np.full((m + 1, m + 1), -np.inf)
        for j in range(m + 1):
            cand[j:, j] = best[: m + 1 - j] + vals[v, j]
        choice.append(np.argmax(cand, axis=1))
        best = cand.max(axis=1)
    alpha = np.zeros(len(toa))
    b = m
    for v in range(len(toa) - 1, 0, -1):
        j = choice[v - 1][b]
        alpha[v] = j * step
        b -= j
    alpha[0] = b * step
    return alpha, float(best[m])


@dataclass(frozen=True)
class OffloadProblem:
    # devices per SF 7..12 towards the TG
    device_counts: tuple[float, ...]
    arrival_rate: float
    # airtime per SF 7..12 at the study payload
    toa: tuple[float, ...]
    sf_min: int = 7
    # ID-L radio success factor; scalar or one value per SF 7..12
    p_s_leo_cap: float | tuple[float, ...] = 1.0

    def __post_init__(self) -> None:
        if len(self.device_counts) != 6 or len(self.toa) != 6:
            raise ConfigurationError("device_counts and toa need one entry per SF 7..12")
        if any(c < 0 for c in self.device_counts):
            raise ConfigurationError("device counts must be non-negative")
        if any(not t > 0 for t in self.toa):
            raise ConfigurationError("airtimes must be positive")
        if self.sf_min not in LORA_SFS:
            raise ConfigurationError("sf_min must be in 7..12")
        if self.arrival_rate < 0:
            raise ConfigurationError("arrival rate must be non-negative")
        cap = np.broadcast_to(np.asarray(self.p_s_leo_cap, dtype=float), (6,))
        if np.any((cap < 0) | (cap > 1)):
            raise ConfigurationError("p_s_leo_cap must lie in [0, 1]")

    @property
    def gate(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.p_s_leo_cap, dtype=float), (6,)).copy()

    @property
    def leo_toa(self) -> np.ndarray:
        return np.asarray(self.toa[self.sf_min - 7 :], dtype=float)


@dataclass(frozen=True)
class OffloadSolution:
    eta: np.ndarray
    alpha: np.ndarray
    p_s_per_sf: np.ndarray
    p_s_leo: float
    iterations: int
    converged: bool

    def mean_success(self, device_counts) -> float:
        w = np.asarray(device_counts, dtype=float)
        return float(np.dot(w, self.p_s_per_sf) / w.sum()) if w.sum() > 0 else 1.0


def _p_s_k(problem: OffloadProblem, eta: np.ndarray, k: int, x: float) -> float:
    counts = np.asarray(problem.device_counts, dtype=float)
    delta = float(np.dot(np.delete(eta, k), np.delete(counts, k)) + x * counts[k])
    _, p_l = solve_inner_alpha(delta, problem.arrival_rate, problem.leo_toa)
    p_tg = p_success_tg(x, problem.toa[k], problem.arrival_rate, counts[k])
    return (1.0 - x) * p_tg + x * problem.gate[k] * p_l


def _golden_max(f, lo: float = 0.0, hi: float = 1.0, tol: float = 1e-9) -> float:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _best_coordinate(problem: OffloadProblem, eta: np.ndarray, k: int) -> float:
    f = lambda x: _p_s_k(problem, eta, k, x)  # noqa: E731
    x = _golden_max(f)
    # ties favour not offloading, then full offloading
    best, val = 0.0, f(0.0)
    for cand in (1.0, x):
        v = f(cand)
        if v > val + 1e-12:
            best, val = cand, v
    return best


def solve_offload(problem: OffloadProblem, tol: float = 1e-6, max_sweeps: int = 200) -> OffloadSolution:
    """Gauss-Seidel sweeps over the SFs, each coordinate by golden-section search."""
    counts = np.asarray(problem.device_counts, dtype=float)
    eta = np.full(6, 0.5)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        change = 0.0
        for k in range(6):
            new = _best_coordinate(problem, eta, k)
            change = max(change, abs(new - eta[k]))
            eta[k] = new
        if change < tol:
            converged = True
            break
    # final pass: each coordinate must beat its pure strategies given the others
    for _ in range(6):
        moved = False
        for k in range(6):
            cur = _p_s_k(problem, eta, k, eta[k])
            for end in (0.0, 1.0):
                if _p_s_k(problem, eta, k, end) > cur + 1e-12:
                    eta[k], cur, moved = end, _p_s_k(problem, eta, k, end), True
        if not moved:
            break
    delta = float(np.dot(eta, counts))
    alpha, p_l = solve_inner_alpha(delta, problem.arrival_rate, problem.leo_toa)
    p_s = np.array([_p_s_k(problem, eta, k, eta[k]) for k in range(6)])
    return OffloadSolution(eta.copy(), alpha, p_s, p_l, sweeps, converged)


class OffloadMode(str, Enum):
    STANDALONE_TG = "standalone"
    LEO_OFFLOAD = "offload"


@dataclass(frozen=True)
class OffloadSettings:
    arrival_rate: float = 1 / 360
    payload_bytes: int = 50
    channel: ChannelParams = field(default_factory=ChannelParams)


def study_toa(payload_bytes: int = 50, bandwidth: float = 125e3) -> tuple[float, ...]:
    return tuple(lora_toa(sf, bandwidth, payload_bytes) for sf in LORA_SFS)


def cell_problems(scenario: Scenario, sf_min: int, settings: OffloadSettings = OffloadSettings()):
    """One OffloadProblem per TG cell, with devices split by their TG spreading factor."""
    if scenario.n_gateways == 0:
        raise ConfigurationError("offloading needs at least one terrestrial gateway")
    profile = default_profile(TechId.LORA)
    dev = scenario.device_positions
    toa = study_toa(settings.payload_bytes, profile.bandwidth_hz)
    if len(dev) == 0:
        return []
    dist, serving = cKDTree(scenario.gateway_positions).query(dev)
    tg = make_platform(PlatformKind.TG)
    pl, _ = link_path_loss(profile, tg, dist, settings.channel)
    sf = assign_sf_array(profile_received_power(profile, tg, pl, 1.0), SfPolicy.LOWEST_FEASIBLE)
    # out-of-range devices still transmit at SF12 (and fail the TG link anyway)
    sf = np.where(sf == 0, 12, sf)

    leo = make_platform(PlatformKind.LEO)
    d_leo = np.hypot(dev[:, 0], dev[:, 1])
    pl_leo, _ = link_path_loss(profile, leo, d_leo, settings.channel)
    mean_fade = settings.channel.fading.sr_mean_power
    p_leo = profile_received_power(profile, leo, pl_leo, mean_fade)
    eligible = p_leo >= sensitivity(profile, sf=sf_min)

    problems = []
    for g in range(scenario.n_gateways):
        mine = serving == g
        counts = np.bincount(sf[mine] - 7, minlength=6).astype(float)
        ok = np.bincount(sf[mine] - 7, weights=eligible[mine].astype(float), minlength=6)
        gate = np.divide(ok, counts, out=np.ones(6), where=counts > 0)
        problems.append(OffloadProblem(tuple(counts), settings.arrival_rate, toa, sf_min, tuple(gate)))
    return problems


def evaluate_offload_scenario(
    scenario: Scenario,
    sf_min: int,
    mode: OffloadMode | str,
    settings: OffloadSettings = OffloadSettings(),
) -> float:
    """Device-weighted mean success probability over all TG cells."""
    mode = OffloadMode(mode)
    total, weight = 0.0, 0.0
    for prob in cell_problems(scenario, sf_min, settings):
        counts = np.asarray(prob.device_counts)
        if counts.sum() == 0:
            continue
        if mode is OffloadMode.STANDALONE_TG:
            p = np.array([p_success_tg(0.0, t, prob.arrival_rate, c) for t, c in zip(prob.toa, counts)])
        else:
            p = solve_offload(prob).p_s_per_sf
        total += float(np.dot(counts, p))
        weight += float(counts.sum())
    return total / weight if weight else math.nan
