"""Per-technology PHY parameters, SF/repetition assignment, detection and collisions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import TechId, TechnologyProfile, default_profile

LORA_SFS = (7, 8, 9, 10, 11, 12)
NBIOT_REPETITIONS = tuple(2**i for i in range(8))


class SfPolicy(str, Enum):
    LOWEST_FEASIBLE = "lowest"
    SCRAMBLED_PLUS = "scrambled"


class DetectionOutcome(str, Enum):
    SUCCESS = "success"
    BELOW_SENSITIVITY = "below_sensitivity"
    COLLISION = "collision"


def _check_sf(sf) -> None:
    if int(sf) != sf or not 7 <= sf <= 12:
        raise ValueError(f"spreading factor must be in 7..12, got {sf}")


def lora_data_rate(sf: int, bandwidth: float) -> float:
    _check_sf(sf)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return sf * bandwidth / 2**sf


def lora_symbols(sf, payload):
    """Number of symbols in a LoRa frame (preamble of 8 plus payload blocks)."""
    sf = np.asarray(sf, dtype=np.int64)
    payload = np.asarray(payload, dtype=np.int64)
    num = 8 * payload - 4 * sf + 24
    den = 4 * sf
    blocks = -((-num) // den)  # integer ceil
    return 8 + np.maximum(5 * blocks, 0)


def lora_toa(sf: int, bandwidth: float, payload: int) -> float:
    _check_sf(sf)
    if payload < 1:
        raise ValueError("payload must be >= 1 byte")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return 2**sf / bandwidth * int(lora_symbols(sf, payload))


def lora_toa_array(sf, bandwidth: float, payload) -> np.ndarray:
    sf = np.asarray(sf, dtype=np.int64)
    return np.ldexp(1.0, sf) / bandwidth * lora_symbols(sf, payload)


def _check_repetitions(r) -> None:
    if r not in NBIOT_REPETITIONS:
        raise ValueError(f"repetitions must be a power of two in 1..128, got {r}")


def sensitivity(profile: TechnologyProfile | TechId | str, sf: int | None = None, repetitions: int | None = None) -> float:
    """Sensitivity threshold in dBm for the given SF (LoRa) or repetition count (NB-IoT)."""
    if not isinstance(profile, TechnologyProfile):
        profile = default_profile(profile)
    rule = profile.sensitivity_rule
    if rule.kind == "lora_sf":
        if sf is None:
            raise ValueError("LoRa sensitivity needs a spreading factor")
        _check_sf(sf)
        return rule.base_dbm + rule.step_db * (sf - 7)
    if rule.kind == "nbiot_rep":
        if repetitions is None:
            raise ValueError("NB-IoT sensitivity needs a repetition count")
        _check_repetitions(repetitions)
        return rule.base_dbm + rule.step_db * math.log2(repetitions)
    return rule.base_dbm


def lowest_sensitivity(profile: TechnologyProfile) -> float:
    kind = profile.sensitivity_rule.kind
    if kind == "lora_sf":
        return sensitivity(profile, sf=12)
    if kind == "nbiot_rep":
        return sensitivity(profile, repetitions=128)
    return sensitivity(profile)


def lora_sensitivity_array(sf) -> np.ndarray:
    return -127.0 - 2.5 * (np.asarray(sf) - 7)


def nbiot_sensitivity_array(reps) -> np.ndarray:
    return -102.2 - 2.8 * np.log2(np.asarray(reps, dtype=float))


def detect(rx_power, sens):
    """Detection rule: received power at or above the sensitivity threshold."""
    return np.asarray(rx_power) >= np.asarray(sens) if np.ndim(rx_power) else rx_power >= sens


def nbiot_min_repetitions(rx_power: float) -> int | None:
    for r in NBIOT_REPETITIONS:
        if rx_power >= sensitivity(TechId.NBIOT, repetitions=r):
            return r
    return None


def nbiot_min_repetitions_array(rx_power) -> np.ndarray:
    """Vectorised repetition choice; 0 marks devices that cannot close the link."""
    rx = np.asarray(rx_power, dtype=float)
    out = np.zeros(rx.shape, dtype=np.int64)
    for r in reversed(NBIOT_REPETITIONS):
        out = np.where(rx >= sensitivity(TechId.NBIOT, repetitions=r), r, out)
    return out


def assign_sf(rx_power_mean: float, policy: SfPolicy | str = SfPolicy.LOWEST_FEASIBLE, rng: np.random.Generator | None = None) -> int | None:
    policy = SfPolicy(policy)
    feasible = [k for k in LORA_SFS if rx_power_mean >= sensitivity(TechId.LORA, sf=k)]
    if not feasible:
        return None
    if policy is SfPolicy.LOWEST_FEASIBLE:
        return feasible[0]
    if rng is None:
        raise ValueError("scrambled SF assignment needs an RNG")
    return int(rng.choice(feasible))


def assign_sf_array(rx_power_mean, policy: SfPolicy | str, rng: np.random.Generator | None = None) -> np.ndarray:
    """Vectorised SF assignment; 0 marks devices infeasible even at SF12."""
    policy = SfPolicy(policy)
    rx = np.asarray(rx_power_mean, dtype=float)
    kmin = np.zeros(rx.shape, dtype=np.int64)
    for k in reversed(LORA_SFS):
        kmin = np.where(rx >= sensitivity(TechId.LORA, sf=k), k, kmin)
    if policy is SfPolicy.LOWEST_FEASIBLE:
        return kmin
    if rng is None:
        raise ValueError("scrambled SF assignment needs an RNG")
    span = np.where(kmin > 0, 13 - kmin, 1)
    pick = kmin + np.floor(rng.random(rx.shape) * span).astype(np.int64)
    return np.where(kmin > 0, pick, 0)


@dataclass(frozen=True)
class MacParams:
    capture_db: float = 6.0
    # SigFox micro-channels available to the replicas
    sigfox_micro_channels: int = 1
    sigfox_replicas: int = 3
    # each replica after the first waits a uniform [0, gap] idle time; 0 means back-to-back
    sigfox_max_gap_s: float = 20.0
    nbiot_resource_share: float = 0.3
    nbiot_subcarrier_hz: float = 15e3

    def nbiot_resources(self, profile: TechnologyProfile) -> int:
        return max(1, int(self.nbiot_resource_share * profile.bandwidth_hz / self.nbiot_subcarrier_hz))

    def nbiot_slot_s(self, profile: TechnologyProfile) -> float:
        """Slot carrying one max-size transport block on one uplink resource."""
        per_resource_bps = profile.data_rate_bps / self.nbiot_resources(profile)
        return profile.max_payload * 8 / per_resource_bps

    def sigfox_replica_s(self, profile: TechnologyProfile, payload) -> np.ndarray | float:
        return np.asarray(payload) * 8 / profile.data_rate_bps

    def sigfox_offsets(self, replica_s, rng: np.random.Generator) -> np.ndarray:
        """Replica start offsets (n, replicas) relative to the first replica."""
        d = np.atleast_1d(np.asarray(replica_s, dtype=float))
        gaps = rng.uniform(0.0, self.sigfox_max_gap_s, (len(d), self.sigfox_replicas))
        gaps[:, 0] = 0.0
        return np.cumsum(d[:, None] + gaps, axis=1) - d[:, None]


@dataclass(frozen=True)
class LoraTag:
    sf: int
    channel: int = 0


@dataclass(frozen=True)
class SigfoxTag:
    channels: tuple[int, ...]
    # replica start offsets relative to the event start
    offsets: tuple[float, ...]


@dataclass(frozen=True)
class NbiotTag:
    slot: int
    repetitions: int
    resource: int = 0


@dataclass(frozen=True)
class TransmissionEvent:
    device_id: int
    start: float
    duration: float
    payload: int
    channel_tag: LoraTag | SigfoxTag | NbiotTag
    rx_power: float
    # power compared against sensitivity when it differs from rx_power (DF relay)
    detect_power: float | None = None

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValueError("duration must be positive")


def overlap_pairs(key, start, end):
    """All ordered pairs (i, j), i != j, sharing ``key`` with overlapping [start, end) intervals."""
    key = np.asarray(key)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    n = len(start)
    if n < 2:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    _, rank = np.unique(key, return_inverse=True)
    rank = rank.ravel()
    t0 = start.min()
    span = end.max() - t0 + 1.0
    ts = start - t0 + rank * 2 * span
    te = end - t0 + rank * 2 * span
    order = np.argsort(ts, kind="stable")
    S = ts[order]
    eps = 1e-9 * (1.0 + S[-1])
    dmax = float(np.max(end - start))
    lo = np.searchsorted(S, S - dmax - eps, side="left")
    hi = np.searchsorted(S, te[order] + eps, side="right")
    counts = hi - lo
    total = int(counts.sum())
    ii = np.repeat(np.arange(n), counts)
    offs = np.repeat(np.cumsum(counts) - counts, counts)
    jj = np.repeat(lo, counts) + (np.arange(total) - offs)
    I = order[ii]
    J = order[jj]
    keep = (I != J) & (rank[I] == rank[J]) & (start[J] < end[I]) & (start[I] < end[J])
    return I[keep], J[keep]


def resolve_lora_arrays(key, start, duration, rx_dbm, detect_ok, capture_db: float = 6.0) -> np.ndarray:
    """Same-key (receiver, SF, channel) capture rule against the linear interferer sum."""
    start = np.asarray(start, dtype=float)
    end = start + np.asarray(duration, dtype=float)
    rx_dbm = np.asarray(rx_dbm, dtype=float)
    n = len(start)
    I, J = overlap_pairs(key, start, end)
    with np.errstate(divide="ignore", under="ignore"):
        p_lin = np.power(10.0, rx_dbm / 10.0)
        interf = np.bincount(I, weights=p_lin[J], minlength=n)
        n_int = np.bincount(I, minlength=n)
        sir = rx_dbm - 10 * np.log10(interf)
    clean = (n_int == 0) | (sir >= capture_db)
    return np.asarray(detect_ok, dtype=bool) & clean, n_int > 0


def any_overlap(key, start, end) -> np.ndarray:
    """True where an interval overlaps at least one other interval with the same key."""
    key = np.asarray(key)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    n = len(start)
    hit = np.zeros(n, dtype=bool)
    if n < 2:
        return hit
    order = np.lexsort((start, key))
    k, s, e = key[order], start[order], end[order]
    h = np.zeros(n, dtype=bool)
    # the next interval of the group starts before this one ends
    h[:-1] = (k[1:] == k[:-1]) & (s[1:] < e[:-1])
    # some earlier interval of the group is still running at this start
    bounds = np.flatnonzero(np.r_[True, k[1:] != k[:-1], True])
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a > 1:
            h[a + 1 : b] |= np.maximum.accumulate(e[a : b - 1]) > s[a + 1 : b]
    hit[order] = h
    return hit


def resolve_sigfox_arrays(key, start, replica_duration, replica_channels, detect_ok, replica_offsets=None):
    """Message survives if at least one replica overlaps no replica of another message.

    Replicas of one message must not overlap each other in time.
    """
    start = np.asarray(start, dtype=float)
    dur = np.broadcast_to(np.asarray(replica_duration, dtype=float), start.shape)
    chans = np.asarray(replica_channels, dtype=np.int64)
    n, nrep = chans.shape
    if replica_offsets is None:
        offs = dur[:, None] * np.arange(nrep)[None, :]
    else:
        offs = np.asarray(replica_offsets, dtype=float)
        srt = np.sort(offs, axis=1)
        if np.any(np.diff(srt, axis=1) < dur[:, None] * (1 - 1e-9)):
            raise ValueError("replicas of one message overlap in time")
    rs = (start[:, None] + offs).ravel()
    re = rs + np.repeat(dur, nrep)
    rkey = np.repeat(np.asarray(key, dtype=np.int64), nrep) * (int(chans.max()) + 1) + chans.ravel()
    hit = any_overlap(rkey, rs, re)
    any_clean = (~hit).reshape(n, nrep).any(axis=1)
    return np.asarray(detect_ok, dtype=bool) & any_clean, ~any_clean


def resolve_nbiot_arrays(key, slot, repetitions, detect_ok):
    """Slotted access: an event needs its R consecutive slots free on its resource."""
    slot = np.asarray(slot, dtype=np.int64)
    reps = np.asarray(repetitions, dtype=np.int64)
    hit = any_overlap(key, slot.astype(float), (slot + reps).astype(float))
    return np.asarray(detect_ok, dtype=bool) & ~hit, hit


def resolve_collisions(
    events: list[TransmissionEvent],
    tech: TechId | str,
    params: MacParams = MacParams(),
    profile: TechnologyProfile | None = None,
) -> list[DetectionOutcome]:
    """Outcome of every event received by a single receiver, in input order."""
    tech = TechId(tech)
    profile = profile or default_profile(tech)
    n = len(events)
    if n == 0:
        return []
    start = np.array([e.start for e in events], dtype=float)
    rx = np.array([e.rx_power for e in events], dtype=float)
    dp = np.array([e.rx_power if e.detect_power is None else e.detect_power for e in events], dtype=float)
    if tech.is_lora:
        sf = np.array([e.channel_tag.sf for e in events])
        ch = np.array([e.channel_tag.channel for e in events])
        det = dp >= lora_sensitivity_array(sf)
        dur = np.array([e.duration for e in events], dtype=float)
        ok, hit = resolve_lora_arrays(sf * 1_000_003 + ch, start, dur, rx, det, params.capture_db)
    elif tech is TechId.SIGFOX:
        det = dp >= sensitivity(profile)
        chans = np.array([e.channel_tag.channels for e in events])
        offs = np.array([e.channel_tag.offsets for e in events], dtype=float)
        # each replica lasts duration / n_replicas
        rep_dur = np.array([e.duration for e in events]) / chans.shape[1]
        ok, hit = resolve_sigfox_arrays(np.zeros(n, np.int64), start, rep_dur, chans, det, offs)
    else:
        reps = np.array([e.channel_tag.repetitions for e in events])
        slot = np.array([e.channel_tag.slot for e in events])
        res = np.array([e.channel_tag.resource for e in events])
        det = dp >= nbiot_sensitivity_array(reps)
        ok, hit = resolve_nbiot_arrays(res, slot, reps, det)
    out = []
    for d, s, h in zip(det, ok, hit):
        if not d:
            out.append(DetectionOutcome.BELOW_SENSITIVITY)
        elif s:
            out.append(DetectionOutcome.SUCCESS)
        else:
            out.append(DetectionOutcome.COLLISION)
    return out
