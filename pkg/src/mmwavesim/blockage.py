"""Dynamic human blockage: four-state Markov traces and sampled shadowing loss.

A blocker cycles unshadowed -> decay -> shadowed -> rise -> unshadowed; each
lambda_X is the rate of entering state X from its predecessor, so dwell times
are exponential with mean 1/lambda of the next state's rate. Several
independent blockers are superimposed and the applied loss is read off the
combined trace within blockage-affected time.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSnapshot, SpatialLobe
from .config import BlockageConfig

STATES = ("unshadowed", "decay", "shadowed", "rise")


@dataclass(frozen=True)
class MarkovParams:
    """Transition rates (1/s) plus the event attenuation for one blocker."""

    lambda_decay: float
    lambda_shadow: float
    lambda_rise: float
    lambda_unshadow: float
    mean_attenuation_db: float


@dataclass
class BlockageTrace:
    """Discretized loss trace of one or more superimposed blockers.

    states holds int8 codes indexing STATES (0 unshadowed, 1 decay,
    2 shadowed, 3 rise).
    """

    dt_s: float
    states: np.ndarray
    loss_db: np.ndarray

    def state_names(self) -> list[str]:
        return [STATES[c] for c in self.states]


@dataclass
class BlockerSegment:
    """One dwell interval of a simulated blocker."""

    t0: float
    t1: float
    state: str
    attenuation_db: float


def mean_attenuation_db(cfg: BlockageConfig, beamwidth_deg: float) -> float:
    """Event mean attenuation for a beamwidth, from the configured linear fit."""
    if not cfg.default_rates:
        return cfg.mean_attenuation_db
    return max(cfg.att_floor_db, cfg.att_intercept_db - cfg.att_slope_db_per_deg * beamwidth_deg)


def rates_for_beamwidth(hpbw_deg: float, cfg: BlockageConfig | None = None) -> MarkovParams:
    """Linear-fit transition rates for an antenna HPBW (or spatial-lobe width)."""
    if not (0.0 < hpbw_deg <= 360.0):
        raise ValueError(f"beamwidth out of (0,360], got {hpbw_deg}")
    cfg = cfg or BlockageConfig()
    if not cfg.default_rates:
        return MarkovParams(
            cfg.lambda_decay,
            cfg.lambda_shadow,
            cfg.lambda_rise,
            cfg.lambda_unshadow,
            cfg.mean_attenuation_db,
        )
    return MarkovParams(
        lambda_decay=0.2,
        lambda_shadow=0.065 * hpbw_deg + 7.425,
        lambda_rise=0.05 * hpbw_deg + 7.35,
        lambda_unshadow=6.7,
        mean_attenuation_db=mean_attenuation_db(cfg, hpbw_deg),
    )


def lobe_equivalent_beamwidth(lobe: SpatialLobe) -> float:
    """Spatial-lobe width standing in for HPBW: six sigma of the lobe spread."""
    if lobe.angular_spread_deg <= 0:
        raise ValueError("lobe spread must be > 0")
    return 6.0 * lobe.angular_spread_deg


def _dwell_mean(params: MarkovParams, state: str) -> float:
    return {
        "unshadowed": 1.0 / params.lambda_decay,
        "decay": 1.0 / params.lambda_shadow,
        "shadowed": 1.0 / params.lambda_rise,
        "rise": 1.0 / params.lambda_unshadow,
    }[state]


def simulate_segments(
    params: MarkovParams,
    duration_s: float,
    rng: np.random.Generator,
    event_sigma_db: float = 0.0,
) -> list[BlockerSegment]:
    """Roll the four-state cycle over [0, duration); stationary initial state.

    The segment sequence is the ground-truth chain; the grid trace from
    simulate_trace can skip states whose dwell is shorter than dt.
    """
    means = [_dwell_mean(params, s) for s in STATES]
    cycle = sum(means)
    # stationary start: state by time share, residual dwell is exponential again
    u = rng.uniform(0.0, cycle)
    idx = 0
    while u > means[idx]:
        u -= means[idx]
        idx += 1
    segments: list[BlockerSegment] = []
    t = 0.0
    att = math.nan  # per-event attenuation, drawn at each cycle entry
    first = True
    while t < duration_s:
        state = STATES[idx]
        if state == "decay" or (first and state != "unshadowed"):
            att = max(0.0, rng.normal(params.mean_attenuation_db, event_sigma_db))
        dwell = rng.exponential(means[idx])
        if first and state in ("decay", "rise"):
            # partial ramp for a stationary mid-state start
            dwell *= rng.uniform(0.0, 1.0)
        segments.append(BlockerSegment(t, min(t + dwell, duration_s), state, att))
        t += dwell
        idx = (idx + 1) % 4
        first = False
    return segments


def _segment_loss(seg: BlockerSegment, t: float) -> float:
    if seg.state == "unshadowed":
        return 0.0
    if seg.state == "shadowed":
        return seg.attenuation_db
    frac = (t - seg.t0) / (seg.t1 - seg.t0) if seg.t1 > seg.t0 else 0.0
    if seg.state == "decay":
        return seg.attenuation_db * frac
    return seg.attenuation_db * (1.0 - frac)  # rise


def _loss_at(segments: list[BlockerSegment], starts: list[float], t: float) -> float:
    i = bisect.bisect_right(starts, t) - 1
    if i < 0:
        return 0.0
    return _segment_loss(segments[i], t)


def simulate_trace(
    params: MarkovParams,
    duration_s: float,
    dt_s: float,
    rng: np.random.Generator,
    event_sigma_db: float = 0.0,
) -> BlockageTrace:
    """Simulate one blocker and discretize its loss profile onto a dt grid.

    Loss is 0 while unshadowed, the event attenuation while shadowed, and a
    linear ramp across the decay and rise dwells.
    """
    if dt_s <= 0 or duration_s <= 0:
        raise ValueError("duration and dt must be > 0")
    max_rate = max(params.lambda_decay, params.lambda_shadow, params.lambda_rise, params.lambda_unshadow)
    if max_rate * dt_s >= 0.1:
        raise ValueError("dt too coarse for the fastest transition rate")
    segments = simulate_segments(params, duration_s, rng, event_sigma_db)
    t0 = np.array([s.t0 for s in segments])
    t1 = np.array([s.t1 for s in segments])
    codes = np.array([STATES.index(s.state) for s in segments], dtype=np.int8)
    atts = np.array([0.0 if s.state == "unshadowed" else s.attenuation_db for s in segments])

    times = np.arange(0.0, duration_s, dt_s)
    idx = np.clip(np.searchsorted(t0, times, side="right") - 1, 0, len(segments) - 1)
    widths = np.maximum(t1[idx] - t0[idx], 1e-300)
    frac = (times - t0[idx]) / widths
    state = codes[idx]
    loss = np.where(
        state == 2,
        atts[idx],
        np.where(state == 1, atts[idx] * frac, np.where(state == 3, atts[idx] * (1.0 - frac), 0.0)),
    )
    return BlockageTrace(dt_s=dt_s, states=state, loss_db=loss)


def superimpose(traces: list[BlockageTrace]) -> BlockageTrace:
    """Pointwise dB sum of simultaneous blocker traces."""
    if not traces:
        raise ValueError("no traces to superimpose")
    n = len(traces[0].loss_db)
    if any(len(t.loss_db) != n or t.dt_s != traces[0].dt_s for t in traces):
        raise ValueError("traces have mismatched time grids")
    total = np.sum([t.loss_db for t in traces], axis=0)
    states = np.where(total == 0.0, np.int8(0), np.int8(2))
    return BlockageTrace(dt_s=traces[0].dt_s, states=states, loss_db=total)


def sample_blockage_loss(
    cfg: BlockageConfig,
    beamwidth_deg: float,
    rng: np.random.Generator,
    within_event: bool = True,
) -> float:
    """Shadowing loss experienced by one user from 1..5 superimposed blockers.

    With within_event the instant t0 is drawn uniformly over the
    blockage-affected part of the combined trace, i.e. the loss a user may
    experience when blockage strikes (the shadowing-loss CDF view). Without
    it, t0 is uniform over the whole window, so the mostly-unshadowed trace
    usually returns 0 dB (the stationary link-budget view).
    """
    params = rates_for_beamwidth(beamwidth_deg, cfg)
    m = int(rng.integers(1, 6))
    blockers = []
    for _ in range(m):
        segs = simulate_segments(params, cfg.trace_duration_s, rng, cfg.att_event_sigma_db)
        blockers.append((segs, [s.t0 for s in segs]))
    if not within_event:
        t0 = rng.uniform(0.0, cfg.trace_duration_s)
        return float(sum(_loss_at(segs, starts, t0) for segs, starts in blockers))
    # active intervals of the superimposed trace = union over blockers
    intervals: list[tuple[float, float]] = []
    for segs, _starts in blockers:
        intervals.extend((s.t0, s.t1) for s in segs if s.state != "unshadowed")
    if not intervals:
        return 0.0
    intervals.sort()
    merged = [list(intervals[0])]
    for a, b in intervals[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    lengths = np.array([b - a for a, b in merged])
    if lengths.sum() <= 0:
        return 0.0
    j = rng.choice(len(merged), p=lengths / lengths.sum())
    t0 = rng.uniform(merged[j][0], merged[j][1])
    return float(sum(_loss_at(segs, starts, t0) for segs, starts in blockers))


def apply_blockage(
    snapshot: ChannelSnapshot, per_lobe_losses_db: dict[int, float]
) -> ChannelSnapshot:
    """Attenuate every MPC by its arrival lobe's sampled loss (in place)."""
    for mpc in snapshot.mpcs:
        loss = per_lobe_losses_db.get(mpc.lobe_id_rx, 0.0)
        if loss < 0:
            raise ValueError("blockage loss must be >= 0 dB")
        mpc.power_mw *= 10.0 ** (-loss / 10.0)
    snapshot.total_rx_power_mw = sum(m.power_mw for m in snapshot.mpcs)
    return snapshot
