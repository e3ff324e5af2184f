"""Evolve channel snapshots along a trajectory.

Large-scale terms follow the correlated maps; small-scale terms use geometric
updates: linear angle drift for the LOS ray and the multiple-reflection-
surfaces (MRS) construction for NLOS components, which treats each NLOS path
as a virtual LOS ray to a mirrored terminal. Segments are stitched with
one-cluster-per-snapshot birth/death transitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    C_M_PER_NS,
    TWO_PI,
    ChannelSnapshot,
    Mpc,
    SpatialLobe,
    TimeCluster,
    assign_powers,
    clamp_zenith,
    copy_snapshot,
    generate_snapshot,
    los_geometry,
    ut_position_at_distance,
    wrap_azimuth,
)
from .config import SimConfig, TrajectorySpec
from .pathloss import atmospheric_at, o2i_loss, path_loss_ci
from .rng import substream
from .spatial import GridMap, correlated_map, field_filter, los_condition_map, sample_map

_SIN_ZENITH_FLOOR = 1e-3


@dataclass
class MrsTag:
    """Virtual-LOS bookkeeping for one NLOS component.

    parity encodes the reflection-count dichotomy: with B = parity the angle
    relation  aoa = delta_rs + B*aod + ((1-B)/2)*pi  (mod 2pi) holds at init
    and is re-enforced after every update; the mirrored heading follows
    phi_vr = delta_rs + B*phi_v.
    """

    parity: int  # +1 or -1
    delta_rs_rad: float
    mirrored_heading_rad: float


@dataclass
class SegmentState:
    """One channel segment being evolved along the track."""

    segment_index: int
    start_index: int
    environment: str
    snapshot: ChannelSnapshot
    tags: list[MrsTag | None]


def trajectory_positions(spec: TrajectorySpec, start_xy=(0.0, 0.0)) -> np.ndarray:
    """Sample the track every update_distance_m; returns an (N, 2) array.

    Linear tracks run along the initial heading; hexagon tracks walk a partial
    hexagon clockwise, turning 60 degrees after every side_length_m.
    """
    if spec.track_length_m <= 0:
        raise ValueError("track_length_m must be > 0")
    step = spec.update_distance_m
    n_steps = int(round(spec.track_length_m / step))
    arc_targets = np.arange(n_steps + 1) * step

    # vertices of the walked polyline
    heading = math.radians(spec.heading_deg)
    side = spec.track_length_m if spec.track_type == "linear" else spec.side_length_m
    verts = [np.asarray(start_xy, dtype=float)]
    walked = 0.0
    while walked < spec.track_length_m - 1e-12:
        seg = min(side, spec.track_length_m - walked)
        verts.append(verts[-1] + seg * np.array([math.cos(heading), math.sin(heading)]))
        walked += seg
        heading -= math.radians(60.0)  # clockwise turn (no-op beyond the last vertex)

    positions = np.empty((n_steps + 1, 2))
    vi = 0
    seg_start_arc = 0.0
    for k, s in enumerate(arc_targets):
        while vi < len(verts) - 2 and s > seg_start_arc + np.linalg.norm(
            verts[vi + 1] - verts[vi]
        ) + 1e-9:
            seg_start_arc += float(np.linalg.norm(verts[vi + 1] - verts[vi]))
            vi += 1
        d = verts[vi + 1] - verts[vi]
        seg_len = float(np.linalg.norm(d))
        frac = min(1.0, (s - seg_start_arc) / seg_len) if seg_len > 0 else 0.0
        positions[k] = verts[vi] + frac * d
    return positions


def los_angle_rates(az: float, zen: float, r_m: float, velocity) -> tuple[float, float]:
    """Angular drift rates of the direction from an observer to a far point.

    velocity is the far point's velocity relative to the observer; the
    azimuth rate is frozen near the poles where it is singular.
    """
    if r_m <= 0:
        raise ValueError("range must be > 0")
    vx, vy, vz = velocity
    sin_zen = math.sin(zen)
    if abs(sin_zen) < _SIN_ZENITH_FLOOR:
        s_az = 0.0
    else:
        s_az = (vy * math.cos(az) - vx * math.sin(az)) / (r_m * sin_zen)
    s_zen = (
        vx * math.cos(az) * math.cos(zen)
        + vy * math.sin(az) * math.cos(zen)
        - vz * sin_zen
    ) / r_m
    return s_az, s_zen


def update_los_angles(
    angles: tuple[float, float, float, float],
    velocity_mps,
    r_m: float,
    dt_s: float,
) -> tuple[float, float, float, float]:
    """Linear drift of (aod, zod, aoa, zoa) for a LOS ray over one step.

    Departure angles see the terminal moving with +v; arrival angles, observed
    from the moving terminal, see the static end recede with -v.
    """
    aod, zod, aoa, zoa = angles
    vx, vy, vz = (float(velocity_mps[0]), float(velocity_mps[1]), float(velocity_mps[2]))
    s_aod, s_zod = los_angle_rates(aod, zod, r_m, (vx, vy, vz))
    s_aoa, s_zoa = los_angle_rates(aoa, zoa, r_m, (-vx, -vy, -vz))
    return (
        wrap_azimuth(aod + s_aod * dt_s),
        clamp_zenith(zod + s_zod * dt_s),
        wrap_azimuth(aoa + s_aoa * dt_s),
        clamp_zenith(zoa + s_zoa * dt_s),
    )


def mrs_consistent_aoa(tag: MrsTag, aod_rad: float) -> float:
    """Arrival azimuth implied by the MRS relation for the current departure."""
    return wrap_azimuth(
        tag.delta_rs_rad + tag.parity * aod_rad + (1 - tag.parity) / 2 * math.pi
    )


def mrs_mirrored_heading(tag: MrsTag, heading_rad: float) -> float:
    return wrap_azimuth(tag.delta_rs_rad + tag.parity * heading_rad)


def init_mrs_tags(
    snapshot: ChannelSnapshot, heading_rad: float, rng: np.random.Generator
) -> list[MrsTag | None]:
    """Draw a reflection parity per non-LOS MPC and infer its aggregate surface
    angle from the initial arrival/departure azimuths."""
    tags: list[MrsTag | None] = []
    for mpc in snapshot.mpcs:
        if mpc.is_los:
            tags.append(None)
            continue
        parity = int(rng.choice((-1, 1)))
        delta = wrap_azimuth(
            mpc.aoa_rad - parity * mpc.aod_rad - (1 - parity) / 2 * math.pi
        )
        tag = MrsTag(parity, delta, 0.0)
        tag.mirrored_heading_rad = mrs_mirrored_heading(tag, heading_rad)
        tags.append(tag)
    return tags


def update_nlos_mpc(
    mpc: Mpc,
    tag: MrsTag,
    velocity_mps,
    r_virtual_m: float,
    dt_s: float,
    heading_rad: float,
) -> Mpc:
    """One geometric update of an NLOS component via its virtual LOS ray.

    The departure side watches the mirrored terminal move with the mirrored
    heading; the arrival azimuth is re-enforced through the MRS relation so
    the tag invariant holds exactly, and both zeniths drift with the LOS
    formulas at the virtual range.
    """
    speed = math.hypot(float(velocity_mps[0]), float(velocity_mps[1]))
    tag.mirrored_heading_rad = mrs_mirrored_heading(tag, heading_rad)
    v_mirror = (
        speed * math.cos(tag.mirrored_heading_rad),
        speed * math.sin(tag.mirrored_heading_rad),
        float(velocity_mps[2]),
    )
    s_aod, s_zod = los_angle_rates(mpc.aod_rad, mpc.zod_rad, r_virtual_m, v_mirror)
    mpc.aod_rad = wrap_azimuth(mpc.aod_rad + s_aod * dt_s)
    mpc.zod_rad = clamp_zenith(mpc.zod_rad + s_zod * dt_s)
    v_true = (float(velocity_mps[0]), float(velocity_mps[1]), float(velocity_mps[2]))
    _, s_zoa = los_angle_rates(
        mpc.aoa_rad, mpc.zoa_rad, r_virtual_m, (-v_true[0], -v_true[1], -v_true[2])
    )
    mpc.zoa_rad = clamp_zenith(mpc.zoa_rad + s_zoa * dt_s)
    mpc.aoa_rad = mrs_consistent_aoa(tag, mpc.aod_rad)
    return mpc


def path_length_after_step(ell_m: float, step_m: float, cos_alpha: float) -> float:
    """Law of cosines for the new (virtual) path length after a step."""
    if ell_m <= 0:
        raise ValueError("path length must be > 0")
    return math.sqrt(max(0.0, ell_m**2 + step_m**2 - 2.0 * ell_m * step_m * cos_alpha))


def update_delay_phase(
    mpc: Mpc,
    step_m: float,
    heading_rad: float,
    f_ghz: float,
    tag: MrsTag | None = None,
) -> Mpc:
    """Advance an MPC's delay and phase from the path-length change.

    The step angle is taken between the arrival direction of the (virtual) LOS
    ray and the motion direction, mirrored for NLOS components; the phase
    advances by 2*pi per wavelength of path-length change.
    """
    ell = mpc.delay_ns * C_M_PER_NS
    if tag is None:
        cos_alpha = math.sin(mpc.zoa_rad) * math.cos(mpc.aoa_rad - heading_rad)
    else:
        virt_arrival_az = wrap_azimuth(mpc.aod_rad + math.pi)
        motion = mrs_mirrored_heading(tag, heading_rad)
        cos_alpha = math.sin(mpc.zod_rad) * math.cos(virt_arrival_az - motion)
    new_ell = path_length_after_step(ell, step_m, cos_alpha)
    _apply_path_length(mpc, new_ell, f_ghz)
    return mpc


def _apply_path_length(mpc: Mpc, new_ell_m: float, f_ghz: float) -> None:
    old_ell = mpc.delay_ns * C_M_PER_NS
    lam_m = C_M_PER_NS / f_ghz  # c[m/ns] / f[GHz] = wavelength in meters
    mpc.phase_rad = (mpc.phase_rad + TWO_PI * (new_ell_m - old_ell) / lam_m) % TWO_PI
    mpc.delay_ns = new_ell_m / C_M_PER_NS


def update_powers(snapshot: ChannelSnapshot, new_total_power_mw: float, cfg: SimConfig) -> None:
    """Redistribute cluster/subpath powers from the current excess delays and
    rescale to the new path-loss-implied total."""
    _redistribute(snapshot.mpcs, snapshot.clusters, new_total_power_mw, cfg)
    snapshot.total_rx_power_mw = new_total_power_mw


def _redistribute(
    mpcs: list[Mpc],
    clusters: list[TimeCluster],
    total_mw: float,
    cfg: SimConfig,
) -> None:
    if not mpcs:
        return
    tau0 = min(m.delay_ns for m in mpcs)
    cluster_excess = []
    intra = []
    for cl in clusters:
        delays = np.array([mpcs[i].delay_ns for i in cl.mpc_indices])
        cmin = delays.min()
        cluster_excess.append(cmin - tau0)
        intra.append(delays - cmin)
        cl.excess_delay_ns = float(cmin - tau0)
    powers = assign_powers(
        np.array(cluster_excess),
        intra,
        cfg.tcsl.cluster_decay_ns,
        cfg.tcsl.subpath_decay_ns,
        total_mw,
    )
    for cl, p in zip(clusters, powers):
        cl.power_fraction = float(p.sum() / total_mw)
        for idx, val in zip(cl.mpc_indices, p):
            mpcs[idx].power_mw = float(val)


def _compose_transition(
    old: ChannelSnapshot,
    new: ChannelSnapshot,
    ramp_step: int,
    cfg: SimConfig,
    total_mw: float,
) -> ChannelSnapshot:
    """Blend two segment snapshots at one ramp step.

    At step k (0-based) old clusters 0..k have died and new clusters 0..k have
    been born, so exactly one birth and at most one death happen per snapshot.
    """
    n_arr_old = sum(1 for lb in old.lobes if lb.side == "arrival")
    keep_old = [cl for cl in old.clusters if cl.id > ramp_step]
    keep_new = [cl for cl in new.clusters if cl.id <= ramp_step]

    mpcs: list[Mpc] = []
    clusters: list[TimeCluster] = []
    lobe_offset_dep = sum(1 for lb in old.lobes if lb.side == "departure")
    for src, cls, is_new in ((old, keep_old, False), (new, keep_new, True)):
        for cl in cls:
            out_cl = TimeCluster(len(clusters), cl.excess_delay_ns, 0.0)
            for i in cl.mpc_indices:
                m = src.mpcs[i]
                clone = Mpc(**{k: getattr(m, k) for k in m.__dataclass_fields__})
                clone.cluster_id = out_cl.id
                if is_new:
                    clone.lobe_id_tx += lobe_offset_dep
                    clone.lobe_id_rx += n_arr_old
                out_cl.mpc_indices.append(len(mpcs))
                mpcs.append(clone)
            clusters.append(out_cl)

    lobes = list(old.lobes) + [
        SpatialLobe(
            lb.id + (lobe_offset_dep if lb.side == "departure" else n_arr_old),
            lb.side,
            lb.center_azimuth_rad,
            lb.angular_spread_deg,
        )
        for lb in new.lobes
    ]
    snap = ChannelSnapshot(
        position_m=new.position_m,
        mpcs=mpcs,
        clusters=clusters,
        lobes=lobes,
        pathloss=new.pathloss,
        total_rx_power_mw=total_mw,
        environment=new.environment,
    )
    _redistribute(snap.mpcs, snap.clusters, total_mw, cfg)
    return snap


def segment_transition(
    old_segment_final: ChannelSnapshot,
    new_segment_initial: ChannelSnapshot,
    n_ramp_snapshots: int | None = None,
    cfg: SimConfig | None = None,
) -> list[ChannelSnapshot]:
    """Cluster birth/death schedule connecting two segments.

    Returns one blended snapshot per ramp step; ramp length defaults to the
    larger cluster count so unequal counts degenerate into solo births or
    deaths, still one cluster event per snapshot.
    """
    cfg = cfg or SimConfig()
    n_old = len(old_segment_final.clusters)
    n_new = len(new_segment_initial.clusters)
    steps = n_ramp_snapshots if n_ramp_snapshots is not None else max(n_old, n_new)
    return [
        _compose_transition(
            old_segment_final,
            new_segment_initial,
            k,
            cfg,
            new_segment_initial.total_rx_power_mw,
        )
        for k in range(steps)
    ]


def _snapshot_pathloss(
    cfg: SimConfig,
    position: tuple[float, float, float],
    environment: str,
    sf_db: float,
    o2i_db: float,
):
    bs = (0.0, 0.0, cfg.bs_height_m)
    d3 = math.dist(bs, position)
    return path_loss_ci(
        cfg.carrier_freq_ghz,
        max(1.0, d3),
        cfg.pathloss_exponent(environment),
        at_db=atmospheric_at(d3, cfg.atmospheric_rate_db_per_km),
        sf_db=sf_db,
        o2i_db=o2i_db,
    )


def _advance_snapshot(
    snap: ChannelSnapshot,
    tags: list[MrsTag | None],
    new_pos: tuple[float, float, float],
    velocity,
    dt_s: float,
    cfg: SimConfig,
) -> None:
    """Move one snapshot state forward by one update step (in place)."""
    bs = (0.0, 0.0, cfg.bs_height_m)
    heading = math.atan2(velocity[1], velocity[0])
    step_m = math.hypot(velocity[0], velocity[1]) * dt_s
    d3_new = los_geometry(bs, new_pos)[4]
    for mpc, tag in zip(snap.mpcs, tags):
        if mpc.is_los:
            r = math.dist(bs, snap.position_m)
            mpc.aod_rad, mpc.zod_rad, mpc.aoa_rad, mpc.zoa_rad = update_los_angles(
                (mpc.aod_rad, mpc.zod_rad, mpc.aoa_rad, mpc.zoa_rad),
                velocity,
                r,
                dt_s,
            )
            _apply_path_length(mpc, d3_new, cfg.carrier_freq_ghz)
        else:
            r_virtual = mpc.delay_ns * C_M_PER_NS
            update_nlos_mpc(mpc, tag, velocity, r_virtual, dt_s, heading)
            update_delay_phase(mpc, step_m, heading, cfg.carrier_freq_ghz, tag)
    snap.position_m = new_pos


class TrackEvolution:
    """Orchestrates a spatially consistent run over one trajectory."""

    def __init__(self, cfg: SimConfig, run_index: int = 0, iid_sf: bool = False):
        self.cfg = cfg
        self.run_index = run_index
        self.iid_sf = iid_sf
        self.sf_rng = substream(cfg.seed, "sf-map", run_index)
        self.los_rng = substream(cfg.seed, "los-map", run_index)
        self.tcsl_rng = substream(cfg.seed, "tcsl", run_index)
        self.mrs_rng = substream(cfg.seed, "mrs-tags", run_index)
        self.sf_map: GridMap | None = None
        self.los_map: GridMap | None = None

    def _build_maps(self) -> None:
        cfg = self.cfg
        extent = int(round(cfg.map_extent_m))
        origin = (-extent / 2.0, -extent / 2.0)
        n = extent + 1
        env_for_dco = cfg.environment if cfg.environment != "auto" else "LOS"
        sf_filter = field_filter(cfg.sf_corr_dist_m(env_for_dco), 1.0)
        # unit-variance field; scaled by the per-segment sigma at sample time
        self.sf_map = correlated_map(n, n, 1.0, sf_filter, self.sf_rng, origin)
        if cfg.environment == "auto":
            los_filter = field_filter(cfg.los_corr_dist_m, 1.0)
            self.los_map = los_condition_map(
                n, n, cfg.p_los, los_filter, self.los_rng, origin
            )

    def _environment_at(self, position) -> str:
        if self.cfg.environment != "auto":
            return self.cfg.environment
        return "LOS" if sample_map(self.los_map, position) >= 0.5 else "NLOS"

    def _sf_at(self, position, environment: str) -> float:
        sigma = self.cfg.sigma_sf_db(environment)
        if self.iid_sf:
            return float(self.sf_rng.normal(0.0, sigma))
        return sigma * sample_map(self.sf_map, position)

    def run(self) -> list[ChannelSnapshot]:
        cfg = self.cfg
        o2i_db = 0.0
        if cfg.o2i.enabled:
            o2i_db = o2i_loss(
                cfg.carrier_freq_ghz, cfg.o2i, substream(cfg.seed, "o2i", self.run_index)
            )

        start3 = ut_position_at_distance(cfg, cfg.tr_distance_m)
        start = (start3[0], start3[1])
        if cfg.trajectory.track_length_m <= 0:
            self._build_maps()
            pos3 = start3
            env = self._environment_at(start)
            pl = _snapshot_pathloss(cfg, pos3, env, self._sf_at(start, env), o2i_db)
            return [generate_snapshot(cfg, pl, env, self.tcsl_rng, pos3)]

        positions = trajectory_positions(cfg.trajectory, start)
        self._build_maps()
        half = cfg.map_extent_m / 2.0
        if np.any(np.abs(positions) > half):
            raise ValueError(
                "trajectory exits map extent; increase map_extent_m or shorten the track"
            )

        step = cfg.trajectory.update_distance_m
        dt = step / cfg.trajectory.speed_mps
        per_seg = max(1, int(round(cfg.trajectory.segment_length_m / step)))
        n = len(positions)

        out: list[ChannelSnapshot] = []
        current: SegmentState | None = None
        prev: SegmentState | None = None
        ramp_len = 0
        ramp_done = 0

        for i in range(n):
            pos3 = (float(positions[i][0]), float(positions[i][1]), cfg.ut_height_m)
            new_segment = i % per_seg == 0
            if i > 0:
                velocity = (
                    (positions[i][0] - positions[i - 1][0]) / dt,
                    (positions[i][1] - positions[i - 1][1]) / dt,
                    0.0,
                )
                heading = math.atan2(velocity[1], velocity[0])
            else:
                velocity = (0.0, 0.0, 0.0)
                heading = math.radians(cfg.trajectory.heading_deg)

            if new_segment:
                env = self._environment_at(positions[i])
                pl = _snapshot_pathloss(cfg, pos3, env, self._sf_at(positions[i], env), o2i_db)
                snap = generate_snapshot(cfg, pl, env, self.tcsl_rng, pos3)
                tags = init_mrs_tags(snap, heading, self.mrs_rng)
                prev = current
                current = SegmentState(i // per_seg, i, env, snap, tags)
                if prev is not None:
                    _advance_snapshot(prev.snapshot, prev.tags, pos3, velocity, dt, cfg)
                    ramp_len = min(
                        per_seg, max(len(prev.snapshot.clusters), len(snap.clusters))
                    )
                    ramp_done = 0
            else:
                # advance the active segment state
                env = current.environment
                pl = _snapshot_pathloss(cfg, pos3, env, self._sf_at(positions[i], env), o2i_db)
                _advance_snapshot(current.snapshot, current.tags, pos3, velocity, dt, cfg)
                current.snapshot.pathloss = pl
                new_total = 10.0 ** ((cfg.tx_power_dbm - pl.total_db) / 10.0)
                update_powers(current.snapshot, new_total, cfg)
                if prev is not None and ramp_done < ramp_len:
                    _advance_snapshot(prev.snapshot, prev.tags, pos3, velocity, dt, cfg)

            if prev is not None and ramp_done < ramp_len:
                out.append(
                    _compose_transition(
                        prev.snapshot,
                        current.snapshot,
                        ramp_done,
                        cfg,
                        current.snapshot.total_rx_power_mw,
                    )
                )
                ramp_done += 1
                if ramp_done >= ramp_len:
                    prev = None
            else:
                out.append(copy_snapshot(current.snapshot))
        return out


def run_spatially_consistent(
    cfg: SimConfig, run_index: int = 0, iid_sf: bool = False
) -> list[ChannelSnapshot]:
    """Generate the ordered snapshots of one spatially consistent run.

    iid_sf replaces the correlated shadow-fading map with independent draws at
    every snapshot (the drop-style comparison case).
    """
    return TrackEvolution(cfg, run_index, iid_sf).run()
