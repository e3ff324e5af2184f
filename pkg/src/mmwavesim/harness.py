"""Monte Carlo orchestration, outage statistics and file exports."""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .antenna import boresights, directional_snapshot
from .blockage import lobe_equivalent_beamwidth, sample_blockage_loss, apply_blockage
from .channel import (
    ChannelSnapshot,
    copy_snapshot,
    generate_snapshot,
    omni_pdp,
    ut_position_at_distance,
)
from .config import SimConfig, config_to_flat, validate_config
from .consistency import _snapshot_pathloss, run_spatially_consistent
from .pathloss import o2i_loss, snr_db
from .rng import substream
from .spatial import GridMap, correlated_map, field_filter, los_condition_map

OUTAGE_THRESHOLD_DB = -5.0
DEFAULT_DISTANCE_RANGE_M = (100.0, 500.0)
PERCENTILES = (1, 5, 10, 25, 50, 75, 90, 95, 99)


@dataclass
class RunResult:
    """Everything observable from one Monte Carlo drop."""

    run_index: int
    distance_m: float
    environment: str
    snapshot: ChannelSnapshot
    omni_power_dbm: float
    dir_power_dbm: float
    omni_blockage_db: dict[int, float] = field(default_factory=dict)
    dir_blockage_db: float = 0.0
    omni_power_blocked_dbm: float = 0.0
    dir_power_blocked_dbm: float = 0.0
    snr_omni_db: float = 0.0
    snr_dir_db: float = 0.0
    o2i_db: float = 0.0


@dataclass
class OutageReport:
    """Outage fraction and SNR percentiles over a Monte Carlo sweep."""

    threshold_db: float
    outage_fraction: float
    snr_percentiles: dict[int, float]
    n_runs: int
    with_blockage: bool
    seed: int


def _draw_environment(cfg: SimConfig, rng: np.random.Generator) -> str:
    if cfg.environment != "auto":
        return cfg.environment
    return "LOS" if rng.uniform() < cfg.p_los else "NLOS"


def run_drop_mode(cfg: SimConfig, run_index: int = 0, distance_m: float | None = None) -> RunResult:
    """One independent drop: fresh i.i.d. shadow fading and channel draw.

    Optional blockage attenuates the omnidirectional channel per arrival lobe
    and the directional channel once per beam, with independent draws.
    """
    harness_rng = substream(cfg.seed, "harness", run_index)
    d = distance_m if distance_m is not None else cfg.tr_distance_m
    env = _draw_environment(cfg, harness_rng)

    sf_rng = substream(cfg.seed, "sf-map", run_index)
    sf = float(sf_rng.normal(0.0, cfg.sigma_sf_db(env)))
    o2i_db = 0.0
    if cfg.o2i.enabled:
        o2i_db = o2i_loss(cfg.carrier_freq_ghz, cfg.o2i, substream(cfg.seed, "o2i", run_index))

    position = ut_position_at_distance(cfg, d)
    pl = _snapshot_pathloss(cfg, position, env, sf, o2i_db)
    snapshot = generate_snapshot(cfg, pl, env, substream(cfg.seed, "tcsl", run_index), position)
    directional = directional_snapshot(snapshot, cfg.antenna)

    omni_dbm = snapshot.total_power_dbm()
    dir_dbm = directional.total_power_dbm()

    per_lobe: dict[int, float] = {}
    dir_loss = 0.0
    omni_blocked_dbm = omni_dbm
    dir_blocked_dbm = dir_dbm
    if cfg.blockage.enabled:
        # Stationary trace sampling: most instants are unshadowed, so the
        # link-budget view draws the loss at a random instant of the window.
        blk_rng = substream(cfg.seed, "blockage", run_index)
        for lobe in snapshot.lobes:
            if lobe.side != "arrival":
                continue
            width = lobe_equivalent_beamwidth(lobe)
            per_lobe[lobe.id] = sample_blockage_loss(
                cfg.blockage, width, blk_rng, within_event=False
            )
        blocked = apply_blockage(copy_snapshot(snapshot), per_lobe)
        omni_blocked_dbm = blocked.total_power_dbm()
        dir_loss = sample_blockage_loss(
            cfg.blockage, cfg.antenna.rx_az_hpbw_deg, blk_rng, within_event=False
        )
        dir_blocked_dbm = dir_dbm - dir_loss

    return RunResult(
        run_index=run_index,
        distance_m=d,
        environment=env,
        snapshot=snapshot,
        omni_power_dbm=omni_dbm,
        dir_power_dbm=dir_dbm,
        omni_blockage_db=per_lobe,
        dir_blockage_db=dir_loss,
        omni_power_blocked_dbm=omni_blocked_dbm,
        dir_power_blocked_dbm=dir_blocked_dbm,
        snr_omni_db=snr_db(omni_blocked_dbm, cfg.bandwidth_mhz, cfg.noise_figure_db),
        snr_dir_db=snr_db(dir_blocked_dbm, cfg.bandwidth_mhz, cfg.noise_figure_db),
        o2i_db=o2i_db,
    )


def run_drop_sweep(cfg: SimConfig) -> list[RunResult]:
    cfg = validate_config(cfg)
    return [run_drop_mode(cfg, r) for r in range(cfg.num_runs)]


def monte_carlo_outage(
    cfg: SimConfig,
    n_runs: int | None = None,
    distance_range_m: tuple[float, float] = DEFAULT_DISTANCE_RANGE_M,
    with_blockage: bool = False,
) -> OutageReport:
    """Directional-SNR outage over uniformly drawn T-R distances.

    The channel substreams depend only on (seed, run_index), so reports with
    and without blockage are matched pairs and blockage can only worsen them.
    """
    cfg = validate_config(cfg)
    n = n_runs if n_runs is not None else cfg.num_runs
    if n < 1:
        raise ValueError("n_runs must be >= 1")
    cfg_run = dataclasses.replace(
        cfg, blockage=dataclasses.replace(cfg.blockage, enabled=with_blockage)
    )
    lo, hi = distance_range_m
    snrs = np.empty(n)
    for r in range(n):
        d = float(substream(cfg.seed, "harness", r).uniform(lo, hi))
        snrs[r] = run_drop_mode(cfg_run, r, distance_m=d).snr_dir_db
    return OutageReport(
        threshold_db=OUTAGE_THRESHOLD_DB,
        outage_fraction=float(np.mean(snrs < OUTAGE_THRESHOLD_DB)),
        snr_percentiles={p: float(np.percentile(snrs, p)) for p in PERCENTILES},
        n_runs=n,
        with_blockage=with_blockage,
        seed=cfg.seed,
    )


def blockage_cdf(
    cfg: SimConfig,
    n_samples: int,
    channel_kind: str,
    hpbw_deg: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sampled shadowing-loss CDF for one channel kind.

    channel_kind: 'omni-los' / 'omni-nlos' use the scenario spatial-lobe
    widths; 'dir' uses hpbw_deg or the configured RX azimuth HPBW.
    Returns (sorted losses, cdf).
    """
    cfg = validate_config(cfg)
    if not cfg.blockage.enabled:
        raise ValueError("blockage must be enabled for blockage_cdf")
    if channel_kind == "omni-los":
        width = 6.0 * cfg.tcsl.lobe_spread_los_deg
    elif channel_kind == "omni-nlos":
        width = 6.0 * cfg.tcsl.lobe_spread_nlos_deg
    elif channel_kind == "dir":
        width = hpbw_deg if hpbw_deg is not None else cfg.antenna.rx_az_hpbw_deg
    else:
        raise ValueError(f"unknown channel kind {channel_kind!r}")
    rng = substream(cfg.seed, "blockage")
    losses = np.sort([sample_blockage_loss(cfg.blockage, width, rng) for _ in range(n_samples)])
    cdf = np.arange(1, n_samples + 1) / n_samples
    return losses, cdf


def run_track(cfg: SimConfig, run_index: int = 0, iid_sf: bool = False) -> list[ChannelSnapshot]:
    cfg = validate_config(cfg)
    return run_spatially_consistent(cfg, run_index, iid_sf)


# ------------------------------ file exports ------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


MPC_HEADER = [
    "run", "snapshot", "pos_x_m", "pos_y_m", "delay_ns", "power_dbm", "phase_rad",
    "aod_deg", "zod_deg", "aoa_deg", "zoa_deg", "cluster", "lobe_tx", "lobe_rx", "is_los",
]

PDP_HEADER = ["snapshot", "pos_x_m", "pos_y_m", "delay_bin_ns", "power_dbm"]


def _mpc_rows(run: int, snap_idx: int, snap: ChannelSnapshot):
    for m in snap.mpcs:
        yield (
            run, snap_idx, snap.position_m[0], snap.position_m[1],
            m.delay_ns, 10.0 * math.log10(m.power_mw) if m.power_mw > 0 else float("-inf"),
            m.phase_rad, math.degrees(m.aod_rad), math.degrees(m.zod_rad),
            math.degrees(m.aoa_rad), math.degrees(m.zoa_rad),
            m.cluster_id, m.lobe_id_tx, m.lobe_id_rx, int(m.is_los),
        )


def export_map(gmap: GridMap, path: str, meta: dict) -> None:
    """CSV matrix (one row per y line) plus a sidecar metadata file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in gmap.values:
            fh.write(",".join(f"{v:.6g}" for v in row) + "\n")
    sidecar = dict(meta)
    sidecar.update(
        origin_x_m=gmap.origin_m[0],
        origin_y_m=gmap.origin_m[1],
        granularity_m=gmap.granularity_m,
        width=gmap.width,
        height=gmap.height,
        kind=gmap.kind,
    )
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: str, cfg: SimConfig, command: str, files: list[str]) -> None:
    manifest = {
        "command": command,
        "config": {k: v for k, v in config_to_flat(cfg).items()},
        "seed": cfg.seed,
        "files": sorted(files),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_drop_results(results: list[RunResult], out_dir: str, cfg: SimConfig,
                        pdp_bin_ns: float = 5.0) -> list[str]:
    """Write per-run summaries, MPC tables and PDPs for drop-mode results."""
    os.makedirs(out_dir, exist_ok=True)
    files = []
    if not results:
        _write_manifest(out_dir, cfg, "drop", ["manifest.json"])
        return ["manifest.json"]

    run_rows = [
        (
            r.run_index, r.distance_m, r.environment, r.o2i_db,
            r.omni_power_dbm, r.dir_power_dbm,
            r.omni_power_blocked_dbm, r.dir_power_blocked_dbm, r.dir_blockage_db,
            r.snr_omni_db, r.snr_dir_db,
        )
        for r in results
    ]
    _write_csv(
        os.path.join(out_dir, "runs.csv"),
        ["run", "distance_m", "environment", "o2i_db", "omni_power_dbm", "dir_power_dbm",
         "omni_power_blocked_dbm", "dir_power_blocked_dbm", "dir_blockage_db",
         "snr_omni_db", "snr_dir_db"],
        run_rows,
    )
    files.append("runs.csv")

    mpc_rows = []
    pdp_rows = []
    for r in results:
        mpc_rows.extend(_mpc_rows(r.run_index, 0, r.snapshot))
        for delay, p_db in omni_pdp(r.snapshot, pdp_bin_ns):
            pdp_rows.append((r.run_index, r.snapshot.position_m[0], r.snapshot.position_m[1], delay, p_db))
    _write_csv(os.path.join(out_dir, "mpcs.csv"), MPC_HEADER, mpc_rows)
    files.append("mpcs.csv")
    _write_csv(os.path.join(out_dir, "pdp.csv"), ["run"] + PDP_HEADER[1:], pdp_rows)
    files.append("pdp.csv")

    _write_manifest(out_dir, cfg, "drop", files + ["manifest.json"])
    return files + ["manifest.json"]


def export_track_results(snapshots: list[ChannelSnapshot], out_dir: str, cfg: SimConfig,
                         pdp_bin_ns: float = 5.0) -> list[str]:
    """Write consecutive omni/directional PDPs, MPC/angle tracks and map dumps."""
    os.makedirs(out_dir, exist_ok=True)
    files = []

    mpc_rows = []
    pdp_rows = []
    dir_pdp_rows = []
    boresight_rows = []
    for i, snap in enumerate(snapshots):
        mpc_rows.extend(_mpc_rows(0, i, snap))
        for delay, p_db in omni_pdp(snap, pdp_bin_ns):
            pdp_rows.append((i, snap.position_m[0], snap.position_m[1], delay, p_db))
        directional = directional_snapshot(snap, cfg.antenna)
        for delay, p_db in omni_pdp(directional, pdp_bin_ns):
            dir_pdp_rows.append((i, snap.position_m[0], snap.position_m[1], delay, p_db))
        (tx_az, tx_zen), (rx_az, rx_zen) = boresights(snap, cfg.antenna)
        boresight_rows.append(
            (i, math.degrees(tx_az), math.degrees(tx_zen), math.degrees(rx_az), math.degrees(rx_zen))
        )

    _write_csv(os.path.join(out_dir, "mpcs.csv"), MPC_HEADER, mpc_rows)
    _write_csv(os.path.join(out_dir, "pdp.csv"), PDP_HEADER, pdp_rows)
    _write_csv(os.path.join(out_dir, "dir_pdp.csv"), PDP_HEADER, dir_pdp_rows)
    _write_csv(
        os.path.join(out_dir, "boresights.csv"),
        ["snapshot", "tx_az_deg", "tx_zen_deg", "rx_az_deg", "rx_zen_deg"],
        boresight_rows,
    )
    files += ["mpcs.csv", "pdp.csv", "dir_pdp.csv", "boresights.csv"]

    powers = [
        (i, s.position_m[0], s.position_m[1], s.pathloss.total_db, s.total_power_dbm(), s.environment)
        for i, s in enumerate(snapshots)
    ]
    _write_csv(
        os.path.join(out_dir, "track.csv"),
        ["snapshot", "pos_x_m", "pos_y_m", "pathloss_db", "power_dbm", "environment"],
        powers,
    )
    files.append("track.csv")

    files += export_maps(out_dir, cfg)
    _write_manifest(out_dir, cfg, "track", files + ["manifest.json"])
    return files + ["manifest.json"]


def export_maps(out_dir: str, cfg: SimConfig, run_index: int = 0) -> list[str]:
    """Dump the SF map (configured environment) and, when relevant, the LOS map."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = validate_config(cfg)
    files = []
    extent = int(round(cfg.map_extent_m))
    origin = (-extent / 2.0, -extent / 2.0)
    n = extent + 1
    env = cfg.environment if cfg.environment != "auto" else "LOS"
    sf_map = correlated_map(
        n, n, cfg.sigma_sf_db(env),
        field_filter(cfg.sf_corr_dist_m(env), 1.0),
        substream(cfg.seed, "sf-map", run_index), origin,
    )
    export_map(sf_map, os.path.join(out_dir, "sf_map.csv"),
               {"seed": cfg.seed, "sigma_db": cfg.sigma_sf_db(env), "environment": env})
    files.append("sf_map.csv")
    if cfg.environment == "auto":
        los_map = los_condition_map(
            n, n, cfg.p_los, field_filter(cfg.los_corr_dist_m, 1.0),
            substream(cfg.seed, "los-map", run_index), origin,
        )
        export_map(los_map, os.path.join(out_dir, "los_map.csv"),
                   {"seed": cfg.seed, "p_los": cfg.p_los})
        files.append("los_map.csv")
    return files


def export_outage(reports: list[OutageReport], out_dir: str, cfg: SimConfig) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    payload = [
        {
            "threshold_db": r.threshold_db,
            "outage_fraction": r.outage_fraction,
            "snr_percentiles": {str(k): v for k, v in r.snr_percentiles.items()},
            "n_runs": r.n_runs,
            "with_blockage": r.with_blockage,
            "seed": r.seed,
        }
        for r in reports
    ]
    with open(os.path.join(out_dir, "outage.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, cfg, "outage", ["outage.json", "manifest.json"])
    return ["outage.json", "manifest.json"]


def export_blockage_cdf(losses: np.ndarray, cdf: np.ndarray, out_dir: str, cfg: SimConfig,
                        kind: str, dump_trace: bool = False) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    name = f"blockage_cdf_{kind.replace(':', '_')}.csv"
    _write_csv(os.path.join(out_dir, name), ["loss_db", "cdf"], zip(losses, cdf))
    files = [name, "manifest.json"]
    if dump_trace:
        files.insert(1, export_blockage_trace(out_dir, cfg, kind))
    _write_manifest(out_dir, cfg, f"blockage-cdf {kind}", files)
    return files


def export_blockage_trace(out_dir: str, cfg: SimConfig, kind: str) -> str:
    """Dump one sample single-blocker trace as (t_s, state, loss_db) rows."""
    from .blockage import STATES, rates_for_beamwidth, simulate_trace

    if kind == "omni-los":
        width = 6.0 * cfg.tcsl.lobe_spread_los_deg
    elif kind == "omni-nlos":
        width = 6.0 * cfg.tcsl.lobe_spread_nlos_deg
    else:
        width = cfg.antenna.rx_az_hpbw_deg
    params = rates_for_beamwidth(width, cfg.blockage)
    trace = simulate_trace(
        params, cfg.blockage.trace_duration_s, cfg.blockage.dt_s,
        substream(cfg.seed, "blockage", 1), cfg.blockage.att_event_sigma_db,
    )
    name = "blockage_trace.csv"
    rows = (
        (k * trace.dt_s, STATES[trace.states[k]], trace.loss_db[k])
        for k in range(len(trace.loss_db))
    )
    _write_csv(os.path.join(out_dir, name), ["t_s", "state", "loss_db"], rows)
    return name
