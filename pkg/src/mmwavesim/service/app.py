"""FastAPI service wrapping the simulator core.

Endpoints mirror the CLI subcommands; request bodies carry flat config
overrides and responses are JSON summaries instead of CSV files.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from .. import __version__, harness
from ..channel import ChannelSnapshot
from ..config import ConfigError, SimConfig, config_from_flat, config_to_flat, validate_config
from ..rng import substream
from ..spatial import correlated_map, field_filter, los_condition_map
from .schemas import (
    BlockageCdfRequest,
    BlockageCdfResponse,
    DropRequest,
    DropResponse,
    DropRunModel,
    HealthResponse,
    MapsRequest,
    MapsResponse,
    MapStats,
    MpcModel,
    OutageRequest,
    OutageResponse,
    SnapshotModel,
    TrackRequest,
    TrackResponse,
)


def _config_from(overrides: dict) -> SimConfig:
    try:
        return validate_config(config_from_flat(overrides))
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _mpc_models(snapshot: ChannelSnapshot) -> list[MpcModel]:
    return [
        MpcModel(
            power_dbm=10.0 * math.log10(m.power_mw) if m.power_mw > 0 else -math.inf,
            delay_ns=m.delay_ns,
            phase_rad=m.phase_rad,
            aod_deg=math.degrees(m.aod_rad),
            zod_deg=math.degrees(m.zod_rad),
            aoa_deg=math.degrees(m.aoa_rad),
            zoa_deg=math.degrees(m.zoa_rad),
            cluster_id=m.cluster_id,
            lobe_id_tx=m.lobe_id_tx,
            lobe_id_rx=m.lobe_id_rx,
            is_los=m.is_los,
        )
        for m in snapshot.mpcs
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="mmwavesim", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/config/defaults")
    def config_defaults() -> dict:
        return config_to_flat(SimConfig())

    @app.post("/simulate/drop", response_model=DropResponse)
    def simulate_drop(req: DropRequest) -> DropResponse:
        cfg = _config_from(req.config)
        results = harness.run_drop_sweep(cfg)
        runs = [
            DropRunModel(
                run_index=r.run_index,
                distance_m=r.distance_m,
                environment=r.environment,
                o2i_db=r.o2i_db,
                omni_power_dbm=r.omni_power_dbm,
                dir_power_dbm=r.dir_power_dbm,
                omni_power_blocked_dbm=r.omni_power_blocked_dbm,
                dir_power_blocked_dbm=r.dir_power_blocked_dbm,
                dir_blockage_db=r.dir_blockage_db,
                snr_omni_db=r.snr_omni_db,
                snr_dir_db=r.snr_dir_db,
                mpcs=_mpc_models(r.snapshot) if req.include_mpcs else None,
            )
            for r in results
        ]
        return DropResponse(runs=runs)

    @app.post("/simulate/track", response_model=TrackResponse)
    def simulate_track(req: TrackRequest) -> TrackResponse:
        cfg = _config_from(req.config)
        try:
            snapshots = harness.run_track(cfg, iid_sf=req.iid_sf)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return TrackResponse(
            snapshots=[
                SnapshotModel(
                    snapshot=i,
                    pos_x_m=s.position_m[0],
                    pos_y_m=s.position_m[1],
                    environment=s.environment,
                    pathloss_db=s.pathloss.total_db,
                    power_dbm=s.total_power_dbm(),
                    n_mpcs=len(s.mpcs),
                    mpcs=_mpc_models(s) if req.include_mpcs else None,
                )
                for i, s in enumerate(snapshots)
            ]
        )

    @app.post("/analysis/outage", response_model=OutageResponse)
    def analysis_outage(req: OutageRequest) -> OutageResponse:
        cfg = _config_from(req.config)
        try:
            report = harness.monte_carlo_outage(
                cfg, req.n_runs, (req.dist_min_m, req.dist_max_m), req.with_blockage
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return OutageResponse(
            threshold_db=report.threshold_db,
            outage_fraction=report.outage_fraction,
            snr_percentiles=report.snr_percentiles,
            n_runs=report.n_runs,
            with_blockage=report.with_blockage,
            seed=report.seed,
        )

    @app.post("/analysis/blockage-cdf", response_model=BlockageCdfResponse)
    def analysis_blockage_cdf(req: BlockageCdfRequest) -> BlockageCdfResponse:
        overrides = dict(req.config)
        overrides.setdefault("blockage_enabled", True)
        cfg = _config_from(overrides)
        try:
            losses, cdf = harness.blockage_cdf(cfg, req.n_samples, req.kind, req.hpbw_deg)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return BlockageCdfResponse(kind=req.kind, loss_db=list(losses), cdf=list(cdf))

    @app.post("/maps", response_model=MapsResponse)
    def maps(req: MapsRequest) -> MapsResponse:
        cfg = _config_from(req.config)
        extent = int(round(cfg.map_extent_m))
        origin = (-extent / 2.0, -extent / 2.0)
        n = extent + 1
        env = cfg.environment if cfg.environment != "auto" else "LOS"
        sf = correlated_map(
            n, n, cfg.sigma_sf_db(env),
            field_filter(cfg.sf_corr_dist_m(env), 1.0),
            substream(cfg.seed, "sf-map"), origin,
        )

        def stats(gmap, include):
            return MapStats(
                kind=gmap.kind,
                width=gmap.width,
                height=gmap.height,
                granularity_m=gmap.granularity_m,
                origin_x_m=gmap.origin_m[0],
                origin_y_m=gmap.origin_m[1],
                mean=float(gmap.values.mean()),
                std=float(gmap.values.std()),
                values=[[float(v) for v in row] for row in gmap.values] if include else None,
            )

        los_stats = None
        if cfg.environment == "auto":
            los = los_condition_map(
                n, n, cfg.p_los, field_filter(cfg.los_corr_dist_m, 1.0),
                substream(cfg.seed, "los-map"), origin,
            )
            los_stats = stats(los, req.include_values)
        return MapsResponse(sf_map=stats(sf, req.include_values), los_map=los_stats)

    return app
