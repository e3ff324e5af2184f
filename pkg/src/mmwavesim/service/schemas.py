"""Pydantic request/response models for the simulation service."""

from __future__ import annotations

from pydantic import BaseModel, Field

ConfigOverrides = dict[str, float | int | str | bool]


class DropRequest(BaseModel):
    config: ConfigOverrides = Field(default_factory=dict,
                                    description="flat config keys overriding the defaults")
    include_mpcs: bool = False


class MpcModel(BaseModel):
    power_dbm: float
    delay_ns: float
    phase_rad: float
    aod_deg: float
    zod_deg: float
    aoa_deg: float
    zoa_deg: float
    cluster_id: int
    lobe_id_tx: int
    lobe_id_rx: int
    is_los: bool


class DropRunModel(BaseModel):
    run_index: int
    distance_m: float
    environment: str
    o2i_db: float
    omni_power_dbm: float
    dir_power_dbm: float
    omni_power_blocked_dbm: float
    dir_power_blocked_dbm: float
    dir_blockage_db: float
    snr_omni_db: float
    snr_dir_db: float
    mpcs: list[MpcModel] | None = None


class DropResponse(BaseModel):
    runs: list[DropRunModel]


class TrackRequest(BaseModel):
    config: ConfigOverrides = Field(default_factory=dict)
    iid_sf: bool = False
    include_mpcs: bool = False


class SnapshotModel(BaseModel):
    snapshot: int
    pos_x_m: float
    pos_y_m: float
    environment: str
    pathloss_db: float
    power_dbm: float
    n_mpcs: int
    mpcs: list[MpcModel] | None = None


class TrackResponse(BaseModel):
    snapshots: list[SnapshotModel]


class OutageRequest(BaseModel):
    config: ConfigOverrides = Field(default_factory=dict)
    n_runs: int = 1000
    dist_min_m: float = 100.0
    dist_max_m: float = 500.0
    with_blockage: bool = False


class OutageResponse(BaseModel):
    threshold_db: float
    outage_fraction: float
    snr_percentiles: dict[int, float]
    n_runs: int
    with_blockage: bool
    seed: int


class BlockageCdfRequest(BaseModel):
    config: ConfigOverrides = Field(default_factory=dict)
    kind: str = "omni-nlos"
    n_samples: int = 1000
    hpbw_deg: float | None = None


class BlockageCdfResponse(BaseModel):
    kind: str
    loss_db: list[float]
    cdf: list[float]


class MapsRequest(BaseModel):
    config: ConfigOverrides = Field(default_factory=dict)
    include_values: bool = False


class MapStats(BaseModel):
    kind: str
    width: int
    height: int
    granularity_m: float
    origin_x_m: float
    origin_y_m: float
    mean: float
    std: float
    values: list[list[float]] | None = None


class MapsResponse(BaseModel):
    sf_map: MapStats
    los_map: MapStats | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
