"""Omnidirectional channel snapshots: multipath components grouped into time
clusters and spatial lobes, with powers tied to the large-scale path loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .pathloss import PathLossSample

C_M_PER_NS = 0.299792458  # speed of light, meters per nanosecond

TWO_PI = 2.0 * math.pi
_ZENITH_EPS = 1e-6


def wrap_azimuth(a: float) -> float:
    """Wrap an azimuth to [0, 2*pi)."""
    return a % TWO_PI


def clamp_zenith(z: float) -> float:
    """Clamp a zenith angle into the open interval (0, pi)."""
    return min(max(z, _ZENITH_EPS), math.pi - _ZENITH_EPS)


def angle_diff(a: float, b: float) -> float:
    """Signed smallest difference a-b, wrapped to (-pi, pi]."""
    d = (a - b) % TWO_PI
    return d - TWO_PI if d > math.pi else d


@dataclass
class Mpc:
    """One multipath component."""

    power_mw: float
    delay_ns: float
    phase_rad: float
    aod_rad: float
    zod_rad: float
    aoa_rad: float
    zoa_rad: float
    cluster_id: int
    lobe_id_tx: int
    lobe_id_rx: int
    is_los: bool = False


@dataclass
class TimeCluster:
    id: int
    excess_delay_ns: float
    power_fraction: float
    mpc_indices: list[int] = field(default_factory=list)


@dataclass
class SpatialLobe:
    id: int
    side: str  # departure | arrival
    center_azimuth_rad: float
    angular_spread_deg: float


@dataclass
class ChannelSnapshot:
    """Omnidirectional CIR at one UT position plus its large-scale context."""

    position_m: tuple[float, float, float]
    mpcs: list[Mpc]
    clusters: list[TimeCluster]
    lobes: list[SpatialLobe]
    pathloss: PathLossSample
    total_rx_power_mw: float
    environment: str = "LOS"

    def total_power_dbm(self) -> float:
        return 10.0 * math.log10(self.total_rx_power_mw)


def ut_position_at_distance(cfg: SimConfig, distance_m: float) -> tuple[float, float, float]:
    """UT position on the +x axis whose 3-D T-R separation equals distance_m."""
    dz = cfg.bs_height_m - cfg.ut_height_m
    horizontal = math.sqrt(max(distance_m**2 - dz**2, 1.0))
    return (horizontal, 0.0, cfg.ut_height_m)


def los_geometry(bs_m, ut_m) -> tuple[float, float, float, float, float]:
    """Exact LOS angles and 3-D distance for a BS->UT link.

    Returns (aod, zod, aoa, zoa, distance_m); azimuths in [0,2pi), zeniths
    measured from zenith (+z).
    """
    dx = ut_m[0] - bs_m[0]
    dy = ut_m[1] - bs_m[1]
    dz = ut_m[2] - bs_m[2]
    d3 = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d3 <= 0:
        raise ValueError("BS and UT positions coincide")
    aod = wrap_azimuth(math.atan2(dy, dx))
    zod = clamp_zenith(math.acos(dz / d3))
    return aod, zod, wrap_azimuth(aod + math.pi), clamp_zenith(math.pi - zod), d3


def assign_powers(
    cluster_excess_ns: np.ndarray,
    intra_excess_ns: list[np.ndarray],
    gamma_ns: float,
    intra_gamma_ns: float,
    total_power_mw: float,
) -> list[np.ndarray]:
    """Exponentially decaying cluster and subpath powers, normalized to total.

    Cluster power ~ exp(-excess/gamma); subpath power inside a cluster
    ~ exp(-intra/intra_gamma); the grand sum equals total_power_mw.
    """
    if gamma_ns <= 0 or intra_gamma_ns <= 0:
        raise ValueError("decay constants must be > 0")
    cw = np.exp(-np.asarray(cluster_excess_ns, dtype=float) / gamma_ns)
    cw = cw / cw.sum()
    powers = []
    for k, intra in enumerate(intra_excess_ns):
        sw = np.exp(-np.asarray(intra, dtype=float) / intra_gamma_ns)
        sw = sw / sw.sum()
        powers.append(total_power_mw * cw[k] * sw)
    return powers


def _draw_lobe_centers(
    n: int, spread_rad: float, rng: np.random.Generator, pinned: float | None
) -> list[float]:
    """Uniform lobe centers with min separation of one spread; first may be pinned."""
    centers: list[float] = [] if pinned is None else [wrap_azimuth(pinned)]
    while len(centers) < n:
        for _ in range(200):
            c = rng.uniform(0.0, TWO_PI)
            if all(abs(angle_diff(c, other)) >= spread_rad for other in centers):
                centers.append(c)
                break
        else:  # crowded circle: accept the last draw rather than loop forever
            centers.append(rng.uniform(0.0, TWO_PI))
    return centers


def _lobe_azimuth(center: float, spread_rad: float, rng: np.random.Generator) -> float:
    """Gaussian azimuth around a lobe center, truncated at +-3 spreads."""
    for _ in range(16):
        offset = rng.normal(0.0, spread_rad)
        if abs(offset) <= 3.0 * spread_rad:
            return wrap_azimuth(center + offset)
    return wrap_azimuth(center)


def generate_snapshot(
    cfg: SimConfig,
    pathloss_sample: PathLossSample,
    environment: str,
    rng: np.random.Generator,
    position_m: tuple[float, float, float] | None = None,
) -> ChannelSnapshot:
    """Draw a fresh omnidirectional channel snapshot.

    Cluster/subpath counts, excess delays, lobes and per-MPC angles follow the
    configured time-cluster spatial-lobe statistics; the power budget comes
    from the supplied path loss sample. In LOS the first MPC is the true LOS
    ray (delay d/c, reciprocal angles).
    """
    tc = cfg.tcsl
    bs = (0.0, 0.0, cfg.bs_height_m)
    if position_m is None:
        position_m = ut_position_at_distance(cfg, cfg.tr_distance_m)
    aod0, zod0, aoa0, zoa0, d3 = los_geometry(bs, position_m)
    los = environment == "LOS"

    n_clusters = int(rng.integers(tc.min_clusters, tc.max_clusters + 1))
    cluster_excess = np.zeros(n_clusters)
    if n_clusters > 1:
        gaps = rng.exponential(tc.intercluster_delay_mean_ns, size=n_clusters - 1)
        cluster_excess[1:] = np.cumsum(gaps)

    intra_excess: list[np.ndarray] = []
    for _ in range(n_clusters):
        n_sub = int(rng.integers(tc.min_subpaths, tc.max_subpaths + 1))
        intra = np.zeros(n_sub)
        if n_sub > 1:
            intra[1:] = np.sort(rng.exponential(tc.subpath_decay_ns, size=n_sub - 1))
        intra_excess.append(intra)

    spread_deg = tc.lobe_spread_los_deg if los else tc.lobe_spread_nlos_deg
    spread_rad = math.radians(spread_deg)
    n_dep = int(rng.integers(tc.min_lobes, tc.max_lobes + 1))
    n_arr = int(rng.integers(tc.min_lobes, tc.max_lobes + 1))
    dep_centers = _draw_lobe_centers(n_dep, spread_rad, rng, aod0 if los else None)
    arr_centers = _draw_lobe_centers(n_arr, spread_rad, rng, aoa0 if los else None)
    lobes = [
        SpatialLobe(i, "departure", c, spread_deg) for i, c in enumerate(dep_centers)
    ] + [
        SpatialLobe(i, "arrival", c, spread_deg) for i, c in enumerate(arr_centers)
    ]

    total_mw = 10.0 ** ((cfg.tx_power_dbm - pathloss_sample.total_db) / 10.0)
    powers = assign_powers(
        cluster_excess, intra_excess, tc.cluster_decay_ns, tc.subpath_decay_ns, total_mw
    )

    zspread = math.radians(tc.zenith_spread_deg)
    mpcs: list[Mpc] = []
    clusters: list[TimeCluster] = []
    base_delay = d3 / C_M_PER_NS
    for k in range(n_clusters):
        cluster = TimeCluster(k, float(cluster_excess[k]), float(powers[k].sum() / total_mw))
        for j in range(len(intra_excess[k])):
            is_los_ray = los and k == 0 and j == 0
            if is_los_ray:
                aod, zod, aoa, zoa = aod0, zod0, aoa0, zoa0
                lobe_tx = lobe_rx = 0
            else:
                lobe_tx = int(rng.integers(0, n_dep))
                lobe_rx = int(rng.integers(0, n_arr))
                aod = _lobe_azimuth(dep_centers[lobe_tx], spread_rad, rng)
                aoa = _lobe_azimuth(arr_centers[lobe_rx], spread_rad, rng)
                zod = clamp_zenith(rng.normal(zod0, zspread))
                zoa = clamp_zenith(rng.normal(zoa0, zspread))
            mpc = Mpc(
                power_mw=float(powers[k][j]),
                delay_ns=base_delay + float(cluster_excess[k]) + float(intra_excess[k][j]),
                phase_rad=float(rng.uniform(0.0, TWO_PI)),
                aod_rad=aod,
                zod_rad=zod,
                aoa_rad=aoa,
                zoa_rad=zoa,
                cluster_id=k,
                lobe_id_tx=lobe_tx,
                lobe_id_rx=lobe_rx,
                is_los=is_los_ray,
            )
            cluster.mpc_indices.append(len(mpcs))
            mpcs.append(mpc)
        clusters.append(cluster)

    return ChannelSnapshot(
        position_m=position_m,
        mpcs=mpcs,
        clusters=clusters,
        lobes=lobes,
        pathloss=pathloss_sample,
        total_rx_power_mw=total_mw,
        environment=environment,
    )


def copy_snapshot(snapshot: ChannelSnapshot) -> ChannelSnapshot:
    """Clone a snapshot so the original can keep evolving independently."""
    return ChannelSnapshot(
        position_m=snapshot.position_m,
        mpcs=[Mpc(**{k: getattr(m, k) for k in m.__dataclass_fields__}) for m in snapshot.mpcs],
        clusters=[
            TimeCluster(c.id, c.excess_delay_ns, c.power_fraction, list(c.mpc_indices))
            for c in snapshot.clusters
        ],
        lobes=list(snapshot.lobes),
        pathloss=snapshot.pathloss,
        total_rx_power_mw=snapshot.total_rx_power_mw,
        environment=snapshot.environment,
    )


def omni_pdp(snapshot: ChannelSnapshot, bin_ns: float) -> list[tuple[float, float]]:
    """Bin MPC powers by absolute delay; returns (bin_start_ns, power_dbm) rows."""
    if bin_ns <= 0:
        raise ValueError("bin width must be > 0")
    bins: dict[int, float] = {}
    for mpc in snapshot.mpcs:
        idx = int(mpc.delay_ns // bin_ns)
        bins[idx] = bins.get(idx, 0.0) + mpc.power_mw
    return [
        (idx * bin_ns, 10.0 * math.log10(p)) for idx, p in sorted(bins.items()) if p > 0
    ]
