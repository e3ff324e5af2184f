"""Simulation configuration: dataclasses, validation, key-value file parsing."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    """Raised when a configuration value is missing, malformed or out of range."""


SCENARIOS = ("UMi", "UMa")
ENVIRONMENTS = ("LOS", "NLOS", "auto")
MODES = ("drop", "spatial-consistency")
TRACK_TYPES = ("linear", "hexagon")
BORESIGHT_POLICIES = ("strongest-mpc", "fixed")
O2I_CLASSES = ("low", "high")

# Parabolic O2I loss parameters (A, B, sigma_p) per loss class.
O2I_DEFAULTS = {"low": (5.0, 0.03, 4.0), "high": (10.0, 5.0, 6.0)}


@dataclass(frozen=True)
class TrajectorySpec:
    """User-terminal track for spatial-consistency runs.

    The default heading points south so the default clockwise hexagon track
    curls back toward the base station and stays inside the default map.
    """

    track_type: str = "hexagon"
    track_length_m: float = 40.0
    side_length_m: float = 10.0  # hexagon only
    heading_deg: float = 270.0
    speed_mps: float = 1.0
    update_distance_m: float = 1.0
    segment_length_m: float = 12.0


@dataclass(frozen=True)
class BlockageConfig:
    """Four-state Markov human-blockage settings.

    With default_rates the transition rates and mean attenuation follow the
    built-in beamwidth fits; otherwise the four lambda_* rates and
    mean_attenuation_db are used as given.
    """

    enabled: bool = False
    default_rates: bool = True
    lambda_decay: float = 0.2
    lambda_shadow: float = 8.0
    lambda_rise: float = 8.0
    lambda_unshadow: float = 6.7
    mean_attenuation_db: float = 12.0
    # Linear fit of event mean attenuation vs beamwidth:
    #   mean_att(w) = max(att_floor_db, att_intercept_db - att_slope_db_per_deg * w)
    # calibrated so the sampled-loss CDFs reproduce the reference statistics.
    att_intercept_db: float = 16.4
    att_slope_db_per_deg: float = 0.072
    att_floor_db: float = 8.0
    att_event_sigma_db: float = 1.8
    trace_duration_s: float = 60.0
    dt_s: float = 0.001


@dataclass(frozen=True)
class O2IConfig:
    """Outdoor-to-indoor penetration loss settings (parabolic model)."""

    enabled: bool = False
    loss_class: str = "low"
    a: float | None = None
    b: float | None = None
    sigma_p_db: float | None = None

    def resolved(self) -> tuple[float, float, float]:
        """Return (A, B, sigma_p) with class defaults filling unset fields."""
        da, db, ds = O2I_DEFAULTS[self.loss_class]
        return (
            self.a if self.a is not None else da,
            self.b if self.b is not None else db,
            self.sigma_p_db if self.sigma_p_db is not None else ds,
        )


@dataclass(frozen=True)
class AntennaConfig:
    """Directional antenna settings for TX and RX."""

    tx_az_hpbw_deg: float = 30.0
    tx_el_hpbw_deg: float = 30.0
    rx_az_hpbw_deg: float = 30.0
    rx_el_hpbw_deg: float = 30.0
    boresight_policy: str = "strongest-mpc"
    boresight_az_deg: float = 0.0
    boresight_el_deg: float = 0.0
    # None -> peak gain from the aperture approximation 41253/(az*el).
    peak_gain_dbi: float | None = None


@dataclass(frozen=True)
class TcslConfig:
    """Time-cluster spatial-lobe generation defaults.

    The underlying statistical tables are deployment-specific; these bounds and
    decay constants are configurable placeholders.
    """

    min_clusters: int = 1
    max_clusters: int = 6
    min_subpaths: int = 1
    max_subpaths: int = 30
    intercluster_delay_mean_ns: float = 100.0
    cluster_decay_ns: float = 50.0
    subpath_decay_ns: float = 17.0
    min_lobes: int = 1
    max_lobes: int = 5
    lobe_spread_los_deg: float = 10.5
    lobe_spread_nlos_deg: float = 6.0
    zenith_spread_deg: float = 5.0


@dataclass(frozen=True)
class SimConfig:
    """Top-level simulation configuration (all units in field names)."""

    carrier_freq_ghz: float = 28.0
    bandwidth_mhz: float = 800.0
    scenario: str = "UMi"
    environment: str = "LOS"
    tr_distance_m: float = 100.0
    bs_height_m: float = 10.0
    ut_height_m: float = 1.5
    n_los: float = 2.0
    n_nlos: float = 3.2
    sigma_sf_los_db: float = 4.0
    sigma_sf_nlos_db: float = 7.0
    atmospheric_rate_db_per_km: float = 0.0
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 10.0
    p_los: float = 0.5
    sf_corr_dist_los_m: float = 10.0
    sf_corr_dist_nlos_m: float = 13.0
    los_corr_dist_m: float = 15.0
    map_extent_m: float = 200.0
    mode: str = "drop"
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    blockage: BlockageConfig = field(default_factory=BlockageConfig)
    o2i: O2IConfig = field(default_factory=O2IConfig)
    antenna: AntennaConfig = field(default_factory=AntennaConfig)
    tcsl: TcslConfig = field(default_factory=TcslConfig)
    seed: int = 1
    num_runs: int = 1

    def sigma_sf_db(self, environment: str) -> float:
        return self.sigma_sf_los_db if environment == "LOS" else self.sigma_sf_nlos_db

    def pathloss_exponent(self, environment: str) -> float:
        return self.n_los if environment == "LOS" else self.n_nlos

    def sf_corr_dist_m(self, environment: str) -> float:
        return self.sf_corr_dist_los_m if environment == "LOS" else self.sf_corr_dist_nlos_m


def _check_range(name: str, value: float, lo: float, hi: float) -> None:
    if not (lo <= value <= hi):
        raise ConfigError(f"{name} out of [{lo:g},{hi:g}]")


def _check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ConfigError(f"{name} must be > 0, got {value}")


def _check_nonnegative(name: str, value: float) -> None:
    if value < 0:
        raise ConfigError(f"{name} must be >= 0, got {value}")


def _check_choice(name: str, value: str, choices: tuple[str, ...]) -> None:
    if value not in choices:
        raise ConfigError(f"{name} must be one of {choices}, got {value!r}")


def validate_config(cfg: SimConfig) -> SimConfig:
    """Validate ranges and cross-field invariants; returns the config unchanged.

    Raises ConfigError naming the offending field and its legal range.
    """
    _check_range("carrier_freq_ghz", cfg.carrier_freq_ghz, 0.5, 100.0)
    if not (0.0 < cfg.bandwidth_mhz <= 800.0):
        raise ConfigError("bandwidth_mhz out of (0,800]")
    _check_choice("scenario", cfg.scenario, SCENARIOS)
    _check_choice("environment", cfg.environment, ENVIRONMENTS)
    _check_choice("mode", cfg.mode, MODES)
    if cfg.tr_distance_m < 1.0:
        raise ConfigError("tr_distance_m must be >= 1 (CI reference distance is 1 m)")
    _check_positive("bs_height_m", cfg.bs_height_m)
    _check_positive("ut_height_m", cfg.ut_height_m)
    for name in ("sigma_sf_los_db", "sigma_sf_nlos_db"):
        _check_nonnegative(name, getattr(cfg, name))
    _check_nonnegative("atmospheric_rate_db_per_km", cfg.atmospheric_rate_db_per_km)
    _check_range("p_los", cfg.p_los, 0.0, 1.0)
    for name in ("sf_corr_dist_los_m", "sf_corr_dist_nlos_m", "los_corr_dist_m", "map_extent_m"):
        _check_positive(name, getattr(cfg, name))
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError("seed out of [0,2^64)")
    if cfg.num_runs < 1:
        raise ConfigError("num_runs must be >= 1")

    tr = cfg.trajectory
    _check_choice("track_type", tr.track_type, TRACK_TYPES)
    _check_nonnegative("track_length_m", tr.track_length_m)
    _check_positive("side_length_m", tr.side_length_m)
    _check_positive("speed_mps", tr.speed_mps)
    _check_positive("update_distance_m", tr.update_distance_m)
    _check_positive("segment_length_m", tr.segment_length_m)
    if tr.update_distance_m > tr.segment_length_m:
        raise ConfigError("update_distance_m must be <= segment_length_m")

    bl = cfg.blockage
    for name in ("lambda_decay", "lambda_shadow", "lambda_rise", "lambda_unshadow"):
        _check_positive(name, getattr(bl, name))
    _check_nonnegative("mean_attenuation_db", bl.mean_attenuation_db)
    _check_nonnegative("att_event_sigma_db", bl.att_event_sigma_db)
    _check_positive("trace_duration_s", bl.trace_duration_s)
    _check_positive("dt_s", bl.dt_s)

    _check_choice("o2i_loss_class", cfg.o2i.loss_class, O2I_CLASSES)
    if cfg.o2i.sigma_p_db is not None:
        _check_nonnegative("o2i_sigma_p_db", cfg.o2i.sigma_p_db)

    an = cfg.antenna
    for name in ("tx_az_hpbw_deg", "tx_el_hpbw_deg", "rx_az_hpbw_deg", "rx_el_hpbw_deg"):
        value = getattr(an, name)
        if not (0.0 < value <= 360.0):
            raise ConfigError(f"{name} out of (0,360]")
    _check_choice("boresight_policy", an.boresight_policy, BORESIGHT_POLICIES)

    tc = cfg.tcsl
    for lo_name, hi_name in (
        ("min_clusters", "max_clusters"),
        ("min_subpaths", "max_subpaths"),
        ("min_lobes", "max_lobes"),
    ):
        lo, hi = getattr(tc, lo_name), getattr(tc, hi_name)
        if not (1 <= lo <= hi):
            raise ConfigError(f"need 1 <= {lo_name} <= {hi_name}, got {lo},{hi}")
    for name in ("intercluster_delay_mean_ns", "cluster_decay_ns", "subpath_decay_ns"):
        _check_positive(name, getattr(tc, name))
    if not tc.lobe_spread_nlos_deg < tc.lobe_spread_los_deg:
        raise ConfigError("lobe_spread_nlos_deg must be < lobe_spread_los_deg")
    _check_positive("zenith_spread_deg", tc.zenith_spread_deg)
    return cfg


# --- flat key-value representation (config files, CLI flags, API payloads) ---

# section "" = SimConfig top level; sub-config fields are prefixed where the
# bare field name would be ambiguous or opaque.
_SECTIONS: list[tuple[str, str, type]] = [
    ("", "", SimConfig),
    ("trajectory", "", TrajectorySpec),
    ("blockage", "blockage_", BlockageConfig),
    ("o2i", "o2i_", O2IConfig),
    ("antenna", "", AntennaConfig),
    ("tcsl", "tcsl_", TcslConfig),
]

_NESTED = {"trajectory", "blockage", "o2i", "antenna", "tcsl"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"invalid boolean {text!r}")


def flat_schema() -> dict[str, tuple[str, str, type]]:
    """Map flat key -> (section attr, field name, declared type)."""
    schema: dict[str, tuple[str, str, type]] = {}
    for attr, prefix, cls in _SECTIONS:
        for f in fields(cls):
            if f.name in _NESTED and cls is SimConfig:
                continue
            schema[prefix + f.name] = (attr, f.name, f.type)
    return schema


_SCHEMA = flat_schema()


def _coerce(key: str, ftype: str | type, text: str):
    type_name = ftype if isinstance(ftype, str) else ftype.__name__
    if "bool" in type_name:
        return _parse_bool(text)
    if "int" in type_name:
        return int(text)
    if "float" in type_name:
        if text.strip().lower() in ("none", ""):
            return None
        return float(text)
    return text.strip()


def config_to_flat(cfg: SimConfig) -> dict[str, object]:
    """Flatten a SimConfig to the key-value representation."""
    out: dict[str, object] = {}
    for attr, prefix, _cls in _SECTIONS:
        obj = cfg if attr == "" else getattr(cfg, attr)
        for f in fields(obj):
            if f.name in _NESTED and obj is cfg:
                continue
            out[prefix + f.name] = getattr(obj, f.name)
    return out


def config_from_flat(values: dict[str, object], base: SimConfig | None = None) -> SimConfig:
    """Build a SimConfig from flat keys; unknown keys raise ConfigError."""
    base = base if base is not None else SimConfig()
    top: dict[str, object] = {}
    sub: dict[str, dict[str, object]] = {attr: {} for attr, _, _ in _SECTIONS if attr}
    for key, value in values.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        attr, fname, _ftype = _SCHEMA[key]
        if attr == "":
            top[fname] = value
        else:
            sub[attr][fname] = value
    kwargs = dict(top)
    for attr in sub:
        if sub[attr]:
            kwargs[attr] = dataclasses.replace(getattr(base, attr), **sub[attr])
    return dataclasses.replace(base, **kwargs)


def parse_config_text(text: str, base: SimConfig | None = None) -> SimConfig:
    """Parse a `key = value` config file body (# starts a comment)."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, _SCHEMA[key][2], val)
    return config_from_flat(values, base)


def serialize_config(cfg: SimConfig) -> str:
    """Render a config as a round-trippable key-value file body."""
    lines = []
    for key, value in config_to_flat(cfg).items():
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def load_config_file(path: str, base: SimConfig | None = None) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)
