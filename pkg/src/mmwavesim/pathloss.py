"""Large-scale link budget: CI path loss, atmospheric term, O2I loss, SNR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import O2IConfig

THERMAL_NOISE_DBM_PER_HZ = -174.0


@dataclass(frozen=True)
class PathLossSample:
    """One evaluation of the close-in path loss model, all terms in dB.

    total_db = fspl_db + 10*n*log10(d) + at_db + sf_db + o2i_db with the
    distance-dependent part folded into pl_db.
    """

    fspl_db: float
    pl_db: float
    sf_db: float
    at_db: float
    o2i_db: float
    total_db: float


def fspl(f_ghz: float) -> float:
    """Free-space path loss in dB at the 1 m reference distance."""
    if f_ghz <= 0:
        raise ValueError(f"carrier frequency must be > 0 GHz, got {f_ghz}")
    return 32.4 + 20.0 * math.log10(f_ghz)


def atmospheric_at(d_m: float, rate_db_per_km: float) -> float:
    """Atmospheric absorption as a constant rate over the path length."""
    if rate_db_per_km < 0:
        raise ValueError("attenuation rate must be >= 0")
    return rate_db_per_km * d_m / 1000.0


def path_loss_ci(
    f_ghz: float,
    d_m: float,
    n: float,
    at_db: float = 0.0,
    sf_db: float = 0.0,
    o2i_db: float = 0.0,
) -> PathLossSample:
    """Close-in free-space-reference path loss at distance d_m (>= 1 m)."""
    if d_m < 1.0:
        raise ValueError(f"distance must be >= 1 m (CI reference), got {d_m}")
    free = fspl(f_ghz)
    pl = free + 10.0 * n * math.log10(d_m)
    return PathLossSample(
        fspl_db=free,
        pl_db=pl,
        sf_db=sf_db,
        at_db=at_db,
        o2i_db=o2i_db,
        total_db=pl + at_db + sf_db + o2i_db,
    )


def o2i_loss(f_ghz: float, cfg: O2IConfig, rng: np.random.Generator) -> float:
    """Draw one building penetration loss from the parabolic model.

    10*log10(A + B*f^2) plus a zero-mean Gaussian with sigma_p, floored at
    0 dB since penetration cannot add power.
    """
    if not cfg.enabled:
        raise ValueError("o2i_loss called with o2i disabled")
    a, b, sigma_p = cfg.resolved()
    loss = 10.0 * math.log10(a + b * f_ghz**2) + rng.normal(0.0, sigma_p)
    return max(0.0, loss)


def o2i_mean_db(f_ghz: float, cfg: O2IConfig) -> float:
    """Deterministic part of the parabolic O2I model."""
    a, b, _ = cfg.resolved()
    return 10.0 * math.log10(a + b * f_ghz**2)


def noise_power_dbm(bandwidth_mhz: float) -> float:
    """Average thermal noise power over the RF bandwidth."""
    if bandwidth_mhz <= 0:
        raise ValueError("bandwidth must be > 0")
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_mhz * 1e6)


def snr_db(pr_dbm: float, bandwidth_mhz: float, nf_db: float) -> float:
    """SNR of a received power against thermal noise plus noise figure."""
    return pr_dbm - (noise_power_dbm(bandwidth_mhz) + nf_db)
