"""Spatially correlated 2-D maps of shadow fading and LOS/NLOS condition.

A map is produced by filtering an i.i.d. Gaussian grid with an isotropic
exponential kernel. Filtering an i.i.d. field with exp(-r/a) yields a field
whose own correlation falls to 1/e only at ~2.55*a (the kernel autocorrelation
is a Matern-nu=2 shape, (d/a)^2 K2(d/a)/2), so map construction shrinks the
kernel scale by KERNEL_SCALE to make the generated field decorrelate at the
configured correlation distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import ndtri

# 1/beta* where beta* solves (b^2/2)K2(b) = 1/e; see module docstring.
KERNEL_SCALE = 0.39198


@dataclass(frozen=True)
class ExponentialFilter:
    """Isotropic exponential filter taps on a square grid."""

    d_co_m: float
    granularity_m: float
    length_taps: int
    taps: np.ndarray


@dataclass
class GridMap:
    """2-D grid of map values; values[iy, ix] sits at origin + (ix, iy)*granularity."""

    origin_m: tuple[float, float]
    granularity_m: float
    width: int
    height: int
    values: np.ndarray
    kind: str  # sf_db | los_indicator


def make_filter(d_co_m: float, granularity_m: float = 1.0) -> ExponentialFilter:
    """Build exp(-r/d_co) taps spanning 8-fold d_co (nearest odd tap count)."""
    if d_co_m <= 0:
        raise ValueError("correlation distance must be > 0")
    if granularity_m <= 0:
        raise ValueError("granularity must be > 0")
    half = max(1, int(round(4.0 * d_co_m / granularity_m)))
    coords = np.arange(-half, half + 1) * granularity_m
    px, qy = np.meshgrid(coords, coords, indexing="ij")
    taps = np.exp(-np.sqrt(px**2 + qy**2) / d_co_m)
    return ExponentialFilter(
        d_co_m=d_co_m,
        granularity_m=granularity_m,
        length_taps=2 * half + 1,
        taps=taps,
    )


def _filter_iid_grid(
    width: int, height: int, filt: ExponentialFilter, rng: np.random.Generator
) -> np.ndarray:
    """Filter an i.i.d. standard-normal grid, reflection-padded at the borders."""
    if width < 1 or height < 1:
        raise ValueError("map dimensions must be positive")
    half = (filt.length_taps - 1) // 2
    noise = rng.standard_normal((height, width))
    padded = np.pad(noise, half, mode="symmetric")
    return fftconvolve(padded, filt.taps, mode="valid")


def correlated_map(
    width: int,
    height: int,
    sigma_db: float,
    filt: ExponentialFilter,
    rng: np.random.Generator,
    origin_m: tuple[float, float] = (0.0, 0.0),
) -> GridMap:
    """Generate a correlated shadow-fading map with marginal std sigma_db.

    The convolution changes the field variance, so the result is rescaled to
    restore the configured standard deviation.
    """
    if sigma_db < 0:
        raise ValueError("sigma must be >= 0")
    values = _filter_iid_grid(width, height, filt, rng)
    std = values.std()
    if sigma_db == 0.0 or std == 0.0:
        values = np.zeros_like(values)
    else:
        values = values * (sigma_db / std)
    return GridMap(
        origin_m=origin_m,
        granularity_m=filt.granularity_m,
        width=width,
        height=height,
        values=values,
        kind="sf_db",
    )


def los_condition_map(
    width: int,
    height: int,
    p_los: float,
    filt: ExponentialFilter,
    rng: np.random.Generator,
    origin_m: tuple[float, float] = (0.0, 0.0),
) -> GridMap:
    """Generate a correlated 0/1 LOS map with marginal LOS fraction p_los.

    A filtered standard-normal field is thresholded at the normal quantile of
    p_los; cells at or below the quantile are LOS (1).
    """
    if not (0.0 <= p_los <= 1.0):
        raise ValueError("p_los out of [0,1]")
    values = _filter_iid_grid(width, height, filt, rng)
    std = values.std()
    if std > 0:
        values = values / std
    if p_los >= 1.0:
        indicator = np.ones_like(values)
    elif p_los <= 0.0:
        indicator = np.zeros_like(values)
    else:
        indicator = (values <= ndtri(p_los)).astype(float)
    return GridMap(
        origin_m=origin_m,
        granularity_m=filt.granularity_m,
        width=width,
        height=height,
        values=indicator,
        kind="los_indicator",
    )


def field_filter(target_d_co_m: float, granularity_m: float = 1.0) -> ExponentialFilter:
    """Filter whose *output field* decorrelates (1/e) at target_d_co_m."""
    return make_filter(target_d_co_m * KERNEL_SCALE, granularity_m)


def sample_map(gmap: GridMap, position_m) -> float:
    """Nearest-grid-point lookup; raises if the position leaves the map."""
    x, y = float(position_m[0]), float(position_m[1])
    ix = int(round((x - gmap.origin_m[0]) / gmap.granularity_m))
    iy = int(round((y - gmap.origin_m[1]) / gmap.granularity_m))
    if not (0 <= ix < gmap.width and 0 <= iy < gmap.height):
        raise ValueError(f"position ({x},{y}) outside map extent")
    return float(gmap.values[iy, ix])


def autocorrelation(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Empirical autocorrelation over row and column lags 0..max_lag."""
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for lag in range(1, max_lag + 1):
        pairs = []
        if values.shape[1] > lag:
            pairs.append((values[:, :-lag].ravel(), values[:, lag:].ravel()))
        if values.shape[0] > lag:
            pairs.append((values[:-lag, :].ravel(), values[lag:, :].ravel()))
        if not pairs:
            out[lag] = np.nan
            continue
        out[lag] = float(np.mean([np.corrcoef(a, b)[0, 1] for a, b in pairs]))
    return out


def estimate_corr_distance(gmap: GridMap, max_lag_m: float | None = None) -> float:
    """Correlation distance of a map: lag where autocorrelation crosses 1/e."""
    max_lag = int((max_lag_m or 4 * gmap.granularity_m * max(gmap.width, gmap.height) / 8)
                  / gmap.granularity_m)
    max_lag = min(max_lag, min(gmap.width, gmap.height) - 2)
    rho = autocorrelation(gmap.values, max_lag)
    target = np.exp(-1.0)
    below = np.nonzero(rho <= target)[0]
    if len(below) == 0:
        return float(max_lag * gmap.granularity_m)
    k = int(below[0])
    if k == 0:
        return 0.0
    # linear interpolation between the bracketing lags
    r0, r1 = rho[k - 1], rho[k]
    frac = (r0 - target) / (r0 - r1) if r0 != r1 else 0.0
    return float((k - 1 + frac) * gmap.granularity_m)
