"""Directional antenna emulation and synthesis of directional channels.

A Gaussian mainlobe stands in for the measurement horn: gain is quadratic in
dB off boresight, down exactly 3 dB at half the HPBW on each principal axis,
with a sidelobe floor 25 dB below the peak.
"""

from __future__ import annotations

import math

from .channel import ChannelSnapshot, angle_diff, copy_snapshot
from .config import AntennaConfig

SIDELOBE_DOWN_DB = 25.0
_ISOTROPIC_HPBW_DEG = 360.0


def peak_gain_dbi(hpbw_az_deg: float, hpbw_el_deg: float) -> float:
    """Aperture approximation of the boresight gain from the two HPBWs."""
    if hpbw_az_deg <= 0 or hpbw_el_deg <= 0:
        raise ValueError("HPBW must be > 0")
    return 10.0 * math.log10(41253.0 / (hpbw_az_deg * hpbw_el_deg))


def pattern_gain(
    hpbw_az_deg: float,
    hpbw_el_deg: float,
    delta_az_deg: float,
    delta_el_deg: float,
    peak_dbi: float | None = None,
) -> float:
    """Antenna gain (dBi) at an offset from boresight.

    delta = HPBW/2 on one axis costs exactly 3 dB; the quadratic rolloff is
    floored 25 dB below the peak. Full-circle HPBWs model an isotropic
    element (flat gain).
    """
    if not (0.0 < hpbw_az_deg <= 360.0 and 0.0 < hpbw_el_deg <= 360.0):
        raise ValueError("HPBW out of (0,360]")
    g0 = peak_dbi if peak_dbi is not None else peak_gain_dbi(hpbw_az_deg, hpbw_el_deg)
    if hpbw_az_deg >= _ISOTROPIC_HPBW_DEG and hpbw_el_deg >= _ISOTROPIC_HPBW_DEG:
        return g0
    rolloff = 3.0 * (
        (2.0 * delta_az_deg / hpbw_az_deg) ** 2 + (2.0 * delta_el_deg / hpbw_el_deg) ** 2
    )
    return g0 - min(rolloff, SIDELOBE_DOWN_DB)


def boresights(snapshot: ChannelSnapshot, cfg: AntennaConfig):
    if cfg.boresight_policy == "fixed":
        az = math.radians(cfg.boresight_az_deg)
        zen = math.pi / 2 - math.radians(cfg.boresight_el_deg)
        return (az, zen), (az, zen)
    strongest = max(snapshot.mpcs, key=lambda m: m.power_mw)
    return (strongest.aod_rad, strongest.zod_rad), (strongest.aoa_rad, strongest.zoa_rad)


def directional_snapshot(omni: ChannelSnapshot, cfg: AntennaConfig) -> ChannelSnapshot:
    """Apply TX and RX patterns to an omnidirectional snapshot.

    Boresights follow the configured policy (default: the strongest received
    MPC's departure/arrival directions); every MPC is scaled by both pattern
    gains at its own angles.
    """
    if not omni.mpcs:
        raise ValueError("cannot synthesize a directional channel from an empty snapshot")
    (tx_az, tx_zen), (rx_az, rx_zen) = boresights(omni, cfg)
    out = copy_snapshot(omni)
    for mpc in out.mpcs:
        g_tx = pattern_gain(
            cfg.tx_az_hpbw_deg,
            cfg.tx_el_hpbw_deg,
            math.degrees(angle_diff(mpc.aod_rad, tx_az)),
            math.degrees(mpc.zod_rad - tx_zen),
            cfg.peak_gain_dbi,
        )
        g_rx = pattern_gain(
            cfg.rx_az_hpbw_deg,
            cfg.rx_el_hpbw_deg,
            math.degrees(angle_diff(mpc.aoa_rad, rx_az)),
            math.degrees(mpc.zoa_rad - rx_zen),
            cfg.peak_gain_dbi,
        )
        mpc.power_mw *= 10.0 ** ((g_tx + g_rx) / 10.0)
    out.total_rx_power_mw = sum(m.power_mw for m in out.mpcs)
    return out
