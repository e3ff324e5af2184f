import math

import numpy as np
import pytest

from mmwavesim.channel import (
    C_M_PER_NS,
    assign_powers,
    generate_snapshot,
    los_geometry,
    omni_pdp,
    wrap_azimuth,
)
from mmwavesim.config import SimConfig
from mmwavesim.pathloss import path_loss_ci
from mmwavesim.rng import substream


def snapshot(cfg=None, env="LOS", seed=1, d=100.0, run=0):
    cfg = cfg or SimConfig(tr_distance_m=d)
    n = cfg.pathloss_exponent(env)
    pl = path_loss_ci(cfg.carrier_freq_ghz, d, n)
    return generate_snapshot(cfg, pl, env, substream(seed, "tcsl", run))


class TestAssignPowers:
    def test_single_mpc_gets_everything(self):
        powers = assign_powers(np.array([0.0]), [np.array([0.0])], 50.0, 17.0, 2.5)
        assert powers[0][0] == pytest.approx(2.5, rel=1e-12)

    def test_two_clusters_at_gamma_ln2_split_2_to_1(self):
        gamma = 50.0
        powers = assign_powers(
            np.array([0.0, gamma * math.log(2.0)]),
            [np.array([0.0]), np.array([0.0])],
            gamma,
            17.0,
            3.0,
        )
        assert powers[0][0] / powers[1][0] == pytest.approx(2.0, rel=1e-9)
        assert powers[0][0] + powers[1][0] == pytest.approx(3.0, rel=1e-12)

    def test_cluster_power_nonincreasing_in_excess_delay(self):
        rng = substream(3, "tcsl")
        for _ in range(20):
            k = int(rng.integers(2, 6))
            excess = np.sort(rng.exponential(100.0, size=k))
            excess[0] = 0.0
            intra = [np.sort(rng.exponential(17.0, size=int(rng.integers(1, 8)))) for _ in range(k)]
            for sub in intra:
                sub[0] = 0.0
            powers = assign_powers(excess, intra, 50.0, 17.0, 1.0)
            cluster_totals = [p.sum() for p in powers]
            assert all(a >= b - 1e-15 for a, b in zip(cluster_totals, cluster_totals[1:]))

    def test_bad_decay_rejected(self):
        with pytest.raises(ValueError):
            assign_powers(np.array([0.0]), [np.array([0.0])], 0.0, 17.0, 1.0)


class TestGenerateSnapshot:
    def test_los_delay_is_distance_over_c(self):
        snap = snapshot(d=100.0)
        los = snap.mpcs[0]
        assert los.is_los
        assert los.delay_ns == pytest.approx(333.6, abs=0.1)

    def test_los_reciprocal_azimuths(self):
        # aod 30 deg -> aoa 210 deg for the direct ray
        bs = (0.0, 0.0, 10.0)
        ut = (100.0 * math.cos(math.radians(30)), 100.0 * math.sin(math.radians(30)), 1.5)
        aod, _zod, aoa, _zoa, _d = los_geometry(bs, ut)
        assert math.degrees(aod) == pytest.approx(30.0, abs=1e-9)
        assert math.degrees(aoa) == pytest.approx(210.0, abs=1e-9)

    def test_los_ray_has_min_delay(self):
        for seed in range(10):
            snap = snapshot(seed=seed)
            delays = [m.delay_ns for m in snap.mpcs]
            assert snap.mpcs[int(np.argmin(delays))].is_los

    def test_all_delays_at_least_distance_over_c(self):
        for seed in range(5):
            for env in ("LOS", "NLOS"):
                snap = snapshot(seed=seed, env=env, d=150.0)
                floor = 150.0 / C_M_PER_NS
                assert all(m.delay_ns >= floor - 1e-9 for m in snap.mpcs)

    def test_power_conservation(self):
        for seed in range(10):
            snap = snapshot(seed=seed, env="NLOS")
            total = sum(m.power_mw for m in snap.mpcs)
            assert total == pytest.approx(snap.total_rx_power_mw, rel=1e-9)

    def test_canonical_angle_ranges(self):
        for seed in range(10):
            snap = snapshot(seed=seed, env="NLOS")
            for m in snap.mpcs:
                assert 0.0 <= m.aod_rad < 2 * math.pi
                assert 0.0 <= m.aoa_rad < 2 * math.pi
                assert 0.0 < m.zod_rad < math.pi
                assert 0.0 < m.zoa_rad < math.pi

    def test_lobe_azimuths_within_three_spreads_of_center(self):
        for seed in range(30):
            for env, spread in (("LOS", 10.5), ("NLOS", 6.0)):
                snap = snapshot(seed=seed, env=env)
                dep = {lb.id: lb.center_azimuth_rad for lb in snap.lobes if lb.side == "departure"}
                arr = {lb.id: lb.center_azimuth_rad for lb in snap.lobes if lb.side == "arrival"}
                bound = math.radians(3.0 * spread) + 1e-12
                for m in snap.mpcs:
                    if m.is_los:
                        continue
                    assert abs(wrap_azimuth(m.aod_rad - dep[m.lobe_id_tx] + math.pi) - math.pi) <= bound
                    assert abs(wrap_azimuth(m.aoa_rad - arr[m.lobe_id_rx] + math.pi) - math.pi) <= bound

    def test_lobe_azimuth_spread_statistics(self):
        # per-lobe sample std of drawn azimuths ~ configured 10.5 deg
        devs = []
        for seed in range(300):
            snap = snapshot(seed=seed)
            centers = {(lb.side, lb.id): lb.center_azimuth_rad for lb in snap.lobes}
            for m in snap.mpcs:
                if m.is_los:
                    continue
                c = centers[("departure", m.lobe_id_tx)]
                devs.append(math.degrees(wrap_azimuth(m.aod_rad - c + math.pi) - math.pi))
        assert np.std(devs) == pytest.approx(10.5, abs=2.0)

    def test_cluster_count_within_config(self):
        for seed in range(20):
            snap = snapshot(seed=seed)
            assert 1 <= len(snap.clusters) <= 6
            for cl in snap.clusters:
                assert 1 <= len(cl.mpc_indices) <= 30

    def test_cluster_power_fractions_sum_to_one(self):
        snap = snapshot(seed=4, env="NLOS")
        assert sum(c.power_fraction for c in snap.clusters) == pytest.approx(1.0, abs=1e-9)


class TestOmniPdp:
    def test_single_mpc_single_bin(self):
        snap = snapshot(seed=2)
        snap.mpcs = snap.mpcs[:1]
        pdp = omni_pdp(snap, 5.0)
        assert len(pdp) == 1
        assert pdp[0][1] == pytest.approx(10 * math.log10(snap.mpcs[0].power_mw))

    def test_two_mpcs_same_bin_sum_linearly(self):
        snap = snapshot(seed=2)
        a, b = snap.mpcs[0], snap.mpcs[1]
        b.delay_ns = a.delay_ns  # force same bin
        snap.mpcs = [a, b]
        pdp = omni_pdp(snap, 5.0)
        assert len(pdp) == 1
        assert 10 ** (pdp[0][1] / 10.0) == pytest.approx(a.power_mw + b.power_mw, rel=1e-12)

    def test_pdp_integral_conserves_power(self):
        for seed in range(5):
            snap = snapshot(seed=seed, env="NLOS")
            pdp = omni_pdp(snap, 2.0)
            total = sum(10 ** (p / 10.0) for _, p in pdp)
            assert total == pytest.approx(snap.total_rx_power_mw, rel=1e-9)

    def test_bad_bin_rejected(self):
        with pytest.raises(ValueError):
            omni_pdp(snapshot(seed=1), 0.0)
