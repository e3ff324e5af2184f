import dataclasses
import math

import numpy as np
import pytest

from mmwavesim.channel import (
    C_M_PER_NS,
    angle_diff,
    los_geometry,
    ut_position_at_distance,
)
from mmwavesim.config import SimConfig, TrajectorySpec
from mmwavesim.consistency import (
    MrsTag,
    init_mrs_tags,
    los_angle_rates,
    mrs_consistent_aoa,
    mrs_mirrored_heading,
    path_length_after_step,
    run_spatially_consistent,
    segment_transition,
    trajectory_positions,
    update_delay_phase,
    update_los_angles,
    update_nlos_mpc,
    update_powers,
)
from mmwavesim.rng import substream
from tests.test_channel import snapshot


class TestTrajectory:
    def test_linear_positions(self):
        spec = TrajectorySpec(track_type="linear", track_length_m=40.0, heading_deg=90.0)
        pos = trajectory_positions(spec, (100.0, 0.0))
        assert len(pos) == 41
        assert np.allclose(pos[:, 0], 100.0)  # collinear along +y
        assert pos[-1][1] == pytest.approx(40.0, abs=1e-9)

    def test_hexagon_traces_four_sides(self):
        spec = TrajectorySpec(track_type="hexagon", track_length_m=40.0, side_length_m=10.0,
                              heading_deg=90.0)
        pos = trajectory_positions(spec, (0.0, 0.0))
        assert len(pos) == 41
        # vertices at arc 10, 20, 30 (clockwise 60 deg turns from north)
        assert pos[10] == pytest.approx([0.0, 10.0])
        assert pos[20] == pytest.approx([10 * math.cos(math.radians(30)), 15.0])
        # direction changes exactly three times over four sides
        headings = np.round(np.degrees(np.arctan2(*np.diff(pos, axis=0).T[::-1])), 6)
        assert len(set(headings)) == 4

    def test_unit_spacing(self):
        spec = TrajectorySpec(track_type="hexagon", track_length_m=40.0, side_length_m=10.0)
        pos = trajectory_positions(spec, (50.0, 0.0))
        steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
        assert np.allclose(steps, 1.0, atol=1e-9)

    def test_nonpositive_length_rejected(self):
        with pytest.raises(ValueError):
            trajectory_positions(TrajectorySpec(track_length_m=0.0))


class TestLosAngleUpdates:
    def test_radial_motion_leaves_azimuth(self):
        # velocity aligned with the departure azimuth: numerator vanishes
        s_az, _ = los_angle_rates(0.0, math.pi / 2, 100.0, (1.0, 0.0, 0.0))
        assert s_az == pytest.approx(0.0, abs=1e-15)

    def test_tangential_motion_rate(self):
        s_az, s_zen = los_angle_rates(0.0, math.pi / 2, 100.0, (0.0, 1.0, 0.0))
        assert s_az == pytest.approx(0.01, rel=1e-12)
        assert s_zen == pytest.approx(0.0, abs=1e-15)

    def test_vertical_motion_zenith_rate(self):
        _, s_zen = los_angle_rates(0.0, math.pi / 2, 100.0, (0.0, 0.0, 1.0))
        assert s_zen == pytest.approx(-0.01, rel=1e-12)

    def test_degenerate_zenith_freezes_azimuth(self):
        s_az, _ = los_angle_rates(1.0, 1e-5, 100.0, (0.0, 1.0, 0.0))
        assert s_az == 0.0

    def test_one_step_drift_vs_exact_geometry(self):
        # criterion: <= 0.5 deg per 1 m step at r >= 50 m
        bs = (0.0, 0.0, 10.0)
        rng = substream(8, "harness")
        for _ in range(300):
            r = float(rng.uniform(50.0, 500.0))
            ut = ut_position_at_distance(SimConfig(tr_distance_m=r), r)
            theta = float(rng.uniform(0, 2 * math.pi))
            v = (math.cos(theta), math.sin(theta), 0.0)
            aod, zod, aoa, zoa, d3 = los_geometry(bs, ut)
            drifted = update_los_angles((aod, zod, aoa, zoa), v, d3, 1.0)
            ut2 = (ut[0] + v[0], ut[1] + v[1], ut[2])
            exact = los_geometry(bs, ut2)[:4]
            for got, want in zip(drifted, exact):
                assert abs(angle_diff(got, want)) <= math.radians(0.5)


class TestMrs:
    def test_one_reflection_example(self):
        # surface at 90 deg, aod 30 deg -> aoa 330 deg, heading 45 -> mirrored 135
        aod = math.radians(30.0)
        aoa = math.radians(330.0)
        parity = -1  # odd reflection count branch: aoa = delta - aod + pi
        delta = (aoa - parity * aod - (1 - parity) / 2 * math.pi) % (2 * math.pi)
        tag = MrsTag(parity, delta, 0.0)
        assert math.degrees(delta) == pytest.approx(180.0, abs=1e-9)
        assert math.degrees(mrs_consistent_aoa(tag, aod)) == pytest.approx(330.0, abs=1e-9)
        assert math.degrees(mrs_mirrored_heading(tag, math.radians(45.0))) == pytest.approx(
            135.0, abs=1e-9
        )

    def test_even_branch_identity_at_zero_delta(self):
        tag = MrsTag(parity=1, delta_rs_rad=0.0, mirrored_heading_rad=0.0)
        aod = math.radians(73.0)
        assert mrs_consistent_aoa(tag, aod) == pytest.approx(aod, abs=1e-12)
        assert mrs_mirrored_heading(tag, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_init_tags_reproduce_initial_angles(self):
        snap = snapshot(seed=5, env="NLOS")
        tags = init_mrs_tags(snap, math.radians(90.0), substream(5, "mrs-tags"))
        for mpc, tag in zip(snap.mpcs, tags):
            assert tag is not None
            assert abs(angle_diff(mrs_consistent_aoa(tag, mpc.aod_rad), mpc.aoa_rad)) < 1e-9

    def test_los_mpc_gets_no_tag(self):
        snap = snapshot(seed=5, env="LOS")
        tags = init_mrs_tags(snap, 0.0, substream(5, "mrs-tags"))
        assert tags[0] is None
        assert all(t is not None for t in tags[1:])

    def test_zero_velocity_is_noop(self):
        snap = snapshot(seed=6, env="NLOS")
        tags = init_mrs_tags(snap, 0.0, substream(6, "mrs-tags"))
        mpc, tag = snap.mpcs[0], tags[0]
        before = (mpc.aod_rad, mpc.zod_rad, mpc.aoa_rad, mpc.zoa_rad)
        update_nlos_mpc(mpc, tag, (0.0, 0.0, 0.0), mpc.delay_ns * C_M_PER_NS, 1.0, 0.0)
        after = (mpc.aod_rad, mpc.zod_rad, mpc.aoa_rad, mpc.zoa_rad)
        assert before == pytest.approx(after, abs=1e-15)

    def test_odd_branch_sum_invariant_after_update(self):
        # for the odd-reflection branch: aoa + aod = delta + pi (mod 2pi)
        snap = snapshot(seed=8, env="NLOS")
        tags = init_mrs_tags(snap, 0.0, substream(8, "mrs-tags"))
        rng = substream(18, "harness")
        for mpc, tag in zip(snap.mpcs, tags):
            if tag.parity != -1:
                continue
            heading = float(rng.uniform(0, 2 * math.pi))
            v = (math.cos(heading), math.sin(heading), 0.0)
            update_nlos_mpc(mpc, tag, v, mpc.delay_ns * C_M_PER_NS, 1.0, heading)
            residual = angle_diff(mpc.aoa_rad + mpc.aod_rad, tag.delta_rs_rad + math.pi)
            assert abs(residual) < 1e-9

    def test_invariant_preserved_and_ranges_over_random_steps(self):
        # criterion: relation residual <= 1e-6 rad over 1e4 random steps
        snap = snapshot(seed=7, env="NLOS")
        tags = init_mrs_tags(snap, 0.0, substream(7, "mrs-tags"))
        rng = substream(17, "harness")
        steps = 0
        while steps < 10_000:
            for mpc, tag in zip(snap.mpcs, tags):
                heading = float(rng.uniform(0, 2 * math.pi))
                speed = float(rng.uniform(0.1, 2.0))
                v = (speed * math.cos(heading), speed * math.sin(heading), 0.0)
                update_nlos_mpc(mpc, tag, v, mpc.delay_ns * C_M_PER_NS, 1.0, heading)
                update_delay_phase(mpc, speed, heading, 28.0, tag)
                residual = abs(angle_diff(mrs_consistent_aoa(tag, mpc.aod_rad), mpc.aoa_rad))
                assert residual <= 1e-6
                assert 0.0 <= mpc.aod_rad < 2 * math.pi and 0.0 <= mpc.aoa_rad < 2 * math.pi
                assert 0.0 < mpc.zod_rad < math.pi and 0.0 < mpc.zoa_rad < math.pi
                assert np.isfinite(mpc.delay_ns) and np.isfinite(mpc.phase_rad)
                steps += 1
                if steps >= 10_000:
                    break


class TestDelayPhase:
    def test_step_toward_source(self):
        assert path_length_after_step(100.0, 1.0, 1.0) == pytest.approx(99.0, rel=1e-12)

    def test_perpendicular_step(self):
        assert path_length_after_step(100.0, 1.0, 0.0) == pytest.approx(
            math.sqrt(10001.0), rel=1e-12
        )

    def test_change_bounded_by_step(self):
        rng = substream(9, "harness")
        for _ in range(2000):
            ell = float(rng.uniform(5.0, 500.0))
            s = float(rng.uniform(0.0, 2.0))
            cos_a = float(rng.uniform(-1.0, 1.0))
            new = path_length_after_step(ell, s, cos_a)
            assert abs(new - ell) <= s + 1e-12

    def test_phase_advances_by_wavelengths(self):
        snap = snapshot(seed=3)
        mpc = snap.mpcs[1]
        mpc.zoa_rad = math.pi / 2
        mpc.aoa_rad = 0.0
        mpc.phase_rad = 0.0
        ell0 = mpc.delay_ns * C_M_PER_NS
        update_delay_phase(mpc, 1.0, math.pi, 28.0, None)  # step away from arrival dir
        dl = mpc.delay_ns * C_M_PER_NS - ell0
        lam = C_M_PER_NS / 28.0
        assert mpc.phase_rad == pytest.approx((2 * math.pi * dl / lam) % (2 * math.pi), rel=1e-9)


class TestUpdatePowers:
    def test_unchanged_delays_and_total_keep_powers(self):
        cfg = SimConfig()
        snap = snapshot(cfg, env="NLOS", seed=11)
        before = [m.power_mw for m in snap.mpcs]
        update_powers(snap, snap.total_rx_power_mw, cfg)
        assert before == pytest.approx([m.power_mw for m in snap.mpcs], rel=1e-12)

    def test_halved_total_halves_every_power(self):
        cfg = SimConfig()
        snap = snapshot(cfg, env="NLOS", seed=11)
        before = np.array([m.power_mw for m in snap.mpcs])
        update_powers(snap, snap.total_rx_power_mw / 2.0, cfg)
        after = np.array([m.power_mw for m in snap.mpcs])
        assert after == pytest.approx(before / 2.0, rel=1e-12)

    def test_cluster_ordering_after_delay_drift(self):
        cfg = SimConfig()
        snap = snapshot(cfg, env="NLOS", seed=12)
        rng = substream(12, "harness")
        for m in snap.mpcs:
            m.delay_ns += float(rng.uniform(0.0, 5.0))
        update_powers(snap, snap.total_rx_power_mw, cfg)
        ordered = sorted(snap.clusters, key=lambda c: c.excess_delay_ns)
        fractions = [c.power_fraction for c in ordered]
        assert all(a >= b - 1e-12 for a, b in zip(fractions, fractions[1:]))


class TestSegmentTransition:
    def test_identical_segments_noop(self):
        cfg = SimConfig()
        old = snapshot(cfg, env="NLOS", seed=13)
        new = snapshot(cfg, env="NLOS", seed=13)
        ramp = segment_transition(old, new, cfg=cfg)
        assert len(ramp) == len(old.clusters)
        final = ramp[-1]
        assert len(final.clusters) == len(new.clusters)
        assert sum(m.power_mw for m in final.mpcs) == pytest.approx(
            new.total_rx_power_mw, rel=1e-9
        )
        assert [m.delay_ns for m in final.mpcs] == pytest.approx(
            [m.delay_ns for m in new.mpcs], rel=1e-12
        )

    def _counts(self, n_old_seed, n_new_seed):
        cfg = SimConfig()
        return snapshot(cfg, env="NLOS", seed=n_old_seed), snapshot(cfg, env="NLOS", seed=n_new_seed), cfg

    def test_one_cluster_event_per_snapshot(self):
        old, new, cfg = self._counts(14, 15)
        ramp = segment_transition(old, new, cfg=cfg)
        assert len(ramp) == max(len(old.clusters), len(new.clusters))
        n_old, n_new = len(old.clusters), len(new.clusters)
        for k, snap in enumerate(ramp):
            expect = max(n_old - (k + 1), 0) + min(k + 1, n_new)
            assert len(snap.clusters) == expect

    def test_unequal_counts_solo_ramps(self):
        cfg = SimConfig()
        old = snapshot(cfg, env="NLOS", seed=16)
        new = snapshot(cfg, env="NLOS", seed=17)
        old.clusters = old.clusters[:2]
        old.mpcs = [old.mpcs[i] for c in old.clusters for i in c.mpc_indices]
        idx = 0
        for c in old.clusters:
            c.mpc_indices = list(range(idx, idx + len(c.mpc_indices)))
            idx += len(c.mpc_indices)
        if len(new.clusters) < 4:
            pytest.skip("draw produced fewer than 4 new clusters")
        ramp = segment_transition(old, new, cfg=cfg)
        assert len(ramp) == len(new.clusters)
        # after the old clusters are gone the remaining steps are birth-only
        for k in range(2, len(ramp)):
            assert all(c.excess_delay_ns >= 0 for c in ramp[k].clusters)
            assert len(ramp[k].clusters) == min(k + 1, len(new.clusters))

    def test_power_follows_new_total_throughout(self):
        old, new, cfg = self._counts(18, 19)
        for snap in segment_transition(old, new, cfg=cfg):
            assert sum(m.power_mw for m in snap.mpcs) == pytest.approx(
                new.total_rx_power_mw, rel=1e-9
            )


class TestRunSpatiallyConsistent:
    def _cfg(self, **kw):
        base = SimConfig(mode="spatial-consistency", environment="LOS", seed=1)
        return dataclasses.replace(base, **kw)

    def test_default_hexagon_gives_41_snapshots(self):
        snaps = run_spatially_consistent(self._cfg())
        assert len(snaps) == 41

    def test_pathloss_smooth_with_correlated_sf(self):
        snaps = run_spatially_consistent(self._cfg())
        pl = [s.pathloss.total_db for s in snaps]
        assert np.abs(np.diff(pl)).max() < 3.0

    def test_iid_sf_spread_around_16db(self):
        spreads = []
        for seed in range(10):
            snaps = run_spatially_consistent(self._cfg(seed=seed), iid_sf=True)
            pl = [s.pathloss.total_db for s in snaps]
            spreads.append(max(pl) - min(pl))
        assert 11.0 <= np.mean(spreads) <= 21.0

    def test_correlated_vs_iid_power_step_rms(self):
        # RMS snapshot-to-snapshot power change at least 3x smaller when correlated
        def rms_step(snaps):
            p = np.array([s.total_power_dbm() for s in snaps])
            return np.sqrt(np.mean(np.diff(p) ** 2))

        ratio = []
        for seed in range(5):
            corr = rms_step(run_spatially_consistent(self._cfg(seed=seed)))
            iid = rms_step(run_spatially_consistent(self._cfg(seed=seed), iid_sf=True))
            ratio.append(iid / corr)
        assert np.mean(ratio) >= 3.0

    def test_zero_length_track_single_snapshot(self):
        cfg = self._cfg(trajectory=TrajectorySpec(track_length_m=0.0))
        snaps = run_spatially_consistent(cfg)
        assert len(snaps) == 1

    def test_track_outside_map_rejected(self):
        cfg = self._cfg(trajectory=TrajectorySpec(track_type="linear", track_length_m=200.0,
                                                  heading_deg=0.0))
        with pytest.raises(ValueError, match="map extent"):
            run_spatially_consistent(cfg)

    def test_power_conservation_every_snapshot(self):
        for snaps in (
            run_spatially_consistent(self._cfg(seed=2)),
            run_spatially_consistent(self._cfg(seed=3, environment="auto")),
        ):
            for s in snaps:
                assert sum(m.power_mw for m in s.mpcs) == pytest.approx(
                    s.total_rx_power_mw, rel=1e-9
                )

    def test_los_ray_tracks_exact_geometry(self):
        cfg = self._cfg(seed=4)
        snaps = run_spatially_consistent(cfg)
        bs = (0.0, 0.0, cfg.bs_height_m)
        for s in snaps:
            los = [m for m in s.mpcs if m.is_los]
            if not los:
                continue
            aod, _zod, aoa, _zoa, d3 = los_geometry(bs, s.position_m)
            assert abs(angle_diff(los[0].aod_rad, aod)) <= math.radians(0.5)
            assert abs(angle_diff(los[0].aoa_rad, aoa)) <= math.radians(0.5)
            assert los[0].delay_ns == pytest.approx(d3 / C_M_PER_NS, rel=1e-12)

    def test_delay_continuity_bound(self):
        # single segment covering the whole track: MPC identity is stable
        cfg = self._cfg(
            seed=5,
            trajectory=TrajectorySpec(track_type="linear", track_length_m=10.0,
                                      heading_deg=90.0, segment_length_m=15.0),
        )
        snaps = run_spatially_consistent(cfg)
        step_ns = cfg.trajectory.update_distance_m / C_M_PER_NS
        for a, b in zip(snaps, snaps[1:]):
            assert len(a.mpcs) == len(b.mpcs)
            for ma, mb in zip(a.mpcs, b.mpcs):
                assert abs(mb.delay_ns - ma.delay_ns) <= step_ns + 1e-9

    def test_deterministic(self):
        a = run_spatially_consistent(self._cfg(seed=6))
        b = run_spatially_consistent(self._cfg(seed=6))
        assert [s.total_rx_power_mw for s in a] == [s.total_rx_power_mw for s in b]
        assert [m.aoa_rad for s in a for m in s.mpcs] == [m.aoa_rad for s in b for m in s.mpcs]
