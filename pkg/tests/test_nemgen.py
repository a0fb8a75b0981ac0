import math

import numpy as np
import pytest

from corecohesive.mechanisms import MechanismWeights, candidate_sets
from corecohesive.nemgen import (REFERENCE_CHECKPOINTS, CheckpointSchedule, ConfigError,
                                 GeneratorConfig, Trajectory, checkpoint_schedule,
                                 dump_snapshots, generate, nem_step, sample_theta,
                                 theta_from_draw)
from corecohesive.netcore import BinaryNetwork, read_network

THETA_136 = (-0.18, 0.74, 0.37, -0.35, 0.42)


class TestTheta:
    def test_axis(self):
        assert theta_from_draw([3, 0, 0, 0, 0]).as_array().tolist() == [1, 0, 0, 0, 0]

    def test_equal_components(self):
        t = theta_from_draw([1, 1, 1, 1, 1]).as_array()
        np.testing.assert_allclose(t, np.full(5, 1 / math.sqrt(5)), rtol=0, atol=1e-15)
        assert abs(np.sum(t ** 2) - 1) < 1e-12

    def test_unit_norm(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            t = sample_theta(rng).as_array()
            assert abs(np.sum(t ** 2) - 1) < 1e-12

    def test_zero_draw_rejected(self):
        with pytest.raises(ValueError):
            theta_from_draw([0, 0, 0, 0, 0])

    def test_redraw_on_zero(self):
        class Stub:
            def __init__(self):
                self.calls = 0

            def standard_normal(self, size):
                self.calls += 1
                return np.zeros(size) if self.calls == 1 else np.array([0, 2.0, 0, 0, 0])

        stub = Stub()
        assert sample_theta(stub).popularity == 1.0 and stub.calls == 2


class TestSchedule:
    def test_geometric_rule(self):
        # m_i = round(100 * 1.9**(i-1)), computed independently
        expected = [int(math.floor(100 * 1.9 ** i + 0.5)) for i in range(12)]
        assert expected[-1] == 116490
        assert list(checkpoint_schedule()) == expected

    def test_override(self):
        assert checkpoint_schedule(points=REFERENCE_CHECKPOINTS).points == REFERENCE_CHECKPOINTS

    def test_small_cases(self):
        assert list(checkpoint_schedule(100, 2, 400)) == [100, 200, 400]
        assert list(checkpoint_schedule(50, 1.5, 50)) == [50]
        assert list(checkpoint_schedule(100, 2, 500)) == [100, 200, 400, 500]

    def test_invalid(self):
        with pytest.raises(ConfigError):
            CheckpointSchedule((5, 5))
        with pytest.raises(ConfigError):
            checkpoint_schedule(total=100, points=(50, 200))
        with pytest.raises(ConfigError):
            checkpoint_schedule(100, 1.0, 1000)


class TestStep:
    def test_empty_network_creates_or_stays(self):
        rng = np.random.default_rng(0)
        for q in (0.0, 1.0):
            out = nem_step(BinaryNetwork.empty(6), THETA_136, q, rng)
            assert out.n_links() == (1 if q == 1.0 else 0)

    def test_q_one_never_deletes(self):
        rng = np.random.default_rng(1)
        net = BinaryNetwork.empty(8)
        prev = 0
        for _ in range(300):
            net = nem_step(net, sample_theta(rng), 1.0, rng)
            assert net.n_links() >= prev
            prev = net.n_links()

    def test_q_zero_on_complete(self):
        rng = np.random.default_rng(2)
        net = BinaryNetwork.complete(6)
        out = nem_step(net, THETA_136, 0.0, rng)
        diff = np.argwhere(out.adj != net.adj)
        assert len(diff) == 1 and out.n_links() == net.n_links() - 1

    def test_change_is_in_focal_row_and_candidate_set(self):
        rng = np.random.default_rng(3)
        a = (rng.random((9, 9)) < 0.5).astype(np.int8)
        np.fill_diagonal(a, 0)
        net = BinaryNetwork(a)
        theta = sample_theta(rng)
        for seed in range(40):
            cfg = GeneratorConfig(0.5, 1, 9, seed)
            traj = generate(cfg, theta, initial=net)
            i, j = int(traj.focal[0]), int(traj.target[0])
            C, F = candidate_sets(net, i, theta)
            if traj.coin[0] < 0.5:
                assert j in C and traj.final.adj[i, j] == 1
            else:
                assert j in F and traj.final.adj[i, j] == 0
            changed = np.argwhere(traj.final.adj != net.adj)
            assert len(changed) <= 1
            if len(changed):
                assert tuple(changed[0]) == (i, j)

    def test_needs_four_units(self):
        with pytest.raises(ConfigError):
            nem_step(BinaryNetwork.empty(3), THETA_136, 0.5, np.random.default_rng())


class TestGenerate:
    def test_no_schedule(self):
        traj = generate(GeneratorConfig(0.5, 50, 6, 0), THETA_136)
        assert isinstance(traj, Trajectory) and traj.snapshots == []
        assert traj.final.n == 6

    def test_q_one_bounds(self):
        traj = generate(GeneratorConfig(1.0, 10, 8, 4), sample_theta(np.random.default_rng(4)))
        assert 1 <= traj.final.n_links() <= 10

    def test_determinism(self):
        cfg = GeneratorConfig(5 / 9, 2000, 12, 99)
        sched = checkpoint_schedule(100, 1.9, 2000)
        a = generate(cfg, THETA_136, sched)
        b = generate(cfg, THETA_136, sched)
        assert [it for it, _ in a.snapshots] == list(sched)
        assert all(x[1].adj.tobytes() == y[1].adj.tobytes() for x, y in zip(a.snapshots, b.snapshots))

    def test_snapshots_independent_of_schedule(self):
        cfg = GeneratorConfig(5 / 9, 1000, 10, 5)
        a = generate(cfg, THETA_136, [1000])
        b = generate(cfg, THETA_136, [10, 100, 500, 1000])
        assert a.snapshots[-1][1] == b.snapshots[-1][1] == a.final

    def test_snapshots_are_copies(self):
        traj = generate(GeneratorConfig(1.0, 40, 6, 0), THETA_136, [5, 40])
        early, late = traj.snapshots[0][1], traj.snapshots[1][1]
        assert early.n_links() <= 5 and late.n_links() >= early.n_links()
        assert early.adj is not late.adj
        assert not traj.snapshots[0][1].adj.flags.writeable

    def test_invariants_short_run(self):
        rng = np.random.default_rng(11)
        theta = sample_theta(rng)
        traj = generate(GeneratorConfig(0.6, 3000, 10, 11), theta, range(1, 3001))
        prev = np.zeros((10, 10), dtype=np.int8)
        for step, (it, net) in enumerate(traj.snapshots):
            assert not np.any(np.diag(net.adj))
            changed = np.argwhere(net.adj != prev)
            assert len(changed) <= 1
            if len(changed):
                assert changed[0][0] == traj.focal[step]
            prev = net.adj

    def test_schedule_beyond_k(self):
        with pytest.raises(ConfigError):
            generate(GeneratorConfig(0.5, 10, 6, 0), THETA_136, [20])

    def test_initial_size_mismatch(self):
        with pytest.raises(ConfigError):
            generate(GeneratorConfig(0.5, 10, 6, 0), THETA_136, initial=BinaryNetwork.empty(7))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(1.5, 10, 6)
        with pytest.raises(ConfigError):
            GeneratorConfig(0.5, 0, 6)
        with pytest.raises(ConfigError):
            GeneratorConfig(0.5, 10, 3)


def test_dump_snapshots(tmp_path):
    traj = generate(GeneratorConfig(1.0, 20, 5, 0), MechanismWeights(0, 1, 0, 0, 0), [10, 20])
    paths = dump_snapshots(traj.snapshots, tmp_path, "t7", 2)
    assert [p.rsplit("/", 1)[1] for p in paths] == ["t7_2_10.csv", "t7_2_20.csv"]
    assert read_network(paths[1], directed=True) == traj.snapshots[1][1]
