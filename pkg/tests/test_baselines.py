import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamalign.bandit import Observation, run_episode
from beamalign.baselines import ExhaustivePolicy, UbaPolicy, UcbPolicy, exhaustive_select, hoo_policy
from beamalign.channel import ArrayConfig, FluctuationModel, RssModel, build_rss_model, sample_channel


def table_env(means_dbm, sigma=0.0):
    return RssModel(np.asarray(means_dbm, dtype=float), FluctuationModel("gaussian", sigma))


def los_env(n, seed, sigma_db=2.0):
    arr = ArrayConfig(n_antennas=n)
    chan = sample_channel(arr, 1, 20.0, np.random.default_rng(seed))
    return build_rss_model(chan, arr, FluctuationModel("gaussian", sigma_db))


class TestExhaustive:
    @given(st.integers(2, 64), st.integers(1, 500))
    def test_sweep_order(self, n, t):
        assert exhaustive_select(t, n) == (t - 1) % n + 1

    @pytest.mark.parametrize("n", [8, 64, 128])
    def test_n_measurements_and_argmax_noiseless(self, n):
        env = los_env(n, 1, sigma_db=0.0)
        tr = run_episode(env, ExhaustivePolicy(n), 1000, np.random.default_rng(0))
        assert tr.n_measurements == n and tr.terminated_at == n
        np.testing.assert_array_equal(tr.beams, np.arange(1, n + 1))
        assert tr.final_beam == env.optimal_beam


class TestUcb:
    def test_forced_exploration(self):
        p = UcbPolicy(5, np.random.default_rng(0))
        assert [p.select(t) for t in range(1, 6)] == [1, 2, 3, 4, 5]

    def test_index_formula(self):
        p = UcbPolicy(3, np.random.default_rng(0), eta=0.2)
        for t, (b, r) in enumerate([(1, 0.3), (2, 0.6), (3, 0.1), (2, 0.8)], start=1):
            p.update(Observation(t, b, r, 0.0))
        idx = p.indices(5)
        expect = [0.3 + 0.2 * math.sqrt(2 * math.log(5)), 0.7 + 0.2 * math.sqrt(math.log(5)), 0.1 + 0.2 * math.sqrt(2 * math.log(5))]
        np.testing.assert_allclose(idx, expect, rtol=1e-14)
        assert p.select(5) == 2

    def test_random_tie_break(self):
        picks = set()
        for s in range(40):
            p = UcbPolicy(3, np.random.default_rng(s))
            for b in (1, 2, 3):
                p.update(Observation(b, b, 0.5, 0.0))
            picks.add(p.select(4))
        assert picks == {1, 2, 3}

    def test_concentrates_on_best(self):
        env = table_env([-60, -30, -70], sigma=2.0)
        tr = run_episode(env, UcbPolicy(3, np.random.default_rng(1)), 2000, np.random.default_rng(2))
        assert np.mean(tr.beams[-500:] == 2) > 0.9 and tr.terminated_at is None


class TestUba:
    def test_neighbourhood_is_cyclic(self):
        p = UbaPolicy(8, np.random.default_rng(0))
        p.leader = 1
        assert p.neighbourhood() == [8, 1, 2]
        p.leader = 8
        assert p.neighbourhood() == [7, 8, 1]

    def test_only_neighbours_played(self):
        env = los_env(64, 3)
        p = UbaPolicy(64, np.random.default_rng(4))
        for t in range(1, 300):
            allowed = p.neighbourhood()
            b = p.select(t)
            assert b in allowed
            p.update(Observation(t, b, (env.sample(b, np.random.default_rng(t)) + 80) / 60, 0.0))
        assert len(p.leaders) == 300

    @settings(max_examples=30, deadline=None)
    @given(st.integers(8, 64), st.data())
    def test_climbs_unimodal_noiseless(self, n, data):
        # strictly unimodal on the cycle and inside the unclamped reward range
        peak = data.draw(st.integers(1, n))
        dist = np.minimum((np.arange(1, n + 1) - peak) % n, (peak - np.arange(1, n + 1)) % n)
        env = table_env(-25.0 - 50.0 * dist / n)
        p = UbaPolicy(n, np.random.default_rng(data.draw(st.integers(0, 2**31))))
        tr = run_episode(env, p, 40 * n, np.random.default_rng(0))
        assert p.leader == peak == tr.final_beam

    def test_leader_moves_one_step(self):
        p = UbaPolicy(16, np.random.default_rng(1))
        prev = p.leaders[0]
        env = los_env(16, 2)
        rng = np.random.default_rng(3)
        for t in range(1, 400):
            b = p.select(t)
            p.update(Observation(t, b, (env.sample(b, rng) + 80) / 60, 0.0))
        steps = [(b - a) % 16 for a, b in zip(p.leaders, p.leaders[1:])]
        assert set(steps) <= {0, 1, 15}
        assert prev in range(1, 17)


def test_hoo_policy_factory():
    p = hoo_policy(32, np.random.default_rng(0), eta=0.1)
    assert p.name == "hoo" and p.config.sigma_sq == pytest.approx(0.01) and p.config.rho1 == 3.0
