import numpy as np
import pytest

from mecoffload.agents import (DarlingAgent, DarlingExperience, DeepSarlAgent,
                               ReplayMemory, SarlExperience, darling_target,
                               sarl_targets, select_action)

from mecoffload.nn import init_mlp, mlp_forward


def rngs(seed=0):
    root = np.random.SeedSequence(seed)
    return [np.random.default_rng(k) for k in root.spawn(3)]


def make_darling(seed=0, **kw):
    init, explore, sample = rngs(seed)
    kw.setdefault("hidden", 16)
    kw.setdefault("memory", 64)
    kw.setdefault("batch_size", 8)
    return DarlingAgent(input_dim=4, n_actions=5, discount=0.9,
                        explore_eps=0.01, init_rng=init, explore_rng=explore,
                        sample_rng=sample, **kw)


def make_sarl(seed=0, **kw):
    init, explore, sample = rngs(seed)
    kw.setdefault("hidden_per_agent", 8)
    kw.setdefault("memory", 64)
    kw.setdefault("batch_size", 8)
    return DeepSarlAgent(input_dim=4, n_actions=5, discount=0.9,
                         explore_eps=0.01, init_rng=init, explore_rng=explore,
                         sample_rng=sample, **kw)


def darling_exp(rng, agent, utility=1.0):
    s = rng.normal(size=4)
    t = rng.normal(size=4)
    return DarlingExperience(state=None, state_vec=s,
                             action=int(rng.integers(agent.n_actions)),
                             utility=utility, next_state=None, next_state_vec=t)


class TestSelectAction:
    def test_greedy_argmax(self):
        rng = np.random.default_rng(0)
        assert select_action([1.0, 3.0, 2.0], 0.0, rng) == 1

    def test_tie_breaks_low(self):
        rng = np.random.default_rng(0)
        assert select_action([2.0, 2.0, 1.0], 0.0, rng) == 0

    def test_pure_exploration_is_uniform(self):
        rng = np.random.default_rng(1)
        counts = np.zeros(35)
        n = 100_000
        q = np.arange(35.0)
        for _ in range(n):
            counts[select_action(q, 1.0, rng)] += 1
        freq = counts / n
        assert np.all(np.abs(freq - 1 / 35) < 0.005)

    def test_nongreedy_rate_at_low_eps(self):
        # eps * (1 - 1/Y) of picks leave the argmax
        rng = np.random.default_rng(2)
        q = np.linspace(0, 1, 35)
        n = 100_000
        nongreedy = sum(select_action(q, 0.01, rng) != 34 for _ in range(n))
        assert 0.005 <= nongreedy / n <= 0.015

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_action([], 0.5, np.random.default_rng(0))


class TestReplayMemory:
    def test_oldest_evicted(self):
        mem = ReplayMemory(2)
        for item in "abc":
            mem.push(item)
        assert sorted(mem._buf) == ["b", "c"]

    def test_size_and_counter(self):
        mem = ReplayMemory(3)
        mem.push("a")
        assert len(mem) == 1
        counts = []
        for item in "bcdef":
            mem.push(item)
            counts.append(mem.count)
        assert counts == [2, 3, 4, 5, 6]
        assert len(mem) == 3

    def test_sample_requires_fill(self):
        mem = ReplayMemory(10)
        rng = np.random.default_rng(0)
        mem.push("a")
        assert mem.sample(2, rng) is None
        assert not mem.ready(2)

    def test_full_sample_is_permutation(self):
        mem = ReplayMemory(5)
        for i in range(5):
            mem.push(i)
        batch = mem.sample(5, np.random.default_rng(0))
        assert sorted(batch) == [0, 1, 2, 3, 4]

    def test_single_sample(self):
        mem = ReplayMemory(4)
        mem.push("only")
        assert mem.sample(1, np.random.default_rng(0)) == ["only"]

    def test_sampling_is_uniform(self):
        mem = ReplayMemory(5)
        for i in range(5):
            mem.push(i)
        rng = np.random.default_rng(3)
        counts = np.zeros(5)
        n = 100_000
        for _ in range(n):
            counts[mem.sample(1, rng)[0]] += 1
        assert np.all(np.abs(counts / n - 0.2) < 0.01)


class TestDarlingTarget:
    def test_myopic_limit(self):
        agent = make_darling()
        rng = np.random.default_rng(1)
        exp = darling_exp(rng, agent, utility=7.5)
        assert darling_target(exp, agent.params, agent.target, 0.0) == 7.5

    def test_arithmetic(self):
        # y = (1-g) u + g * target value at the online argmax
        agent = make_darling()
        rng = np.random.default_rng(2)
        exp = darling_exp(rng, agent, utility=20.0)
        a_star = int(np.argmax(mlp_forward(agent.params, exp.next_state_vec)))
        boot = mlp_forward(agent.target, exp.next_state_vec)[a_star]
        y = darling_target(exp, agent.params, agent.target, 0.9)
        assert y == pytest.approx(0.1 * 20.0 + 0.9 * boot, rel=1e-12)
        # frozen spot check of the two-net arithmetic
        if boot == pytest.approx(10.0):
            assert y == pytest.approx(11.0)

    def test_selection_evaluation_decoupled(self):
        # changing the target net rescales y but never moves the argmax
        agent = make_darling(seed=4)
        rng = np.random.default_rng(5)
        exp = darling_exp(rng, agent, utility=0.0)
        a_star = int(np.argmax(mlp_forward(agent.params, exp.next_state_vec)))
        other = init_mlp(4, 16, 5, np.random.default_rng(99))
        y1 = darling_target(exp, agent.params, agent.target, 0.9)
        y2 = darling_target(exp, agent.params, other, 0.9)
        boot1 = mlp_forward(agent.target, exp.next_state_vec)[a_star]
        boot2 = mlp_forward(other, exp.next_state_vec)[a_star]
        assert y1 - y2 == pytest.approx(0.9 * (boot1 - boot2), rel=1e-9)

    def test_double_estimator_values_online_choice(self):
        # online prefers action 1, target prefers action 0: y follows online's pick
        agent = make_darling()
        agent.params.w1[:] = 0; agent.params.b1[:] = 0; agent.params.w2[:] = 0
        agent.params.b2[:] = [1.0, 5.0, 0, 0, 0]
        agent.target.w1[:] = 0; agent.target.b1[:] = 0; agent.target.w2[:] = 0
        agent.target.b2[:] = [7.0, 2.0, 0, 0, 0]
        exp = DarlingExperience(None, np.zeros(4), 0, 0.0, None, np.zeros(4))
        assert darling_target(exp, agent.params, agent.target, 0.9) \
            == pytest.approx(1.8)


class TestDarlingTraining:
    def test_not_ready_returns_none(self):
        agent = make_darling()
        assert agent.train_step() is None

    def test_perfect_predictions_leave_params(self):
        # exactly-zero errors produce exactly-zero gradients, which Adam
        # maps to a zero step; a myopic agent makes the targets exact
        init, explore, sample = rngs(3)
        agent = DarlingAgent(input_dim=4, n_actions=5, discount=0.0,
                             explore_eps=0.01, init_rng=init,
                             explore_rng=explore, sample_rng=sample,
                             hidden=16, memory=64, batch_size=4)
        rng = np.random.default_rng(6)
        # zero the hidden path so predictions equal b2 exactly under any
        # BLAS summation order
        agent.params.w2[:] = 0.0
        agent.params.b2[:] = np.arange(5.0)
        for _ in range(4):
            a = int(rng.integers(5))
            agent.remember(DarlingExperience(None, rng.normal(size=4), a,
                                             float(a), None,
                                             rng.normal(size=4)))
        before = agent.params.copy()
        loss = agent.train_step()
        assert loss == 0.0
        for f in ("w1", "b1", "w2", "b2"):
            np.testing.assert_array_equal(getattr(agent.params, f),
                                          getattr(before, f))

    def test_single_transition_loss(self):
        agent = make_darling(batch_size=1)
        rng = np.random.default_rng(7)
        exp = darling_exp(rng, agent, utility=3.0)
        agent.remember(exp)
        y = darling_target(exp, agent.params, agent.target, agent.discount)
        pred = mlp_forward(agent.params, exp.state_vec)[exp.action]
        loss = agent.train_step()
        assert loss == pytest.approx((y - pred) ** 2, rel=1e-12)

    def test_overfits_frozen_batch(self):
        agent = make_darling(batch_size=8, sync_every=10**9, lr=3e-3)
        rng = np.random.default_rng(8)
        for _ in range(8):
            agent.remember(darling_exp(rng, agent, utility=rng.uniform(0, 20)))
        first = agent.train_step()
        last = None
        for _ in range(200):
            last = agent.train_step()
        assert last < 0.5 * first

    def test_sync_semantics(self):
        agent = make_darling()
        rng = np.random.default_rng(9)
        x = rng.normal(size=4)
        # before any sync the target still equals the initial copy
        np.testing.assert_array_equal(agent.target.w1, agent.params.w1)
        for _ in range(12):
            agent.remember(darling_exp(rng, agent))
        agent.train_step()
        assert not np.array_equal(agent.target.w1, agent.params.w1)
        agent.sync_target()
        np.testing.assert_allclose(mlp_forward(agent.target, x),
                                   mlp_forward(agent.params, x), rtol=0)
        snap = agent.target.copy()
        agent.sync_target()                       # idempotent
        np.testing.assert_array_equal(snap.w2, agent.target.w2)


class TestSarlTargets:
    def make_exp(self, agent, rng, utilities):
        return SarlExperience(state=None, state_vec=rng.normal(size=4),
                              action=int(rng.integers(5)),
                              agent_utilities=tuple(utilities),
                              next_state=None,
                              next_state_vec=rng.normal(size=4),
                              next_action=int(rng.integers(5)))

    def test_myopic_limit(self):
        agent = make_sarl()
        rng = np.random.default_rng(10)
        exp = self.make_exp(agent, rng, (1.0, 2.0, 3.0, 4.0, 5.0))
        assert sarl_targets(exp, agent.targets, 0.0) == (1.0, 2.0, 3.0, 4.0, 5.0)

    def test_arithmetic(self):
        # y_k = (1-g) u_k + g Q_k(next, next_action)
        agent = make_sarl()
        rng = np.random.default_rng(11)
        exp = self.make_exp(agent, rng, (2.0,) * 5)
        ys = sarl_targets(exp, agent.targets, 0.9)
        for k, y in enumerate(ys):
            boot = mlp_forward(agent.targets[k], exp.next_state_vec)[exp.next_action]
            assert y == pytest.approx(0.2 + 0.9 * boot, rel=1e-12)

    def test_sum_matches_monolithic_sarsa_target(self):
        agent = make_sarl()
        rng = np.random.default_rng(12)
        u_k = tuple(rng.uniform(0, 4, size=5))
        exp = self.make_exp(agent, rng, u_k)
        ys = sarl_targets(exp, agent.targets, 0.9)
        boot_sum = sum(mlp_forward(t, exp.next_state_vec)[exp.next_action]
                       for t in agent.targets)
        assert sum(ys) == pytest.approx(0.1 * sum(u_k) + 0.9 * boot_sum, rel=1e-12)

    def test_no_argmax_in_targets(self):
        # bootstrapping at the stored action, not the greedy one
        agent = make_sarl()
        rng = np.random.default_rng(13)
        exp = self.make_exp(agent, rng, (1.0,) * 5)
        worst = int(np.argmin(mlp_forward(agent.targets[0], exp.next_state_vec)))
        exp = exp._replace(next_action=worst)
        y0 = sarl_targets(exp, agent.targets, 0.9)[0]
        boot = mlp_forward(agent.targets[0], exp.next_state_vec)[worst]
        assert y0 == pytest.approx(0.1 + 0.9 * boot, rel=1e-12)


class TestDeepSarlTraining:
    def fill(self, agent, rng, n, zero_group=None, pool=None):
        # `pool`: draw states from a fixed set, so every bootstrapped
        # (next state, next action) is itself a trained pair
        def draw():
            return pool[rng.integers(len(pool))] if pool is not None \
                else rng.normal(size=4)

        for _ in range(n):
            u = list(rng.uniform(0, 4, size=agent.n_agents))
            if zero_group is not None:
                u[zero_group] = 0.0
            exp = SarlExperience(None, draw(), int(rng.integers(5)),
                                 tuple(u), None, draw(), int(rng.integers(5)))
            agent.remember(exp)

    def test_accumulative_loss_is_sum(self):
        agent = make_sarl(batch_size=4)
        rng = np.random.default_rng(14)
        self.fill(agent, rng, 4)
        batch = list(agent.memory._buf)
        # recompute the per-agent losses against the pre-update params
        expected = 0.0
        for k in range(agent.n_agents):
            errs = []
            for b in batch:
                y = (0.1 * b.agent_utilities[k] + 0.9 *
                     mlp_forward(agent.targets[k], b.next_state_vec)[b.next_action])
                pred = mlp_forward(agent.params[k], b.state_vec)[b.action]
                errs.append((y - pred) ** 2)
            expected += np.mean(errs)
        agent.sample_rng = np.random.default_rng(0)    # sample the full batch
        loss = agent.train_step()
        assert loss == pytest.approx(expected, rel=1e-10)

    def test_zero_utility_group_trains_to_zero(self):
        # with zero utility the group's fixed point is Q == 0; a 1e4-step
        # run over a closed state pool contracts the trained pairs to zero
        agent = make_sarl(batch_size=8, sync_every=25, lr=3e-3)
        rng = np.random.default_rng(15)
        pool = rng.normal(size=(6, 4))
        self.fill(agent, rng, 64, zero_group=2, pool=pool)
        for j in range(1, 10_001):
            agent.train_step()
            agent.maybe_sync(j)
        trained = np.array([
            mlp_forward(agent.params[2], b.state_vec)[b.action]
            for b in agent.memory._buf])
        assert np.abs(trained).max() < 0.05

    def test_aggregation_rescale_invariance(self):
        agent = make_sarl(seed=20)
        rng = np.random.default_rng(16)
        x = rng.normal(size=4)
        before = int(np.argmax(agent.q_values(x)))
        for p in agent.params:
            p.w2 *= 3.0
            p.b2 *= 3.0
        assert int(np.argmax(agent.q_values(x))) == before

    def test_single_group_matches_monolithic_shapes(self):
        agent = make_sarl(pattern=((1, 2, 3, 4, 5),), hidden_per_agent=16)
        assert agent.n_agents == 1
        assert agent.params[0].sizes == (4, 16, 5)
        rng = np.random.default_rng(17)
        self.fill(agent, rng, 8)
        assert agent.train_step() is not None


class TestCheckpoints:
    def test_darling_roundtrip(self, tmp_path):
        agent = make_darling(seed=30)
        rng = np.random.default_rng(31)
        for _ in range(12):
            agent.remember(darling_exp(rng, agent))
        agent.train_step()
        path = tmp_path / "darling.npz"
        agent.save(path)
        other = make_darling(seed=99)
        other.load(path)
        x = rng.normal(size=4)
        np.testing.assert_array_equal(other.q_values(x), agent.q_values(x))
        np.testing.assert_array_equal(other.adam.m.w1, agent.adam.m.w1)
        assert other.adam.step == agent.adam.step

    def test_deep_sarl_roundtrip(self, tmp_path):
        agent = make_sarl(seed=32, batch_size=4)
        rng = np.random.default_rng(33)
        for _ in range(8):
            u = tuple(rng.uniform(0, 4, size=agent.n_agents))
            agent.remember(SarlExperience(None, rng.normal(size=4),
                                          int(rng.integers(5)), u, None,
                                          rng.normal(size=4),
                                          int(rng.integers(5))))
        agent.train_step()
        path = tmp_path / "sarl.npz"
        agent.save(path)
        other = make_sarl(seed=77, batch_size=4)
        other.load(path)
        x = rng.normal(size=4)
        np.testing.assert_array_equal(other.q_values(x), agent.q_values(x))
        for k in range(agent.n_agents):
            np.testing.assert_array_equal(other.targets[k].b2,
                                          agent.targets[k].b2)
