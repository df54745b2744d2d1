import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moody.mood import (
    DEFEAT, VICTORY, GwrNetwork, GwrParams, PAPoint, confidence, confidences, gwr_activity,
    gwr_bmu, gwr_habituate, gwr_train, mood_reading, pa_from_action, pa_from_event,
    state_confidence, turn_reward,
)
from oracles import confidence_oracle


def brute_bmu(net):
    """Linear scan over neurons in id order; strict comparison keeps the lowest id on ties."""
    def scan(x):
        best = second = None
        for i in sorted(net.neurons):
            w = net.neurons[i].weight
            d = (w[0] - x[0]) ** 2 + (w[1] - x[1]) ** 2
            if best is None or d < best[1]:
                second, best = best, (i, d)
            elif second is None or d < second[1]:
                second = (i, d)
        return best[0], second[0], best[1]
    return scan


class TestConfidence:
    def test_turn_reward(self):
        assert turn_reward(0) == 1.0
        assert turn_reward(26) == 0.74
        assert turn_reward(99) == 0.01
        assert turn_reward(100) == 0.01
        assert turn_reward(500) == 0.01
        with pytest.raises(ValueError):
            turn_reward(-1)

    @pytest.mark.parametrize("T", range(0, 101))
    def test_anchors(self, T):
        R = turn_reward(T)
        assert confidence(R, R) == 0.0
        assert confidence(100 * R, R) == 1.0
        # 10 * R is itself rounded, so the log can land one ulp off 0.5
        assert abs(confidence(10 * R, R) - 0.5) <= 1e-15

    def test_anchor_exact_at_26(self):
        assert confidence(10 * 0.74, turn_reward(26)) == 0.5

    def test_clamping(self):
        assert confidence(0.0, 0.5) == 0.0
        assert confidence(-3.0, 0.5) == 0.0
        assert confidence(0.1, 0.5) == 0.0
        assert confidence(51.0, 0.5) == 1.0
        with pytest.raises(ValueError):
            confidence(0.5, 0.0)

    @settings(max_examples=300)
    @given(st.floats(-10, 1000), st.floats(-10, 1000), st.integers(0, 120))
    def test_monotone_and_matches_oracle(self, q1, q2, T):
        R = turn_reward(T)
        lo, hi = sorted((q1, q2))
        assert confidence(lo, R) <= confidence(hi, R)
        assert confidence(q1, R) == pytest.approx(confidence_oracle(q1, R), abs=1e-15)
        np.testing.assert_array_equal(confidences(np.array([q1, q2]), R),
                                      [confidence(q1, R), confidence(q2, R)])

    def test_state_confidence(self):
        R = turn_reward(10)
        c03 = R * 10 ** 0.6                         # C = 0.3
        mask = np.array([True, True, False, False])
        assert state_confidence(np.full(4, R), mask, 10) == 0.0
        assert state_confidence(np.array([c03, c03, 50.0, 50.0]), mask, 10) == pytest.approx(0.6)
        assert state_confidence(np.full(4, 10 * R), np.ones(4, bool)[:3].tolist() + [False], 10) == 1.0
        with pytest.raises(ValueError):
            state_confidence(np.zeros(4), np.zeros(4, bool), 0)


class TestPA:
    def test_examples(self):
        assert pa_from_action(0.5) == PAPoint(0.25, 0.5)
        p = pa_from_action(0.55)
        assert p.pleasure == pytest.approx(0.275) and p.arousal == pytest.approx(0.7)
        assert pa_from_action(1.0) == PAPoint(0.5, 1.0)
        assert pa_from_action(0.0) == PAPoint(0.0, 0.0)
        assert pa_from_event("victory") == VICTORY == PAPoint(1.0, 1.0)
        assert pa_from_event("defeat") == DEFEAT == PAPoint(0.0, 0.0)

    def test_errors(self):
        with pytest.raises(ValueError):
            pa_from_event("action")
        with pytest.raises(ValueError):
            pa_from_event("draw")
        with pytest.raises(ValueError):
            pa_from_action(1.5)

    @given(st.floats(0, 1))
    def test_unit_square(self, c):
        p, a = pa_from_action(c)
        assert 0 <= p <= 0.5 and 0 <= a <= 1


class TestGwrPrimitives:
    def test_activity(self):
        assert gwr_activity(0.0) == 1.0
        assert gwr_activity(2.0) == pytest.approx(0.1353352832366127, abs=1e-15)
        assert gwr_activity(0.5) > gwr_activity(0.6)
        with pytest.raises(ValueError):
            gwr_activity(-1.0)

    def test_habituation(self):
        assert gwr_habituate(1.0, 0.3, 1.05) == pytest.approx(0.7)
        for tau in (0.3, 0.1):
            h_star = 1 - 1 / 1.05
            assert abs(gwr_habituate(h_star, tau, 1.05) - h_star) < 1e-9
            h, prev = 1.0, 1.0
            for _ in range(500):
                h = gwr_habituate(h, tau, 1.05)
                assert h <= prev
                prev = h
            assert abs(h - h_star) < 1e-9

    @settings(max_examples=200)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0.5, 3))
    def test_habituation_bounds(self, h, tau, kappa):
        assert 0.0 <= gwr_habituate(h, tau, kappa) <= 1.0


class TestGwrNetwork:
    def test_seeding(self):
        net = GwrNetwork()
        assert mood_reading(net) == PAPoint(0.5, 0.5)
        net.train((0.1, 0.2))
        net.train((0.3, 0.6))
        np.testing.assert_array_equal(net.weights(), [[0.1, 0.2], [0.3, 0.6]])
        assert tuple(mood_reading(net)) == pytest.approx((0.2, 0.4))

    def test_reading_is_mean(self):
        net = GwrNetwork(weights=((0.2, 0.4), (0.6, 0.8)), seeded=2)
        assert tuple(mood_reading(net)) == pytest.approx((0.4, 0.6))
        same = GwrNetwork(weights=((0.3, 0.3), (0.3, 0.3)), seeded=2)
        assert mood_reading(same) == PAPoint(0.3, 0.3)

    def test_bmu_ties_and_exact(self):
        net = GwrNetwork(weights=((0.5, 0.5), (0.5, 0.5), (0.1, 0.1)), seeded=2)
        assert gwr_bmu(net, (0.5, 0.5)) == (0, 1, 0.0)
        assert gwr_bmu(net, (0.1, 0.1))[::2] == (2, 0.0)

    def test_insertion_step(self):
        net = GwrNetwork(weights=((0.0, 0.0), (0.0, 0.0)), seeded=2)
        for n in net.neurons.values():
            n.habituation = 0.05
        gwr_train(net, (1.0, 1.0))
        assert len(net) == 3
        np.testing.assert_array_equal(net.neurons[2].weight, [0.5, 0.5])
        # created at h=1, then habituated once as a neighbour of the BMU
        assert net.neurons[2].habituation == pytest.approx(1.0 - net.params.tau_n)
        assert (0, 1) not in net.edges and {(0, 2), (1, 2)} <= set(net.edges)

    def test_no_insertion_at_bmu(self):
        net = GwrNetwork(weights=((0.2, 0.2), (0.8, 0.8)), seeded=2)
        for n in net.neurons.values():
            n.habituation = 0.05
        gwr_train(net, (0.2, 0.2))
        assert len(net) == 2
        np.testing.assert_array_equal(net.neurons[0].weight, [0.2, 0.2])

    def test_bmu_matches_brute_force(self):
        rng = np.random.default_rng(11)
        net = GwrNetwork()
        sizes = set()
        for _ in range(10_000):
            x = rng.random(2)
            b, s, d = net.bmu(x)
            ob, os_, od = brute_bmu(net)(x)
            assert (b, s) == (ob, os_) and d == pytest.approx(od, abs=1e-15)
            net.train(x)
            sizes.add(len(net))
            for n in net.neurons.values():
                assert 0.0 <= n.habituation <= 1.0
            assert all(a in net.neurons and b in net.neurons for a, b in net.edges)
        assert max(sizes) > 2

    def test_constant_stream(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.random(2)
            net = GwrNetwork()
            for _ in range(500):
                net.train(x)
            assert np.abs(net.weights() - x).max() < 1e-3

    def test_pruning_keeps_two(self):
        p = GwrParams(max_age=3)
        net = GwrNetwork(p)
        for x in [(0.0, 0.0), (1.0, 1.0)] + [(0.0, 0.0)] * 50:
            net.train(x)
        assert len(net) >= 2
        assert all(age <= 3 for age in net.edges.values())

    def test_growth_on_unit_square(self):
        rng = np.random.default_rng(5)
        net = GwrNetwork()
        for _ in range(2000):
            net.train(rng.random(2))
        assert 5 <= len(net) <= 30

    def test_rejects_outside_square(self):
        with pytest.raises(ValueError):
            GwrNetwork().train((1.2, 0.0))
        with pytest.raises(ValueError):
            GwrNetwork(weights=((0.0, 0.0),))

    def test_mood_continuity(self):
        rng = np.random.default_rng(3)
        net = GwrNetwork()
        prev = net.reading().as_array()
        steps = []
        for i in range(10_000):
            c = rng.random()
            x = pa_from_action(c) if i % 40 else (VICTORY if rng.random() < 0.3 else DEFEAT)
            cur = net.train(x).reading().as_array()
            steps.append(np.linalg.norm(cur - prev))
            prev = cur
        assert max(steps[2:]) < 0.5

    def test_victory_raises_mood(self):
        rng = np.random.default_rng(4)
        net = GwrNetwork()
        for _ in range(60):
            net.train(pa_from_action(rng.random()))
        before = net.reading()
        after = net.train(VICTORY).reading()
        assert after.pleasure > before.pleasure and after.arousal > before.arousal

    def test_snapshot_round_trip(self):
        rng = np.random.default_rng(8)
        net = GwrNetwork()
        for _ in range(300):
            net.train(rng.random(2))
        back = GwrNetwork.from_dict(net.to_dict())
        assert back.reading() == net.reading()
        x = rng.random(2)
        assert back.train(x).reading() == net.train(x).reading()

    def test_snapshot_rejects_other_schema(self):
        d = GwrNetwork().to_dict()
        d["schema"] = "something-else"
        with pytest.raises(ValueError):
            GwrNetwork.from_dict(d)
        d = GwrNetwork().to_dict()
        d["version"] = 99
        with pytest.raises(ValueError):
            GwrNetwork.from_dict(d)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=300))
def test_invariants_under_any_stream(xs):
    net = GwrNetwork()
    for x in xs:
        net.train(x)
        assert len(net) >= 2
        assert all(0.0 <= n.habituation <= 1.0 for n in net.neurons.values())
        assert all(age >= 0 for age in net.edges.values())
        r = net.reading()
        assert 0 <= r.pleasure <= 1 and 0 <= r.arousal <= 1
    assert not math.isnan(net.reading().pleasure)
