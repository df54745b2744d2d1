import json

import numpy as np
import pytest

from moody.agents import DQLAgent, LearnerConfig, PPOAgent, RandomAgent
from moody.experiments import (experiment_mood_vs_confidence, experiment_self_vs_estimated,
                               same_cross, target_series)
from moody.harness import (
    CorrelationReport, UndefinedCorrelation, aligned_series, correlation_report, pearson,
    read_replay, read_trace, run_match, run_series, write_replay, write_trace,
)
from oracles import pearson_oracle, sharp

SMALL = LearnerConfig(hidden=(16,))


def roster():
    return [sharp(DQLAgent(SMALL, seed=1, name="DQL"), 300.0),
            sharp(PPOAgent(SMALL, seed=2, name="PPO"), 30.0),
            RandomAgent("random1"), RandomAgent("random2")]


@pytest.fixture(scope="module")
def series():
    return run_series(roster(), 3, seed=11, n_samples=20)


class TestPearson:
    def test_identities(self):
        a = np.array([0.3, 1.2, -0.4, 2.0])
        assert pearson(a, a) == 1.0
        assert pearson(a - a.mean(), -(a - a.mean())) == -1.0

    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(2, 300))
            a = rng.normal(size=n)
            b = 0.5 * a + rng.normal(size=n) * rng.random()
            assert abs(pearson(a, b) - pearson_oracle(a.tolist(), b.tolist())) <= 1e-12

    def test_errors(self):
        with pytest.raises(UndefinedCorrelation):
            pearson([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            pearson([1.0], [2.0])


class TestSeries:
    def test_rows_ordered_and_complete(self, series):
        keys = [(r.game, r.turn) for r in series.rows]
        assert keys == sorted(keys)
        actions = [r for r in series.rows if r.event == "action"]
        assert len(actions) == len(series.replay)
        assert len(series.standings) == 3

    def test_terminal_pa(self, series):
        for g, standings in enumerate(series.standings):
            final = [r for r in series.rows if r.game == g and r.event != "action"]
            assert len(final) == 4
            for r in final:
                assert r.pa == ((1.0, 1.0) if r.player == standings[0] else (0.0, 0.0))
            for e in series.estimates:
                if e.game == g and e.event == "victory":
                    assert e.target == standings[0] and e.e_pa == (1.0, 1.0)
                if e.game == g and e.event == "defeat":
                    assert e.e_pa == (0.0, 0.0)

    def test_role_carryover(self, series):
        for g in range(1, series.games):
            first = next(r for r in series.rows if r.game == g)
            assert first.player == series.standings[g - 1][0]

    def test_random_agents_do_not_observe(self, series):
        assert {e.observer for e in series.estimates} == {0, 1}

    def test_alignment(self, series):
        for t in range(4):
            n_actions = sum(1 for r in series.rows if r.player == t and r.event == "action")
            for o in (0, 1):
                if o == t:
                    continue
                keys, s, e = aligned_series(series, t, o, "confidence")
                assert len(keys) == len(s) == len(e) == n_actions
                keys, s, e = aligned_series(series, t, o, "mood")
                assert len(keys) == n_actions + series.games

    def test_values_in_range(self, series):
        for r in series.rows:
            assert 0 <= r.pleasure <= 1 and 0 <= r.arousal <= 1
            if r.confidence is not None:
                assert 0 <= r.confidence <= 1
        for e in series.estimates:
            assert 0 <= e.e_pleasure <= 1 and 0 <= e.e_arousal <= 1

    def test_reset_per_game(self):
        lg = run_series(roster(), 2, seed=4, n_samples=5, reset_per_game=True)
        first = next(r for r in lg.rows if r.game == 1 and r.player == lg.rows[0].player)
        assert lg.games == 2 and first.pleasure >= 0

    def test_errors(self):
        with pytest.raises(ValueError):
            run_series(roster()[:3], 1)
        with pytest.raises(ValueError):
            run_series(roster(), 0)


class TestFiles:
    def test_deterministic_trace(self, tmp_path):
        a = write_trace(run_match(roster(), seed=5, n_samples=20), tmp_path / "a.csv")
        b = write_trace(run_match(roster(), seed=5, n_samples=20), tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()
        c = write_trace(run_match(roster(), seed=6, n_samples=20), tmp_path / "c.csv")
        assert a.read_bytes() != c.read_bytes()

    def test_trace_round_trip(self, series, tmp_path):
        p = write_trace(series, tmp_path / "trace.csv")
        back = read_trace(p, series.agents)
        q = write_trace(back, tmp_path / "again.csv")
        assert p.read_bytes() == q.read_bytes()
        assert [s[0] for s in back.standings] == [s[0] for s in series.standings]
        r1 = correlation_report(series)
        r2 = correlation_report(back)
        assert r1.to_dict() == r2.to_dict()

    def test_trace_header(self, series, tmp_path):
        p = write_trace(series, tmp_path / "trace.csv")
        assert p.read_text().splitlines()[0] == (
            "game,turn,player,action,q_selected,confidence,pleasure,arousal,"
            "target,e_confidence,e_pleasure,e_arousal")

    def test_replay_round_trip(self, series, tmp_path):
        p = write_replay(series, tmp_path / "replay.jsonl")
        recs = read_replay(p)
        assert recs == json.loads(json.dumps(series.replay))
        p.write_text('{"game_id": 0}\n')
        with pytest.raises(ValueError):
            read_replay(p)


class TestCorrelation:
    def test_report(self, series, tmp_path):
        rep = correlation_report(series)
        for m in (rep.econfidence, rep.emood):
            for t in range(4):
                assert m[t][t] == 1.0
                for v in m[t]:
                    assert v is None or -1.0 <= v <= 1.0
            assert m[0][2] is None and m[1][3] is None     # random seats never observe
        rep.write(tmp_path)
        assert CorrelationReport.read(tmp_path / "correlations.json").to_dict() == rep.to_dict()
        assert (tmp_path / "correlations.csv").read_text().startswith("matrix,target,DQL,PPO")

    def test_variants(self, series):
        per_game = correlation_report(series, per_game=True)
        no_terminal = correlation_report(series, include_terminal=False)
        assert per_game.emood[0][0] == no_terminal.emood[0][0] == 1.0

    def test_too_short(self):
        lg = run_match(roster(), seed=1, n_samples=2)
        lg.rows = [r for r in lg.rows if r.player != 2 or r.event != "action"][:]
        lg.estimates = [e for e in lg.estimates if e.target != 2]
        with pytest.raises(ValueError):
            correlation_report(lg)

    def test_same_cross(self):
        m = [[1.0, 0.8, 0.2, 0.1], [0.9, 1.0, 0.3, None], [0.0, 0.1, 1.0, 0.7], [0.2, 0.2, 0.5, 1.0]]
        same, cross = same_cross(m, ["a", "a", "b", "b"])
        assert same == pytest.approx((0.8 + 0.9 + 0.7 + 0.5) / 4)
        assert cross == pytest.approx((0.2 + 0.1 + 0.3 + 0.0 + 0.1 + 0.2 + 0.2) / 7)


class TestExperiments:
    def test_mood_vs_confidence(self, tmp_path):
        out = experiment_mood_vs_confidence(roster(), tmp_path, seed=2, series_games=2, n_samples=5)
        assert out["single"]["games"] == 1 and len(out["series"]["winners"]) == 2
        for label in ("single", "series"):
            d = tmp_path / label
            for name in ("DQL", "PPO"):
                assert (d / f"{name}.svg").read_text().startswith("<?xml")
                header = (d / f"{name}.csv").read_text().splitlines()[0].split(",")
                assert {"confidence", "pleasure", "arousal"} <= set(header)
                assert any(h.startswith("e_mood[") for h in header)
            assert (d / "random_emood.svg").exists()

    def test_random_targets_have_two_views(self):
        lg = run_series(roster(), 1, seed=3, n_samples=5)
        assert set(target_series(lg, 2)["estimates"]) == {0, 1}

    def test_self_vs_estimated_deterministic(self, tmp_path):
        def four():
            return [sharp(DQLAgent(SMALL, seed=s, name=f"DQL{i}"), 300.0)
                    for i, s in ((1, 1), (2, 2))] + \
                   [sharp(PPOAgent(SMALL, seed=s, name=f"PPO{i}"), 30.0) for i, s in ((1, 3), (2, 4))]
        rep, _ = experiment_self_vs_estimated(four(), tmp_path / "a", games=2, seed=9, n_samples=5)
        experiment_self_vs_estimated(four(), tmp_path / "b", games=2, seed=9, n_samples=5)
        for f in ("trace.csv", "correlations.json", "correlations.csv", "moods.svg"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        assert all(rep.econfidence[i][i] == 1.0 for i in range(4))
        with pytest.raises(ValueError):
            experiment_self_vs_estimated(roster(), tmp_path / "c", games=1)
