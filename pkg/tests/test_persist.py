import base64
import json

import numpy as np
import pytest

from moody.agents import DQLAgent, LearnerConfig, PPOAgent, RandomAgent, q_forward
from moody.mood import GwrNetwork
from moody.persist import CheckpointError, load_agent, load_gwr, save_agent, save_gwr
from oracles import random_states


@pytest.mark.parametrize("kind", [DQLAgent, PPOAgent])
def test_round_trip_is_bit_exact(kind, tmp_path):
    agent = kind(LearnerConfig(hidden=(32, 16)), seed=3, name="me")
    agent.net.params[0] += np.random.default_rng(0).normal(size=agent.net.params[0].shape)
    back = load_agent(save_agent(agent, tmp_path / "a.json"))
    assert type(back) is kind and back.name == "me" and back.config == agent.config
    np.testing.assert_array_equal(back.net.get_flat(), agent.net.get_flat())
    for s in random_states(np.random.default_rng(1), 50):
        np.testing.assert_array_equal(q_forward(back, s), q_forward(agent, s))
    assert load_agent(tmp_path / "a.json", name="other").name == "other"


def test_random_agent_has_no_checkpoint(tmp_path):
    with pytest.raises(ValueError):
        save_agent(RandomAgent(), tmp_path / "r.json")


class TestCorrupt:
    @pytest.fixture
    def doc(self, tmp_path):
        p = save_agent(DQLAgent(LearnerConfig(hidden=(8,))), tmp_path / "c.json")
        return p, json.loads(p.read_text())

    def test_missing(self, tmp_path):
        with pytest.raises(CheckpointError, match="no such"):
            load_agent(tmp_path / "nope.json")

    def test_truncated_file(self, doc):
        p, _ = doc
        p.write_text(p.read_text()[:200])
        with pytest.raises(CheckpointError, match="truncated or corrupt"):
            load_agent(p)

    def test_truncated_params(self, doc):
        p, d = doc
        raw = base64.b64decode(d["params"])[:-8]
        d["params"] = base64.b64encode(raw).decode()
        p.write_text(json.dumps(d))
        with pytest.raises(CheckpointError):
            load_agent(p)

    @pytest.mark.parametrize("field,value", [("schema", "other"), ("version", 2),
                                             ("params", "!!notbase64!!"), ("n_params", 3)])
    def test_bad_header(self, doc, field, value):
        p, d = doc
        d[field] = value
        p.write_text(json.dumps(d))
        with pytest.raises(CheckpointError):
            load_agent(p)

    def test_arch_mismatch(self, doc):
        p, d = doc
        d["config"]["hidden"] = [9]
        p.write_text(json.dumps(d))
        with pytest.raises(CheckpointError):
            load_agent(p)

    def test_not_a_mapping(self, doc):
        p, _ = doc
        p.write_text("[1, 2]")
        with pytest.raises(CheckpointError):
            load_agent(p)


def test_gwr_snapshot(tmp_path):
    rng = np.random.default_rng(2)
    net = GwrNetwork()
    for _ in range(200):
        net.train(rng.random(2))
    back = load_gwr(save_gwr(net, tmp_path / "g.json"))
    np.testing.assert_array_equal(back.weights(), net.weights())
    assert back.reading() == net.reading() and back.edges == net.edges
    (tmp_path / "bad.json").write_text('{"schema": "x"}')
    with pytest.raises(CheckpointError):
        load_gwr(tmp_path / "bad.json")
    (tmp_path / "cut.json").write_text(save_gwr(net, tmp_path / "h.json").read_text()[:50])
    with pytest.raises(CheckpointError):
        load_gwr(tmp_path / "cut.json")
