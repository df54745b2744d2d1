"""
Q-value producing agents for Chef's Hat.

``DQLAgent`` learns action values with a replay buffer and a double-Q target.
``PPOAgent`` learns a masked softmax policy with the clipped surrogate; its
"Q-values" are the action probabilities of that policy, recomputed from the
state alone (the legal mask is a function of the encoded hand and board).
``RandomAgent`` picks uniformly among legal actions and reports flat zeros.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from moody import game
from moody.game import N_ACTIONS, N_PLAYERS, STATE_SIZE
from moody.nn import Network, SGDMomentum

log = logging.getLogger(__name__)


@dataclass
class LearnerConfig:
    alpha: float = 1e-3
    gamma: float = 0.99
    hidden: tuple = (256, 256)
    momentum: float = 0.9
    batch_size: int = 64
    # DQL
    replay_capacity: int = 2000
    target_sync: int = 100
    double_q: bool = True
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.5
    # PPO
    clip: float = 0.2
    epochs: int = 4
    rollout_games: int = 4
    value_coef: float = 0.5
    normalize_advantages: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        self.hidden = tuple(int(h) for h in self.hidden)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    next_mask: np.ndarray
    terminal: bool


# --------------------------------------------------------------------------
# Action selection
# --------------------------------------------------------------------------

def masked_greedy(q: np.ndarray, mask: np.ndarray, explore: Optional[float] = None,
                  rng: Optional[np.random.Generator] = None) -> int:
    """Argmax of ``q`` over allowed entries, lowest index on ties.

    With ``explore`` set, a uniformly random allowed action is returned with
    that probability instead.
    """
    mask = np.asarray(mask, dtype=bool)
    allowed = np.flatnonzero(mask)
    if allowed.size == 0:
        raise ValueError("action mask allows nothing")
    if explore:
        rng = rng if rng is not None else np.random.default_rng()
        if rng.random() < explore:
            return int(allowed[rng.integers(allowed.size)])
    q = np.asarray(q, dtype=np.float64)
    return int(allowed[np.argmax(q[allowed])])


def masked_softmax(logits: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Row-wise softmax restricted to ``masks``; disallowed entries are exactly 0."""
    logits = np.atleast_2d(logits)
    masks = np.atleast_2d(masks).astype(bool)
    z = np.where(masks, logits, -np.inf)
    z = z - z.max(axis=1, keepdims=True)
    e = np.where(masks, np.exp(z), 0.0)
    return e / e.sum(axis=1, keepdims=True)


def _check_state(state) -> np.ndarray:
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (STATE_SIZE,):
        raise ValueError(f"state must have {STATE_SIZE} entries, got shape {state.shape}")
    return state


# --------------------------------------------------------------------------
# Agents
# --------------------------------------------------------------------------

class RandomAgent:
    kind = "random"
    has_policy = False

    def __init__(self, name: str = "random", seed: int = 0):
        self.name = name
        self.training = False

    def q_values(self, state) -> np.ndarray:
        _check_state(state)
        return np.zeros(N_ACTIONS)

    def act(self, state, mask, rng: np.random.Generator) -> int:
        return masked_greedy(np.zeros(N_ACTIONS), mask, explore=1.0, rng=rng)

    def set_progress(self, fraction: float):
        pass

    def observe(self, transition: Transition):
        pass

    def end_game(self):
        pass


class DQLAgent:
    kind = "dql"
    has_policy = True

    def __init__(self, config: Optional[LearnerConfig] = None, seed: int = 0, name: str = "dql"):
        self.config = config or LearnerConfig()
        self.name = name
        self.seed = seed
        self.net = Network(STATE_SIZE, self.config.hidden, N_ACTIONS, seed=seed)
        self.target = self.net.copy()
        self.opt = SGDMomentum(self.net.params, self.config.alpha, self.config.momentum)
        self.replay: deque = deque(maxlen=self.config.replay_capacity)
        self.rng = np.random.default_rng(seed + 1)
        self.updates = 0
        self.epsilon = self.config.eps_start
        self.training = False

    def q_values(self, state) -> np.ndarray:
        out, _, _ = self.net.forward(_check_state(state)[None])
        return out[0]

    def q_batch(self, states) -> np.ndarray:
        return self.net.forward(states)[0]

    def set_progress(self, fraction: float):
        """Linear epsilon decay over the first ``eps_fraction`` of training."""
        c = self.config
        t = min(1.0, fraction / c.eps_fraction) if c.eps_fraction > 0 else 1.0
        self.epsilon = c.eps_start + t * (c.eps_end - c.eps_start)

    def act(self, state, mask, rng: np.random.Generator) -> int:
        q = self.q_values(state)
        return masked_greedy(q, mask, self.epsilon if self.training else None, rng)

    def observe(self, transition: Transition):
        if not self.training:
            return
        self.replay.append(transition)
        if len(self.replay) >= self.config.batch_size:
            idx = self.rng.integers(len(self.replay), size=self.config.batch_size)
            dql_update(self, [self.replay[i] for i in idx])

    def end_game(self):
        pass


class PPOAgent:
    kind = "ppo"
    has_policy = True

    def __init__(self, config: Optional[LearnerConfig] = None, seed: int = 0, name: str = "ppo"):
        self.config = config or LearnerConfig()
        self.name = name
        self.seed = seed
        self.net = Network(STATE_SIZE, self.config.hidden, N_ACTIONS, value_head=True, seed=seed)
        self.opt = SGDMomentum(self.net.params, self.config.alpha, self.config.momentum)
        self.rng = np.random.default_rng(seed + 1)
        self.rollout = Rollout()
        self._games_in_rollout = 0
        self.training = False

    def policy(self, states, masks):
        logits, values, _ = self.net.forward(np.atleast_2d(states))
        return masked_softmax(logits, masks), values

    def q_values(self, state) -> np.ndarray:
        state = _check_state(state)
        probs, _ = self.policy(state, game.mask_from_state(state))
        return probs[0]

    def q_batch(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        masks = np.array([game.mask_from_state(s) for s in states])
        return self.policy(states, masks)[0]

    def set_progress(self, fraction: float):
        pass

    def act(self, state, mask, rng: np.random.Generator) -> int:
        state = _check_state(state)
        probs, values = self.policy(state, mask)
        p = probs[0]
        if not self.training:
            return masked_greedy(p, mask)
        a = int(rng.choice(N_ACTIONS, p=p))
        self.rollout.add(state, mask, a, float(np.log(p[a])), float(values[0]))
        return a

    def observe(self, transition: Transition):
        if self.training:
            self.rollout.rewards[-1] = transition.reward

    def end_game(self):
        if not self.training or not self.rollout.states:
            return
        self.rollout.close_game()
        self._games_in_rollout += 1
        if self._games_in_rollout >= self.config.rollout_games:
            ppo_update(self, self.rollout)
            self.rollout = Rollout()
            self._games_in_rollout = 0


AGENT_TYPES = {"dql": DQLAgent, "ppo": PPOAgent, "random": RandomAgent}


def q_forward(agent, state) -> np.ndarray:
    """The 200 Q-values an agent assigns to ``state``."""
    return agent.q_values(state)


# --------------------------------------------------------------------------
# DQL
# --------------------------------------------------------------------------

def dql_targets(online: Network, target: Network, batch: Sequence[Transition],
                gamma: float, double_q: bool = True) -> np.ndarray:
    """TD targets ``r + gamma * Q_target(s', a*)`` with ``a*`` restricted to the next mask."""
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    live = np.array([not t.terminal for t in batch])
    y = rewards.copy()
    if live.any():
        nxt = np.array([t.next_state for t in batch])[live]
        masks = np.array([t.next_mask for t in batch], dtype=bool)[live]
        q_tgt = target.forward(nxt)[0]
        chooser = online.forward(nxt)[0] if double_q else q_tgt
        best = np.where(masks, chooser, -np.inf).argmax(axis=1)
        y[live] += gamma * q_tgt[np.arange(len(best)), best]
    return y


def dql_loss_and_grads(net: Network, batch: Sequence[Transition], y: np.ndarray):
    states = np.array([t.state for t in batch])
    actions = np.array([t.action for t in batch])
    out, _, acts = net.forward(states)
    rows = np.arange(len(batch))
    err = out[rows, actions] - y
    loss = 0.5 * float(np.mean(err ** 2))
    d_out = np.zeros_like(out)
    d_out[rows, actions] = err / len(batch)
    return loss, net.backward(acts, d_out)


def dql_update(agent: DQLAgent, batch: Sequence[Transition], config: Optional[LearnerConfig] = None) -> float:
    """One gradient step on the squared TD error of ``batch``; returns the loss."""
    if not batch:
        raise ValueError("empty batch")
    c = config or agent.config
    y = dql_targets(agent.net, agent.target, batch, c.gamma, c.double_q)
    loss, grads = dql_loss_and_grads(agent.net, batch, y)
    agent.opt.step(grads)
    agent.updates += 1
    if agent.updates % c.target_sync == 0:
        agent.target = agent.net.copy()
    return loss


# --------------------------------------------------------------------------
# PPO
# --------------------------------------------------------------------------

@dataclass
class Rollout:
    states: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    logprobs: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    game_ends: list = field(default_factory=list)   # exclusive end index of each game

    def add(self, state, mask, action, logprob, value, reward=0.0):
        self.states.append(np.asarray(state, dtype=np.float64))
        self.masks.append(np.asarray(mask, dtype=bool))
        self.actions.append(int(action))
        self.logprobs.append(float(logprob))
        self.values.append(float(value))
        self.rewards.append(float(reward))

    def close_game(self):
        if not self.game_ends or self.game_ends[-1] != len(self.states):
            self.game_ends.append(len(self.states))

    def returns(self, gamma: float) -> np.ndarray:
        out = np.zeros(len(self.rewards))
        start = 0
        for end in self.game_ends:
            g = 0.0
            for i in range(end - 1, start - 1, -1):
                g = self.rewards[i] + gamma * g
                out[i] = g
            start = end
        return out


def ppo_loss_and_grads(net: Network, states, masks, actions, old_logprobs, advantages,
                       returns, clip: float, value_coef: float):
    """Clipped-surrogate actor loss plus squared value error, with gradients."""
    logits, values, acts = net.forward(states)
    probs = masked_softmax(logits, masks)
    rows = np.arange(len(actions))
    logp = np.log(probs[rows, actions])
    ratio = np.exp(logp - old_logprobs)
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip)
    surr = np.minimum(ratio * advantages, clipped * advantages)
    n = len(actions)
    actor_loss = -float(surr.mean())
    value_loss = 0.5 * float(np.mean((values - returns) ** 2))
    # gradient flows through the unclipped branch only where it is the minimum
    active = ratio * advantages <= clipped * advantages
    d_logp = np.where(active, -advantages * ratio, 0.0) / n
    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    d_logits = d_logp[:, None] * (onehot - probs)
    d_values = value_coef * (values - returns) / n
    grads = net.backward(acts, d_logits, d_values)
    return actor_loss + value_coef * value_loss, actor_loss, grads


def ppo_update(agent: PPOAgent, rollout: Rollout, config: Optional[LearnerConfig] = None) -> float:
    """Run ``epochs`` passes of clipped-surrogate minibatch updates; returns the mean loss."""
    c = config or agent.config
    if not rollout.states:
        raise ValueError("empty rollout")
    rollout.close_game()
    states = np.array(rollout.states)
    masks = np.array(rollout.masks)
    actions = np.array(rollout.actions)
    old = np.array(rollout.logprobs)
    returns = rollout.returns(c.gamma)
    advantages = returns - np.array(rollout.values)
    if c.normalize_advantages:
        scale = advantages.std()
        if scale > 0:
            advantages = advantages / scale
    n = len(actions)
    losses = []
    for _ in range(c.epochs):
        order = agent.rng.permutation(n)
        for s in range(0, n, c.batch_size):
            idx = order[s:s + c.batch_size]
            loss, _, grads = ppo_loss_and_grads(agent.net, states[idx], masks[idx], actions[idx],
                                                old[idx], advantages[idx], returns[idx],
                                                c.clip, c.value_coef)
            agent.opt.step(grads)
            losses.append(loss)
    return float(np.mean(losses))


# --------------------------------------------------------------------------
# League training
# --------------------------------------------------------------------------

def play_training_game(agents, table, rng: np.random.Generator):
    """Play one game to completion, feeding each learner its own transitions."""
    pending: dict[int, tuple] = {}
    while True:
        p = table.current_player
        state = game.encode_state(table, p)
        mask = game.legal_actions(table, p)
        if p in pending:
            s, a, r = pending.pop(p)
            agents[p].observe(Transition(s, a, r, state, mask, False))
        a = agents[p].act(state, mask, rng)
        step = game.apply_action(table, p, a)
        pending[p] = (state, a, step.reward)
        if game.Event.GAME_OVER in step.events:
            break
    blank = np.zeros(N_ACTIONS, dtype=bool)
    for p, (s, a, r) in sorted(pending.items()):
        agents[p].observe(Transition(s, a, r, np.zeros(STATE_SIZE), blank, True))
    for ag in agents:
        ag.end_game()
    return game.is_over(table)[1]


def train_league(agents, games: int, seed: int = 0, window: int = 100, progress=None):
    """Train the learners among ``agents`` over a series of ``games``.

    Roles and card exchange carry over between games. Returns the per-window
    win-rate curve as a list of ``{"games": k, "win_rates": [...]}`` rows.
    """
    if len(agents) != N_PLAYERS:
        raise ValueError(f"need {N_PLAYERS} agents, got {len(agents)}")
    if games <= 0:
        raise ValueError("games must be positive")
    rng = np.random.default_rng(seed)
    game_seeds = np.random.SeedSequence(seed).generate_state(games, dtype=np.uint32)
    for ag in agents:
        ag.training = True
    standings = None
    wins = np.zeros(N_PLAYERS, dtype=np.int64)
    curve = []
    try:
        for g in range(games):
            for ag in agents:
                ag.set_progress(g / games)
            table = game.new_game(standings, int(game_seeds[g]))
            standings = play_training_game(agents, table, rng)
            wins[standings[0]] += 1
            if (g + 1) % window == 0 or g + 1 == games:
                n = (g % window) + 1
                curve.append({"games": g + 1, "win_rates": (wins / n).tolist()})
                log.info("games %d win rates %s", g + 1, np.round(wins / n, 3).tolist())
                if progress:
                    progress(curve[-1])
                wins[:] = 0
    finally:
        for ag in agents:
            ag.training = False
    return curve
