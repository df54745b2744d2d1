"""
Match and series runners with mood tracing, and the correlation analysis.

Every executed action yields one self row for the acting player and one
estimate row per observing opponent (an opponent with a policy of its own).
When a game ends each player gets a terminal row carrying the victory or
defeat event, mirrored by terminal estimate rows from every observer.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from moody import game
from moody.estimator import (N_SAMPLES, EstimatedMood, OpponentObservation, e_confidence,
                             sample_estates, update_e_mood)
from moody.game import HAND_SIZE, N_PLAYERS
from moody.mood import GwrNetwork, GwrParams, pa_from_action, pa_from_event, state_confidence

log = logging.getLogger(__name__)

EVENT_ACTIONS = {"victory": -1, "defeat": -2}
ACTION_EVENTS = {v: k for k, v in EVENT_ACTIONS.items()}

TRACE_COLUMNS = ["game", "turn", "player", "action", "q_selected", "confidence", "pleasure",
                 "arousal", "target", "e_confidence", "e_pleasure", "e_arousal"]


@dataclass
class SelfRow:
    game: int
    turn: int
    player: int
    action: int
    event: str                    # "action", "victory" or "defeat"
    q_selected: Optional[float]
    confidence: Optional[float]
    pa: tuple[float, float]       # PA point fed to the network
    pleasure: float               # mood reading after the update
    arousal: float


@dataclass
class EstimateRow:
    game: int
    turn: int
    observer: int
    target: int
    action: int
    event: str
    e_confidence: Optional[float]
    e_pa: tuple[float, float]
    e_pleasure: float
    e_arousal: float


@dataclass
class MatchLog:
    agents: list[str]
    rows: list[SelfRow] = field(default_factory=list)
    estimates: list[EstimateRow] = field(default_factory=list)
    standings: list[list[int]] = field(default_factory=list)
    replay: list[dict] = field(default_factory=list)

    @property
    def games(self) -> int:
        return len(self.standings)

    def self_rows(self, player: int, include_terminal: bool = True) -> list[SelfRow]:
        return [r for r in self.rows
                if r.player == player and (include_terminal or r.event == "action")]

    def estimate_rows(self, observer: int, target: int, include_terminal: bool = True):
        return [r for r in self.estimates if r.observer == observer and r.target == target
                and (include_terminal or r.event == "action")]


class Moody:
    """Per-seat mood state: one self network plus one network per observed opponent."""

    def __init__(self, agents, gwr_params: Optional[GwrParams] = None):
        self.agents = agents
        self.gwr_params = gwr_params
        self.reset()

    def reset(self):
        self.self_nets = [GwrNetwork(self.gwr_params) for _ in self.agents]
        self.emoods = [EstimatedMood(self.gwr_params) for _ in self.agents]

    def observers_of(self, target: int) -> list[int]:
        return [o for o in range(len(self.agents)) if o != target and self.agents[o].has_policy]


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def play_game(agents, moody: Moody, table: game.GameTable, game_id: int, log_: MatchLog,
              act_rng: np.random.Generator, est_rng: np.random.Generator,
              n_samples: int = N_SAMPLES, keep_replay: bool = True,
              turn_clock: str = "player") -> list[int]:
    while True:
        p = table.current_player
        agent = agents[p]
        state = game.encode_state(table, p)
        mask = game.legal_actions(table, p)
        q = agent.q_values(state)
        a = agent.act(state, mask, act_rng)
        turn = table.turn
        T = table.action_counts[p] if turn_clock == "player" else turn
        board = list(table.board)
        gone = HAND_SIZE - table.hand_size(p)

        conf = state_confidence(q, mask, T)
        pa = pa_from_action(conf)
        net = moody.self_nets[p].train(pa)
        mood = net.reading()
        log_.rows.append(SelfRow(game_id, turn, p, a, "action", float(q[a]), conf, tuple(pa),
                                 mood.pleasure, mood.arousal))

        step = game.apply_action(table, p, a)
        if keep_replay:
            log_.replay.append({"game_id": game_id, "turn": turn, "player": p, "action_index": a,
                                "reward": step.reward, "state": state.tolist()})

        obs = OpponentObservation(p, board, step.discarded, gone, a, T)
        for o in moody.observers_of(p):
            estates = sample_estates(obs, n_samples, rng=est_rng)
            ec = e_confidence(agents[o], obs, estates)
            r = update_e_mood(moody.emoods[o], p, "action", ec)
            log_.estimates.append(EstimateRow(game_id, turn, o, p, a, "action", ec,
                                              tuple(pa_from_action(ec)), r.pleasure, r.arousal))

        if game.Event.GAME_OVER in step.events:
            break

    standings = game.is_over(table)[1]
    turn = table.turn
    for p in range(N_PLAYERS):
        event = "victory" if p == standings[0] else "defeat"
        pa = pa_from_event(event)
        mood = moody.self_nets[p].train(pa).reading()
        log_.rows.append(SelfRow(game_id, turn, p, EVENT_ACTIONS[event], event, None, None, tuple(pa),
                                 mood.pleasure, mood.arousal))
    for p in range(N_PLAYERS):
        event = "victory" if p == standings[0] else "defeat"
        for o in moody.observers_of(p):
            r = update_e_mood(moody.emoods[o], p, event)
            log_.estimates.append(EstimateRow(game_id, turn, o, p, EVENT_ACTIONS[event], event, None,
                                              tuple(pa_from_event(event)), r.pleasure, r.arousal))
    log_.standings.append(standings)
    return standings


def run_series(agents, games: int, seed: int = 0, gwr_params: Optional[GwrParams] = None,
               reset_per_game: bool = False, n_samples: int = N_SAMPLES,
               keep_replay: bool = True, turn_clock: str = "player") -> MatchLog:
    """Play ``games`` consecutive games with roles, card exchange and mood networks carried over."""
    if len(agents) != N_PLAYERS:
        raise ValueError(f"need {N_PLAYERS} agents, got {len(agents)}")
    if games < 1:
        raise ValueError("games must be at least 1")
    ss = np.random.SeedSequence(seed)
    game_seeds = ss.generate_state(games, dtype=np.uint32)
    act_ss, est_ss = ss.spawn(2)
    act_rng, est_rng = np.random.default_rng(act_ss), np.random.default_rng(est_ss)
    moody = Moody(agents, gwr_params)
    log_ = MatchLog([a.name for a in agents])
    standings = None
    for g in range(games):
        if reset_per_game and g:
            moody.reset()
        table = game.new_game(standings, int(game_seeds[g]))
        standings = play_game(agents, moody, table, g, log_, act_rng, est_rng, n_samples, keep_replay,
                              turn_clock)
        log.debug("game %d standings %s", g, standings)
    return log_


def run_match(agents, seed: int = 0, **kw) -> MatchLog:
    return run_series(agents, 1, seed, **kw)


# --------------------------------------------------------------------------
# Trace files
# --------------------------------------------------------------------------

def write_trace(log_: MatchLog, path) -> Path:
    """Write ``trace.csv``: self rows (blank target) followed by that turn's estimate rows."""
    path = Path(path)
    by_key: dict = {}
    for e in log_.estimates:
        by_key.setdefault((e.game, e.turn, e.target), []).append(e)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in log_.rows:
            w.writerow([r.game, r.turn, r.player, r.action, _fmt(r.q_selected), _fmt(r.confidence),
                        _fmt(r.pleasure), _fmt(r.arousal), "", "", "", ""])
            for e in by_key.get((r.game, r.turn, r.player), []):
                w.writerow([e.game, e.turn, e.observer, e.action, "", "", "", "", e.target,
                            _fmt(e.e_confidence), _fmt(e.e_pleasure), _fmt(e.e_arousal)])
    return path


def read_trace(path, agents: Optional[Sequence[str]] = None) -> MatchLog:
    """Load a ``trace.csv`` back into a MatchLog.

    PA inputs are not part of the file and come back as NaN; standings hold
    only the winner of each game.
    """
    log_ = MatchLog(list(agents) if agents else [])
    winners: dict[int, int] = {}
    with Path(path).open(newline="") as f:
        rd = csv.DictReader(f)
        if rd.fieldnames != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns {rd.fieldnames}")
        for row in rd:
            g, t, p, a = int(row["game"]), int(row["turn"]), int(row["player"]), int(row["action"])
            event = ACTION_EVENTS.get(a, "action")
            opt = lambda k: float(row[k]) if row[k] != "" else None
            if row["target"] == "":
                log_.rows.append(SelfRow(g, t, p, a, event, opt("q_selected"), opt("confidence"),
                                         (math.nan, math.nan), float(row["pleasure"]),
                                         float(row["arousal"])))
                if event == "victory":
                    winners[g] = p
            else:
                log_.estimates.append(EstimateRow(g, t, p, int(row["target"]), a, event,
                                                  opt("e_confidence"), (math.nan, math.nan),
                                                  float(row["e_pleasure"]), float(row["e_arousal"])))
    log_.standings = [[winners[g]] for g in sorted(winners)]
    if not log_.agents:
        log_.agents = [f"player{p}" for p in range(N_PLAYERS)]
    return log_


def write_replay(log_: MatchLog, path) -> Path:
    path = Path(path)
    with path.open("w") as f:
        for rec in log_.replay:
            f.write(json.dumps(rec) + "\n")
    return path


def read_replay(path) -> list[dict]:
    out = []
    with Path(path).open() as f:
        for i, line in enumerate(f):
            rec = json.loads(line)
            if set(rec) != {"game_id", "turn", "player", "action_index", "reward", "state"}:
                raise ValueError(f"line {i + 1}: unexpected replay record keys {sorted(rec)}")
            if len(rec["state"]) != game.STATE_SIZE:
                raise ValueError(f"line {i + 1}: state has {len(rec['state'])} values")
            out.append(rec)
    return out


# --------------------------------------------------------------------------
# Correlation
# --------------------------------------------------------------------------

class UndefinedCorrelation(ValueError):
    """Pearson r is undefined for a constant series."""


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"series must be 1-d and equally long, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise ValueError("need at least two samples")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = float(np.dot(da, da)), float(np.dot(db, db))
    if sa == 0.0 or sb == 0.0:
        raise UndefinedCorrelation("constant series")
    if np.array_equal(a, b):
        return 1.0
    r = float(np.dot(da, db)) / math.sqrt(sa * sb)
    return max(-1.0, min(1.0, r))


def aligned_series(log_: MatchLog, target: int, observer: int, kind: str,
                   include_terminal: bool = True):
    """Self and estimated series of ``target`` sampled at the target's action times.

    ``kind`` is ``"confidence"`` or ``"mood"`` (mean of pleasure and arousal).
    Returns ``(keys, self_values, estimated_values)``; keys are (game, turn, event).
    """
    terminal = include_terminal and kind == "mood"
    selfs = {(r.game, r.turn, r.event): r for r in log_.self_rows(target, terminal)}
    ests = {(e.game, e.turn, e.event): e for e in log_.estimate_rows(observer, target, terminal)}
    if selfs.keys() != ests.keys():
        raise ValueError(f"traces of target {target} and observer {observer} are misaligned")
    keys = list(selfs)
    if kind == "confidence":
        s = [selfs[k].confidence for k in keys]
        e = [ests[k].e_confidence for k in keys]
    elif kind == "mood":
        s = [(selfs[k].pleasure + selfs[k].arousal) / 2 for k in keys]
        e = [(ests[k].e_pleasure + ests[k].e_arousal) / 2 for k in keys]
    else:
        raise ValueError(f"unknown series kind {kind!r}")
    return keys, np.array(s), np.array(e)


@dataclass
class CorrelationReport:
    agents: list[str]
    econfidence: list[list[Optional[float]]]
    emood: list[list[Optional[float]]]

    def to_dict(self) -> dict:
        return {"agents": self.agents, "econfidence": self.econfidence, "emood": self.emood}

    def write(self, out_dir) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        jpath = out_dir / "correlations.json"
        jpath.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        cpath = out_dir / "correlations.csv"
        with cpath.open("w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["matrix", "target"] + self.agents)
            for name, m in (("econfidence", self.econfidence), ("emood", self.emood)):
                for t, row in zip(self.agents, m):
                    w.writerow([name, t] + ["" if v is None else repr(v) for v in row])
        return jpath, cpath

    @classmethod
    def read(cls, path) -> "CorrelationReport":
        d = json.loads(Path(path).read_text())
        return cls(d["agents"], d["econfidence"], d["emood"])


def _pair_r(log_, target, observer, kind, include_terminal, per_game):
    keys, s, e = aligned_series(log_, target, observer, kind, include_terminal)
    if len(keys) < 2:
        raise ValueError(f"fewer than 2 aligned samples for target {target}, observer {observer}")
    if not per_game:
        try:
            return pearson(s, e)
        except UndefinedCorrelation:
            return None
    games = np.array([k[0] for k in keys])
    rs = []
    for g in np.unique(games):
        sel = games == g
        if sel.sum() < 2:
            continue
        try:
            rs.append(pearson(s[sel], e[sel]))
        except UndefinedCorrelation:
            pass
    return float(np.mean(rs)) if rs else None


def correlation_report(log_: MatchLog, include_terminal: bool = True,
                       per_game: bool = False) -> CorrelationReport:
    n = len(log_.agents)
    mats = {}
    for kind in ("confidence", "mood"):
        m: list[list[Optional[float]]] = [[None] * n for _ in range(n)]
        for t in range(n):
            m[t][t] = 1.0
            for o in range(n):
                if o != t and any(e.observer == o for e in log_.estimates):
                    m[t][o] = _pair_r(log_, t, o, kind, include_terminal, per_game)
        mats[kind] = m
    return CorrelationReport(list(log_.agents), mats["confidence"], mats["mood"])
