"""
The two mood experiments.

``experiment_mood_vs_confidence`` plays one game and a short series with a
DQL agent, a PPO agent and two random agents, and charts each learner's own
confidence and mood next to the estimates the other learner makes of it.

``experiment_self_vs_estimated`` plays a long series of two DQL against two
PPO agents and correlates every self trace with every observer's estimate.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Optional

import numpy as np

from moody.harness import (CorrelationReport, MatchLog, correlation_report, run_series,
                           write_trace)
from moody.mood import GwrParams
from moody.plots import line_chart

log = logging.getLogger(__name__)

SERIES_COLUMNS = ["step", "game", "turn", "event", "confidence", "pleasure", "arousal", "mood"]


def _nan(x) -> float:
    return math.nan if x is None else float(x)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(x)


def target_series(log_: MatchLog, target: int) -> dict:
    """Self trace of ``target`` plus every observer's estimate of it, on the target's rows."""
    rows = log_.self_rows(target)
    keys = [(r.game, r.turn, r.event) for r in rows]
    out = {
        "keys": keys,
        "confidence": np.array([_nan(r.confidence) for r in rows]),
        "pleasure": np.array([r.pleasure for r in rows]),
        "arousal": np.array([r.arousal for r in rows]),
        "estimates": {},
    }
    observers = sorted({e.observer for e in log_.estimates if e.target == target})
    for o in observers:
        est = {(e.game, e.turn, e.event): e for e in log_.estimate_rows(o, target)}
        ests = [est[k] for k in keys]
        out["estimates"][o] = {
            "confidence": np.array([_nan(e.e_confidence) for e in ests]),
            "pleasure": np.array([e.e_pleasure for e in ests]),
            "arousal": np.array([e.e_arousal for e in ests]),
        }
    return out


def _game_starts(keys) -> list[int]:
    return [i for i in range(1, len(keys)) if keys[i][0] != keys[i - 1][0]]


def write_target_csv(log_: MatchLog, target: int, path) -> Path:
    s = target_series(log_, target)
    names = log_.agents
    extra = []
    for o in s["estimates"]:
        extra += [f"e_confidence[{names[o]}]", f"e_pleasure[{names[o]}]", f"e_arousal[{names[o]}]",
                  f"e_mood[{names[o]}]"]
    path = Path(path)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SERIES_COLUMNS + extra)
        for i, (g, t, ev) in enumerate(s["keys"]):
            p, a = s["pleasure"][i], s["arousal"][i]
            row = [i, g, t, ev, _fmt(s["confidence"][i]), repr(p), repr(a), repr((p + a) / 2)]
            for e in s["estimates"].values():
                ep, ea = e["pleasure"][i], e["arousal"][i]
                row += [_fmt(e["confidence"][i]), repr(ep), repr(ea), repr((ep + ea) / 2)]
            w.writerow(row)
    return path


def plot_target(log_: MatchLog, target: int, path) -> Path:
    s = target_series(log_, target)
    names = log_.agents
    name = names[target]
    panels = {
        f"{name}: confidence": {"self": s["confidence"]},
        f"{name}: mood": {"pleasure": s["pleasure"], "arousal": s["arousal"]},
    }
    for o, e in s["estimates"].items():
        panels[f"{name} as seen by {names[o]}: e-confidence"] = {"estimate": e["confidence"]}
        panels[f"{name} as seen by {names[o]}: e-mood"] = {"pleasure": e["pleasure"],
                                                           "arousal": e["arousal"]}
    return line_chart(path, panels, marks=_game_starts(s["keys"]))


def experiment_mood_vs_confidence(agents, out_dir, seed: int = 0, series_games: int = 10,
                                  gwr_params: Optional[GwrParams] = None,
                                  turn_clock: str = "player", n_samples: int = 100) -> dict:
    """One game and a ``series_games`` series; writes per-seat CSV and SVG into ``out_dir``.

    Seats with a policy get a confidence/mood chart with the other learners'
    estimates. Seats without one (random agents) get an e-mood chart as seen
    by each learner.
    """
    if not any(a.has_policy for a in agents):
        raise ValueError("experiment needs at least one learner")
    out_dir = Path(out_dir)
    summary = {}
    for label, games in (("single", 1), ("series", series_games)):
        d = out_dir / label
        d.mkdir(parents=True, exist_ok=True)
        lg = run_series(agents, games, seed=seed, gwr_params=gwr_params, n_samples=n_samples,
                        keep_replay=False, turn_clock=turn_clock)
        write_trace(lg, d / "trace.csv")
        random_panels = {}
        for p, agent in enumerate(agents):
            write_target_csv(lg, p, d / f"{agent.name}.csv")
            if agent.has_policy:
                plot_target(lg, p, d / f"{agent.name}.svg")
            else:
                s = target_series(lg, p)
                random_panels[f"{agent.name}: e-mood"] = {
                    f"by {lg.agents[o]}": (e["pleasure"] + e["arousal"]) / 2
                    for o, e in s["estimates"].items()}
        if random_panels:
            line_chart(d / "random_emood.svg", random_panels)
        summary[label] = {"games": games, "winners": [s[0] for s in lg.standings]}
        log.info("%s: winners %s", label, summary[label]["winners"])
    return summary


def plot_moods(log_: MatchLog, path) -> Path:
    """Self mood of every seat against each observer's e-mood, (P+A)/2."""
    panels = {}
    keys = None
    for t in range(len(log_.agents)):
        s = target_series(log_, t)
        keys = keys or s["keys"]
        series = {"self": (s["pleasure"] + s["arousal"]) / 2}
        for o, e in s["estimates"].items():
            series[f"by {log_.agents[o]}"] = (e["pleasure"] + e["arousal"]) / 2
        panels[f"{log_.agents[t]}: mood"] = series
    return line_chart(path, panels, xlabel="own action")


def experiment_self_vs_estimated(agents, out_dir, games: int = 100, seed: int = 0,
                                 per_game: bool = False, include_terminal: bool = True,
                                 reset_per_game: bool = False,
                                 gwr_params: Optional[GwrParams] = None,
                                 turn_clock: str = "player",
                                 n_samples: int = 100) -> tuple[CorrelationReport, MatchLog]:
    """Series of ``games`` with every seat observed by the other three; returns the report."""
    if not all(a.has_policy for a in agents):
        raise ValueError("every seat needs a learned policy")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lg = run_series(agents, games, seed=seed, gwr_params=gwr_params,
                    reset_per_game=reset_per_game, n_samples=n_samples, keep_replay=False,
                    turn_clock=turn_clock)
    write_trace(lg, out_dir / "trace.csv")
    report = correlation_report(lg, include_terminal=include_terminal, per_game=per_game)
    report.write(out_dir)
    plot_moods(lg, out_dir / "moods.svg")
    return report, lg


def same_cross(matrix, kinds) -> tuple[float, float]:
    """Mean off-diagonal entry over same-kind and over cross-kind pairs."""
    same, cross = [], []
    n = len(kinds)
    for t in range(n):
        for o in range(n):
            if t == o or matrix[t][o] is None:
                continue
            (same if kinds[t] == kinds[o] else cross).append(matrix[t][o])
    return (float(np.mean(same)) if same else math.nan,
            float(np.mean(cross)) if cross else math.nan)
