"""
Command line entry point.

    moody train --agent dql --games 2000 --out runs/dql.json
    moody play --seats dql:runs/dql.json ppo:runs/ppo.json random random
    moody experiment1 --dql runs/dql.json --ppo runs/ppo.json
    moody experiment2 --dql a.json b.json --ppo c.json d.json --games 100 --seed 7
    moody plot --trace runs/.../trace.csv

Settings come from defaults, then ``--config FILE`` (JSON or YAML), then
flags. Every run writes into a fresh ``<out>/<timestamp>-<subcommand>/``
directory starting with the resolved ``config.json``. Exit status is 0 on
success, 1 for usage or configuration errors and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from moody import experiments, harness
from moody.agents import DQLAgent, PPOAgent, RandomAgent, train_league
from moody.mood import GwrParams
from moody.persist import CheckpointError, load_agent, save_agent

log = logging.getLogger("moody")


class UsageError(Exception):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class GwrOverrides(_Strict):
    activity_threshold: Optional[float] = None
    habituation_threshold: Optional[float] = None
    eps_b: Optional[float] = None
    eps_n: Optional[float] = None
    tau_b: Optional[float] = None
    tau_n: Optional[float] = None
    kappa: Optional[float] = None
    max_age: Optional[int] = None

    def params(self) -> GwrParams:
        return GwrParams(**{k: v for k, v in self.model_dump().items() if v is not None})


def _check_file(p: Optional[Path]) -> Optional[Path]:
    if p is not None and not Path(p).is_file():
        raise ValueError(f"no such file: {p}")
    return p


class RunConfig(_Strict):
    subcommand: Literal["train", "play", "experiment1", "experiment2", "plot"]
    seed: int = 0
    out: Path = Path("runs")
    # train
    agent: Literal["dql", "ppo"] = "dql"
    league: Literal["everyone", "random"] = "everyone"
    # play / experiments
    games: Optional[int] = Field(default=None, ge=1)
    seats: list[str] = ["random", "random", "random", "random"]
    dql: list[Path] = []
    ppo: list[Path] = []
    gwr: GwrOverrides = GwrOverrides()
    turn_clock: Literal["player", "game"] = "player"
    samples: int = Field(default=100, ge=1)
    reset_per_game: bool = False
    per_game: bool = False
    include_terminal: bool = True
    # plot
    trace: Optional[Path] = None

    @field_validator("dql", "ppo")
    @classmethod
    def _paths_exist(cls, v):
        for p in v:
            _check_file(p)
        return v

    @field_validator("trace")
    @classmethod
    def _trace_exists(cls, v):
        return _check_file(v)

    @field_validator("seats")
    @classmethod
    def _seats(cls, v):
        if len(v) != 4:
            raise ValueError(f"need 4 seats, got {len(v)}")
        for s in v:
            kind, _, path = s.partition(":")
            if kind not in ("random", "dql", "ppo"):
                raise ValueError(f"seat {s!r}: kind must be random, dql or ppo")
            if kind != "random":
                if not path:
                    raise ValueError(f"seat {s!r} needs a checkpoint path (kind:path)")
                _check_file(Path(path))
        return v

    def game_count(self) -> int:
        if self.games is not None:
            return self.games
        return {"train": 2000, "play": 1, "experiment1": 10, "experiment2": 100}.get(self.subcommand, 1)

    def check_roster(self):
        """Cross-field requirements of each subcommand."""
        if self.subcommand == "experiment1" and (len(self.dql) != 1 or len(self.ppo) != 1):
            raise ValueError("experiment1 needs exactly one --dql and one --ppo checkpoint")
        if self.subcommand == "experiment2" and (len(self.dql) != 2 or len(self.ppo) != 2):
            raise ValueError("experiment2 needs two --dql and two --ppo checkpoints")
        if self.subcommand == "plot" and self.trace is None:
            raise ValueError("plot needs --trace")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False, argument_default=S)
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", type=Path,
                        help="output base directory (train: checkpoint file ending in .json)")
    common.add_argument("--config", type=Path, help="JSON or YAML file of settings")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")

    parser = _Parser(prog="moody", description="Mood and confidence of card-game agents.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, argument_default=S)

    def gwr_flags(p):
        p.add_argument("--gwr", nargs="+", metavar="KEY=VALUE", help="GWR parameter overrides")
        p.add_argument("--turn-clock", choices=["player", "game"], dest="turn_clock",
                       help="T counts the actor's own actions (player) or all table turns (game)")
        p.add_argument("--samples", type=int, help="hand reconstructions per observed action")
        p.add_argument("--reset-per-game", action="store_true", dest="reset_per_game")

    p = add("train", "train a DQL or PPO agent and write its checkpoint")
    p.add_argument("--agent", choices=["dql", "ppo"])
    p.add_argument("--games", type=int)
    p.add_argument("--league", choices=["everyone", "random"],
                   help="train against the other learner and two random agents, or three random")

    p = add("play", "play games with mood tracing")
    p.add_argument("--seats", nargs=4, metavar="SEAT", help="random, dql:PATH or ppo:PATH")
    p.add_argument("--games", type=int)
    gwr_flags(p)

    p = add("experiment1", "confidence and mood charts for one game and a short series")
    p.add_argument("--dql", nargs=1, type=Path)
    p.add_argument("--ppo", nargs=1, type=Path)
    p.add_argument("--games", type=int, help="length of the series run")
    gwr_flags(p)

    p = add("experiment2", "self versus estimated correlations")
    p.add_argument("--dql", nargs=2, type=Path)
    p.add_argument("--ppo", nargs=2, type=Path)
    p.add_argument("--games", type=int)
    p.add_argument("--per-game", action="store_true", dest="per_game")
    p.add_argument("--include-terminal", action="store_true", dest="include_terminal")
    p.add_argument("--exclude-terminal", action="store_false", dest="include_terminal")
    gwr_flags(p)

    p = add("plot", "render SVG charts from a trace.csv")
    p.add_argument("--trace", type=Path)
    return parser


def _load_file(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as e:
        raise UsageError(f"config: cannot read {path}: {e.strerror}") from None
    try:
        data = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise UsageError(f"config: {path} does not parse: {e}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config: {path} must hold a mapping")
    return data


def _gwr_pairs(items) -> dict:
    out = {}
    for it in items:
        key, eq, value = it.partition("=")
        if not eq:
            raise UsageError(f"--gwr expects KEY=VALUE, got {it!r}")
        out[key] = value
    return out


def parse_and_validate(argv) -> tuple[RunConfig, bool]:
    """Resolve defaults, file values and flags into a validated RunConfig."""
    ns = vars(build_parser().parse_args(argv))
    verbose = ns.pop("verbose", False)
    values = {}
    if "config" in ns:
        values.update(_load_file(ns.pop("config")))
    if "gwr" in ns:
        values["gwr"] = {**values.get("gwr", {}), **_gwr_pairs(ns.pop("gwr"))}
    values.update(ns)
    try:
        cfg = RunConfig(**values)
        cfg.check_roster()
    except ValidationError as e:
        msgs = "; ".join(f"{'.'.join(str(x) for x in err['loc'])}: {err['msg']}"
                         for err in e.errors())
        raise UsageError(f"config: {msgs}") from None
    except ValueError as e:
        raise UsageError(f"config: {e}") from None
    return cfg, verbose


def _run_dir(cfg: RunConfig) -> Path:
    if cfg.subcommand == "train" and cfg.out.suffix == ".json":
        d = cfg.out.parent
        d.mkdir(parents=True, exist_ok=True)
        return d
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
    base = cfg.out / f"{stamp}-{cfg.subcommand}"
    d, k = base, 1
    while d.exists():
        k += 1
        d = base.with_name(f"{base.name}-{k}")
    d.mkdir(parents=True)
    return d


def _artifact(cfg: RunConfig, name: str) -> str:
    """Side files of a checkpoint written to an explicit path carry its stem."""
    if cfg.subcommand == "train" and cfg.out.suffix == ".json":
        return f"{cfg.out.stem}.{name}"
    return name


def _load_seat(spec: str, seat: int):
    kind, _, path = spec.partition(":")
    if kind == "random":
        return RandomAgent(name=f"random{seat}")
    agent = load_agent(path, name=f"{kind.upper()}{seat}")
    if agent.kind != kind:
        raise CheckpointError(f"{path}: holds a {agent.kind} agent, seat asks for {kind}")
    return agent


def _load_roster(paths, kind: str) -> list:
    agents = []
    for i, p in enumerate(paths, 1):
        a = load_agent(p, name=f"{kind.upper()}{i}")
        if a.kind != kind:
            raise CheckpointError(f"{p}: holds a {a.kind} agent, expected {kind}")
        agents.append(a)
    return agents


def preflight(cfg: RunConfig) -> None:
    """Load every referenced checkpoint once so a bad file fails before any output or game."""
    if cfg.subcommand == "play":
        for i, s in enumerate(cfg.seats):
            _load_seat(s, i)
    elif cfg.subcommand in ("experiment1", "experiment2"):
        _load_roster(cfg.dql, "dql")
        _load_roster(cfg.ppo, "ppo")


def cmd_train(cfg: RunConfig, run_dir: Path) -> None:
    learner = DQLAgent(seed=cfg.seed, name=cfg.agent.upper()) if cfg.agent == "dql" else \
        PPOAgent(seed=cfg.seed, name=cfg.agent.upper())
    if cfg.league == "everyone":
        other = PPOAgent(seed=cfg.seed + 1, name="PPO") if cfg.agent == "dql" else \
            DQLAgent(seed=cfg.seed + 1, name="DQL")
        agents = [learner, other, RandomAgent("random2"), RandomAgent("random3")]
    else:
        agents = [learner] + [RandomAgent(f"random{i}") for i in (1, 2, 3)]
    curve = train_league(agents, cfg.game_count(), seed=cfg.seed)
    ckpt = cfg.out if cfg.out.suffix == ".json" else run_dir / f"{cfg.agent}.json"
    save_agent(learner, ckpt)
    with (run_dir / _artifact(cfg, "curve.csv")).open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["games"] + [a.name for a in agents])
        for row in curve:
            w.writerow([row["games"]] + [repr(x) for x in row["win_rates"]])
    log.info("checkpoint written to %s", ckpt)


def cmd_play(cfg: RunConfig, run_dir: Path) -> None:
    agents = [_load_seat(s, i) for i, s in enumerate(cfg.seats)]
    lg = harness.run_series(agents, cfg.game_count(), seed=cfg.seed, gwr_params=cfg.gwr.params(),
                            reset_per_game=cfg.reset_per_game, n_samples=cfg.samples,
                            turn_clock=cfg.turn_clock)
    harness.write_trace(lg, run_dir / "trace.csv")
    harness.write_replay(lg, run_dir / "replay.jsonl")
    (run_dir / "standings.json").write_text(json.dumps(lg.standings) + "\n")
    experiments.plot_moods(lg, run_dir / "moods.svg")


def cmd_experiment1(cfg: RunConfig, run_dir: Path) -> None:
    agents = _load_roster(cfg.dql, "dql") + _load_roster(cfg.ppo, "ppo")
    agents[0].name, agents[1].name = "DQL", "PPO"
    agents += [RandomAgent("random1"), RandomAgent("random2")]
    summary = experiments.experiment_mood_vs_confidence(
        agents, run_dir, seed=cfg.seed, series_games=cfg.game_count(),
        gwr_params=cfg.gwr.params(), turn_clock=cfg.turn_clock, n_samples=cfg.samples)
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def cmd_experiment2(cfg: RunConfig, run_dir: Path) -> None:
    agents = _load_roster(cfg.dql, "dql") + _load_roster(cfg.ppo, "ppo")
    report, _ = experiments.experiment_self_vs_estimated(
        agents, run_dir, games=cfg.game_count(), seed=cfg.seed, per_game=cfg.per_game,
        include_terminal=cfg.include_terminal, reset_per_game=cfg.reset_per_game,
        gwr_params=cfg.gwr.params(), turn_clock=cfg.turn_clock, n_samples=cfg.samples)
    for name in ("econfidence", "emood"):
        log.info("%s\n%s", name, "\n".join(" ".join("  -  " if v is None else f"{v:5.2f}" for v in r)
                                             for r in getattr(report, name)))


def cmd_plot(cfg: RunConfig, run_dir: Path) -> None:
    lg = harness.read_trace(cfg.trace)
    experiments.plot_moods(lg, run_dir / "moods.svg")
    for p in range(len(lg.agents)):
        experiments.plot_target(lg, p, run_dir / f"{lg.agents[p]}.svg")


COMMANDS = {"train": cmd_train, "play": cmd_play, "experiment1": cmd_experiment1,
            "experiment2": cmd_experiment2, "plot": cmd_plot}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, verbose = parse_and_validate(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        preflight(cfg)
    except CheckpointError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        run_dir = _run_dir(cfg)
        (run_dir / _artifact(cfg, "config.json")).write_text(cfg.model_dump_json(indent=2) + "\n")
        COMMANDS[cfg.subcommand](cfg, run_dir)
    except Exception as e:  # noqa: BLE001 - report and map to the runtime exit status
        log.debug("failure", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    print(run_dir)
    return 0
