"""Mood and confidence readings for reinforcement-learning agents playing Chef's Hat."""

from moody.agents import DQLAgent, LearnerConfig, PPOAgent, RandomAgent, train_league
from moody.game import new_game
from moody.harness import correlation_report, pearson, run_match, run_series
from moody.mood import GwrNetwork, GwrParams, confidence, state_confidence, turn_reward
from moody.persist import load_agent, save_agent

__version__ = "0.1.0"

__all__ = [
    "DQLAgent", "GwrNetwork", "GwrParams", "LearnerConfig", "PPOAgent", "RandomAgent",
    "confidence", "correlation_report", "load_agent", "new_game", "pearson", "run_match",
    "run_series", "save_agent", "state_confidence", "train_league", "turn_reward",
]
