"""
Opponent assessment from sampled hand reconstructions.

An observer sees the board an opponent faced, the cards the opponent just
discarded and how many cards the opponent has shed before. It rebuilds 17
hand slots (zeros for shed cards, the discarded cards, uniform random values
1..11 for the unknown rest), evaluates the observed action with its *own*
policy on each reconstruction, and averages the resulting confidences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from moody.game import BOARD_SIZE, HAND_SIZE, JOKER, MAX_VALUE, STATE_SIZE
from moody.mood import (GwrNetwork, GwrParams, PAPoint, confidences, pa_from_event,
                        turn_reward)

N_SAMPLES = 100


@dataclass
class OpponentObservation:
    opponent: int
    board: list[int]          # face values on the board before the action
    discarded: list[int]      # the observed discard, empty for a pass
    gone: int                 # cards shed in earlier actions
    action_index: int
    turns: int                # opponent's own action count before this action

    def __post_init__(self):
        if self.gone < 0 or self.gone + len(self.discarded) > HAND_SIZE:
            raise ValueError(
                f"{self.gone} shed + {len(self.discarded)} discarded cards exceed a {HAND_SIZE}-card hand")
        if len(self.board) > BOARD_SIZE:
            raise ValueError("board holds more than 11 cards")

    @property
    def unknown(self) -> int:
        return HAND_SIZE - self.gone - len(self.discarded)


def _encode(hand_values: np.ndarray, board: Sequence[int]) -> np.ndarray:
    """Same layout as the game's state encoding: hand highest-first, zero-padded, then board."""
    state = np.zeros(STATE_SIZE)
    hand = np.sort(hand_values[hand_values > 0])[::-1]
    state[:len(hand)] = hand / JOKER
    if len(board):
        state[HAND_SIZE:HAND_SIZE + len(board)] = np.asarray(board) / JOKER
    return state


def estimate_hand(obs: OpponentObservation, rng: np.random.Generator,
                  true_rest: Optional[Sequence[int]] = None) -> np.ndarray:
    """One estimated 28-value state of the opponent as it was before the observed action.

    ``true_rest`` replaces the random slots with the opponent's actual
    remaining cards (the ground-truth limit).
    """
    if true_rest is None:
        rest = rng.integers(1, MAX_VALUE + 1, size=obs.unknown)
    else:
        rest = np.asarray(true_rest, dtype=np.int64)
        if rest.size != obs.unknown:
            raise ValueError(f"expected {obs.unknown} true cards, got {rest.size}")
    hand = np.concatenate([rest, np.asarray(obs.discarded, dtype=np.int64)])
    return _encode(hand, obs.board)


def sample_estates(obs: OpponentObservation, n: int = N_SAMPLES, seed=None,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """``n`` independent reconstructions as an (n, 28) array sharing the board part."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = rng if rng is not None else np.random.default_rng(seed)
    rest = rng.integers(1, MAX_VALUE + 1, size=(n, obs.unknown))
    known = np.asarray(obs.discarded, dtype=np.int64)
    hands = np.concatenate([rest, np.broadcast_to(known, (n, known.size))], axis=1)
    hands = -np.sort(-hands, axis=1)
    states = np.zeros((n, STATE_SIZE))
    states[:, :hands.shape[1]] = hands / JOKER
    if obs.board:
        states[:, HAND_SIZE:HAND_SIZE + len(obs.board)] = np.asarray(obs.board) / JOKER
    return states


def e_confidence(observer, obs: OpponentObservation, estates: np.ndarray) -> float:
    """Mean confidence the observer's own policy gives the observed action over ``estates``."""
    estates = np.atleast_2d(estates)
    if estates.shape[0] == 0:
        raise ValueError("no estimated states")
    q = observer.q_batch(estates)[:, obs.action_index]
    return float(confidences(q, turn_reward(obs.turns)).mean())


@dataclass
class EstimatedMood:
    """One GWR per opponent for a single observer."""

    params: Optional[GwrParams] = None
    networks: dict[int, GwrNetwork] = field(default_factory=dict)
    trace: list[tuple[int, float]] = field(default_factory=list)

    def network(self, opponent: int) -> GwrNetwork:
        if opponent not in self.networks:
            self.networks[opponent] = GwrNetwork(self.params)
        return self.networks[opponent]

    def reading(self, opponent: int) -> PAPoint:
        return self.network(opponent).reading()


def update_e_mood(emood: EstimatedMood, opponent: int, event: str,
                  e_conf: Optional[float] = None) -> PAPoint:
    """Feed one e-PA point to ``opponent``'s network and return its new reading."""
    pa = pa_from_event(event, e_conf)
    net = emood.network(opponent)
    net.train(pa)
    if e_conf is not None:
        emood.trace.append((opponent, e_conf))
    return net.reading()
