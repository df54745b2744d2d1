"""
Chef's Hat rules engine.

Four players shed 17 cards each. A discard names a face value ``v``, a number
of copies ``q`` and a number of jokers ``j`` used as wild copies of ``v``; it
must beat the board by having a strictly lower face value and at least as many
cards. When every other active player passes the pizza is made: the board is
cleared and the last discarder opens the next round. The first player to empty
their hand wins.

Hands are kept as count vectors of length 13 (index ``v`` holds the number of
cards of face value ``v``; index 12 holds jokers, index 0 is unused). The
200-action space is laid out as::

    0..197   Discard(v, q, j), v-major, then q, then j
    198      JokersOnly (all held jokers, only on an empty board)
    199      Pass
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

N_PLAYERS = 4
HAND_SIZE = 17
BOARD_SIZE = 11
MAX_VALUE = 11
JOKER = 12
N_JOKERS = 2
DECK_SIZE = N_PLAYERS * HAND_SIZE
STATE_SIZE = HAND_SIZE + BOARD_SIZE
N_ACTIONS = 200
JOKERS_ONLY = 198
PASS = 199

STEP_REWARD = -0.01
WIN_REWARD = 1.0


class IllegalActionError(ValueError):
    """Raised when an action violates a game rule."""


@dataclass(frozen=True)
class Card:
    value: int
    golden: bool = False

    def __post_init__(self):
        if not 1 <= self.value <= JOKER:
            raise ValueError(f"card value {self.value} outside 1..12")
        if self.golden and self.value != MAX_VALUE:
            raise ValueError("only a value-11 card can be golden")


class Role(str, Enum):
    CHEF = "chef"
    SOUS_CHEF = "sous_chef"
    WAITER = "waiter"
    DISHWASHER = "dishwasher"
    UNASSIGNED = "unassigned"


ROLE_BY_FINISH = (Role.CHEF, Role.SOUS_CHEF, Role.WAITER, Role.DISHWASHER)


class Event(str, Enum):
    PIZZA_MADE = "pizza_made"
    PLAYER_FINISHED = "player_finished"
    GAME_OVER = "game_over"


# --------------------------------------------------------------------------
# Action space
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionDescriptor:
    """Decoded meaning of an action index.

    ``kind`` is one of ``"discard"``, ``"jokers"`` or ``"pass"``. For
    ``"jokers"`` the quantity is decided at play time (all held jokers).
    """

    kind: str
    value: int = 0
    quantity: int = 0
    jokers: int = 0

    def __str__(self):
        if self.kind == "discard":
            return f"C{self.value};Q{self.quantity};J{self.jokers}"
        return "JokersOnly" if self.kind == "jokers" else "Pass"


def _enumerate_actions() -> list[ActionDescriptor]:
    out = []
    for v in range(1, MAX_VALUE + 1):
        for q in range(1, v + 1):
            for j in range(N_JOKERS + 1):
                out.append(ActionDescriptor("discard", v, q, j))
    out.append(ActionDescriptor("jokers"))
    out.append(ActionDescriptor("pass"))
    return out


ACTIONS: tuple[ActionDescriptor, ...] = tuple(_enumerate_actions())
assert len(ACTIONS) == N_ACTIONS
_INDEX = {a: i for i, a in enumerate(ACTIONS)}

# vectorised views over the 198 discard actions
ACT_V = np.array([a.value for a in ACTIONS[:JOKERS_ONLY]], dtype=np.int64)
ACT_Q = np.array([a.quantity for a in ACTIONS[:JOKERS_ONLY]], dtype=np.int64)
ACT_J = np.array([a.jokers for a in ACTIONS[:JOKERS_ONLY]], dtype=np.int64)
ACT_SIZE = ACT_Q + ACT_J


def decode_action(index: int) -> ActionDescriptor:
    if not 0 <= index < N_ACTIONS:
        raise IndexError(f"action index {index} outside 0..{N_ACTIONS - 1}")
    return ACTIONS[index]


def encode_action(action: ActionDescriptor) -> int:
    try:
        return _INDEX[action]
    except KeyError:
        raise ValueError(f"not a valid action: {action!r}") from None


# --------------------------------------------------------------------------
# Deck and table
# --------------------------------------------------------------------------

def build_deck(seed: int) -> list[Card]:
    """Return the shuffled 68-card deck: ``v`` copies of each value ``v``, two jokers."""
    cards = []
    for v in range(1, MAX_VALUE + 1):
        for k in range(v):
            cards.append(Card(v, golden=(v == MAX_VALUE and k == 0)))
    cards.extend(Card(JOKER) for _ in range(N_JOKERS))
    order = np.random.default_rng(seed).permutation(len(cards))
    return [cards[i] for i in order]


def deck_census() -> np.ndarray:
    counts = np.zeros(JOKER + 1, dtype=np.int64)
    counts[1:MAX_VALUE + 1] = np.arange(1, MAX_VALUE + 1)
    counts[JOKER] = N_JOKERS
    return counts


def counts_of(cards) -> np.ndarray:
    counts = np.zeros(JOKER + 1, dtype=np.int64)
    for c in cards:
        counts[c.value if isinstance(c, Card) else int(c)] += 1
    return counts


@dataclass
class GameTable:
    hands: np.ndarray                      # (4, 13) card counts
    roles: list[Role]
    current_player: int
    board: list[int] = field(default_factory=list)
    board_value: int = 0                   # face value to beat; 0 when empty
    pile: np.ndarray = field(default_factory=lambda: np.zeros(JOKER + 1, dtype=np.int64))
    last_discarder: Optional[int] = None
    pass_streak: int = 0
    finish_order: list[int] = field(default_factory=list)
    action_counts: list[int] = field(default_factory=lambda: [0] * N_PLAYERS)
    golden_holder: Optional[int] = None
    rng_seed: int = 0
    turn: int = 0

    @property
    def board_quantity(self) -> int:
        return len(self.board)

    def hand_size(self, player: int) -> int:
        return int(self.hands[player].sum())

    def hand_cards(self, player: int) -> list[int]:
        """Face values held by ``player``, highest first."""
        h = self.hands[player]
        return [v for v in range(JOKER, 0, -1) for _ in range(h[v])]

    def active_players(self) -> list[int]:
        return [p for p in range(N_PLAYERS) if p not in self.finish_order]

    def is_active(self, player: int) -> bool:
        return player not in self.finish_order

    def copy(self) -> "GameTable":
        return dataclasses.replace(
            self, hands=self.hands.copy(), roles=list(self.roles), board=list(self.board),
            pile=self.pile.copy(), finish_order=list(self.finish_order),
            action_counts=list(self.action_counts))


def _validate_standings(standings) -> list[int]:
    s = [int(p) for p in standings]
    if sorted(s) != list(range(N_PLAYERS)):
        raise ValueError(f"standings must be a permutation of 0..3, got {standings!r}")
    return s


def _move_cards(hands: np.ndarray, src: int, dst: int, values: list[int]):
    for v in values:
        hands[src, v] -= 1
        hands[dst, v] += 1


def _lowest(hand: np.ndarray, n: int) -> list[int]:
    return [v for v in range(1, JOKER + 1) for _ in range(hand[v])][:n]


def _highest(hand: np.ndarray, n: int) -> list[int]:
    return [v for v in range(JOKER, 0, -1) for _ in range(hand[v])][:n]


def exchange_cards(hands: np.ndarray, standings: list[int]):
    """Role card exchange, in place.

    The Dishwasher hands its two lowest (strongest) cards to the Chef, who
    returns its two highest; the Waiter and Sous-Chef swap one card the same way.
    """
    chef, sous, waiter, dish = standings
    for giver, taker, n in ((dish, chef, 2), (waiter, sous, 1)):
        given = _lowest(hands[giver], n)
        _move_cards(hands, giver, taker, given)
        returned = _highest(hands[taker], n)
        _move_cards(hands, taker, giver, returned)


def special_action(table: GameTable) -> bool:
    """Hook for the special action of the full rules; never fires."""
    return False


def new_game(previous_standings=None, seed: int = 0) -> GameTable:
    deck = build_deck(seed)
    hands = np.zeros((N_PLAYERS, JOKER + 1), dtype=np.int64)
    golden_holder = None
    for i, card in enumerate(deck):
        p = i // HAND_SIZE
        hands[p, card.value] += 1
        if card.golden:
            golden_holder = p

    if previous_standings is None:
        roles = [Role.UNASSIGNED] * N_PLAYERS
        first = golden_holder
    else:
        standings = _validate_standings(previous_standings)
        roles = [Role.UNASSIGNED] * N_PLAYERS
        for place, p in enumerate(standings):
            roles[p] = ROLE_BY_FINISH[place]
        exchange_cards(hands, standings)
        first = standings[0]

    table = GameTable(hands=hands, roles=roles, current_player=first,
                      golden_holder=golden_holder, rng_seed=seed)
    special_action(table)
    return table


# --------------------------------------------------------------------------
# Rules
# --------------------------------------------------------------------------

def legal_actions(table: GameTable, player: int) -> np.ndarray:
    if not table.is_active(player):
        raise IllegalActionError(f"player {player} has already finished")
    hand = table.hands[player]
    jokers = hand[JOKER]
    ok = (hand[ACT_V] >= ACT_Q) & (jokers >= ACT_J) & (ACT_SIZE <= BOARD_SIZE)
    mask = np.zeros(N_ACTIONS, dtype=bool)
    if table.board:
        ok &= (ACT_V < table.board_value) & (ACT_SIZE >= len(table.board))
        mask[:JOKERS_ONLY] = ok
        mask[PASS] = True
    else:
        mask[:JOKERS_ONLY] = ok
        mask[JOKERS_ONLY] = jokers > 0
        mask[PASS] = not mask[:PASS].any()
    return mask


def _check_action(table: GameTable, player: int, action: ActionDescriptor):
    """Raise IllegalActionError naming the first rule ``action`` breaks."""
    hand = table.hands[player]
    if action.kind == "pass":
        if not table.board and legal_actions(table, player)[:PASS].any():
            raise IllegalActionError("round starter must discard when able")
        return
    if action.kind == "jokers":
        if hand[JOKER] == 0:
            raise IllegalActionError("JokersOnly needs at least one joker")
        if table.board:
            raise IllegalActionError("jokers alone cannot beat a nonempty board")
        return
    v, q, j = action.value, action.quantity, action.jokers
    if hand[v] < q:
        raise IllegalActionError(f"hand holds {hand[v]} cards of value {v}, needs {q}")
    if hand[JOKER] < j:
        raise IllegalActionError(f"hand holds {hand[JOKER]} jokers, needs {j}")
    if q + j > BOARD_SIZE:
        raise IllegalActionError(f"discard of {q + j} cards exceeds board capacity")
    if table.board:
        if v >= table.board_value:
            raise IllegalActionError(f"value {v} does not beat board value {table.board_value}")
        if q + j < len(table.board):
            raise IllegalActionError(f"{q + j} cards cannot cover board quantity {len(table.board)}")


def _next_active(table: GameTable, after: int) -> int:
    for k in range(1, N_PLAYERS + 1):
        p = (after + k) % N_PLAYERS
        if table.is_active(p):
            return p
    raise RuntimeError("no active player left")


@dataclass
class StepResult:
    reward: float
    next_state: np.ndarray
    events: set = field(default_factory=set)
    discarded: list = field(default_factory=list)


def apply_action(table: GameTable, player: int, index: int) -> StepResult:
    """Execute ``index`` for ``player`` in place and return the outcome."""
    if is_over(table)[0]:
        raise IllegalActionError("game is over")
    if not table.is_active(player):
        raise IllegalActionError(f"player {player} has already finished")
    if player != table.current_player:
        raise IllegalActionError(f"it is player {table.current_player}'s turn, not {player}'s")
    action = decode_action(index)
    _check_action(table, player, action)

    hand = table.hands[player]
    events = set()
    reward = STEP_REWARD
    discarded: list[int] = []
    table.action_counts[player] += 1
    table.turn += 1

    if action.kind == "pass":
        table.pass_streak += 1
    else:
        if action.kind == "jokers":
            v, q, j = JOKER, 0, int(hand[JOKER])
        else:
            v, q, j = action.value, action.quantity, action.jokers
        discarded = [v] * q + [JOKER] * j
        hand[v] -= q
        hand[JOKER] -= j
        for c in table.board:
            table.pile[c] += 1
        table.board = discarded
        table.board_value = v
        table.last_discarder = player
        table.pass_streak = 0
        if hand.sum() == 0:
            table.finish_order.append(player)
            events.add(Event.PLAYER_FINISHED)
            if len(table.finish_order) == 1:
                reward = WIN_REWARD

    active = table.active_players()
    if len(active) <= 1:
        events.add(Event.GAME_OVER)
        return StepResult(reward, encode_state(table, player), events, discarded)

    # everyone still in, bar the last discarder, has passed on the board
    needed = sum(1 for p in active if p != table.last_discarder)
    if table.board and action.kind == "pass" and table.pass_streak >= needed:
        for c in table.board:
            table.pile[c] += 1
        table.board = []
        table.board_value = 0
        table.pass_streak = 0
        events.add(Event.PIZZA_MADE)
        ld = table.last_discarder
        table.current_player = ld if table.is_active(ld) else _next_active(table, ld)
    else:
        table.current_player = _next_active(table, player)
    return StepResult(reward, encode_state(table, player), events, discarded)


def encode_state(table: GameTable, player: int) -> np.ndarray:
    """28 values in [0, 1]: hand highest-first, then board in play order, each /12."""
    state = np.zeros(STATE_SIZE)
    hand = table.hands[player]
    vals = np.repeat(np.arange(JOKER, 0, -1), hand[JOKER:0:-1])
    state[:len(vals)] = vals / JOKER
    if table.board:
        state[HAND_SIZE:HAND_SIZE + len(table.board)] = np.asarray(table.board) / JOKER
    return state


def is_over(table: GameTable) -> tuple[bool, Optional[list[int]]]:
    active = table.active_players()
    if len(active) > 1:
        return False, None
    return True, table.finish_order + active


def card_census(table: GameTable) -> np.ndarray:
    """Counts across hands, board and pile; equals ``deck_census()`` at all times."""
    return table.hands.sum(axis=0) + counts_of(table.board) + table.pile


def mask_from_state(state: np.ndarray) -> np.ndarray:
    """Rebuild the legal-action mask from a 28-value state vector.

    Legality only depends on the hand and the board, both of which the state
    carries, so this matches ``legal_actions`` for the encoded player.
    """
    raw = np.rint(np.asarray(state) * JOKER).astype(np.int64)
    hand = np.bincount(raw[:HAND_SIZE], minlength=JOKER + 1)
    board = raw[HAND_SIZE:][raw[HAND_SIZE:] > 0]
    jokers = hand[JOKER]
    ok = (hand[ACT_V] >= ACT_Q) & (jokers >= ACT_J) & (ACT_SIZE <= BOARD_SIZE)
    mask = np.zeros(N_ACTIONS, dtype=bool)
    if len(board):
        face = board.min()
        ok &= (ACT_V < face) & (ACT_SIZE >= len(board))
        mask[:JOKERS_ONLY] = ok
        mask[PASS] = True
    else:
        mask[:JOKERS_ONLY] = ok
        mask[JOKERS_ONLY] = jokers > 0
        mask[PASS] = not mask[:PASS].any()
    return mask
