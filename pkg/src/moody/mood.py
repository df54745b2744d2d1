"""
Introspective confidence, pleasure/arousal mapping and the GWR mood network.

A Q-value is read as a probability of success against the best reward still
reachable this game, mapped to a pleasure/arousal point, and fed to a
Growing-When-Required network whose mean weight is the mood.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

SNAPSHOT_SCHEMA = "moody.gwr-snapshot"
SNAPSHOT_VERSION = 1


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


# --------------------------------------------------------------------------
# Confidence
# --------------------------------------------------------------------------

def turn_reward(T: int) -> float:
    """Best reward still reachable after ``T`` own actions, floored at 0.01."""
    if T < 0:
        raise ValueError(f"turn count must be non-negative, got {T}")
    return max((100 - T) / 100, 0.01)


def confidence(q_selected: float, R_T: float) -> float:
    """``clamp(0.5 * log10(q / R_T), 0, 1)``; non-positive ``q`` gives 0."""
    if R_T <= 0:
        raise ValueError(f"R_T must be positive, got {R_T}")
    if q_selected <= 0:
        return 0.0
    return _clamp01(0.5 * math.log10(q_selected / R_T))


def confidences(q: np.ndarray, R_T: float) -> np.ndarray:
    """``confidence`` over an array of Q-values, bit-identical to the scalar form."""
    if R_T <= 0:
        raise ValueError(f"R_T must be positive, got {R_T}")
    q = np.asarray(q, dtype=np.float64)
    return np.array([confidence(float(x), R_T) for x in q.ravel()]).reshape(q.shape)


def state_confidence(q: np.ndarray, mask: np.ndarray, T: int) -> float:
    """Summed confidence of every allowed action, clamped to [0, 1]."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("action mask allows nothing")
    c = confidences(np.asarray(q)[mask], turn_reward(T))
    return _clamp01(float(c.sum()))


# --------------------------------------------------------------------------
# Pleasure / arousal
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PAPoint:
    pleasure: float
    arousal: float

    def __iter__(self):
        yield self.pleasure
        yield self.arousal

    def as_array(self) -> np.ndarray:
        return np.array([self.pleasure, self.arousal])


VICTORY = PAPoint(1.0, 1.0)
DEFEAT = PAPoint(0.0, 0.0)


def pa_from_action(c: float) -> PAPoint:
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"confidence must lie in [0, 1], got {c}")
    return PAPoint(0.5 * c, _clamp01(0.5 + (c - 0.5) / 0.25))


def pa_from_event(event: str, c: Optional[float] = None) -> PAPoint:
    """PA point for ``"action"`` (needs ``c``), ``"victory"`` or ``"defeat"``."""
    if event == "action":
        if c is None:
            raise ValueError("an action event needs a confidence")
        return pa_from_action(c)
    if event == "victory":
        return VICTORY
    if event == "defeat":
        return DEFEAT
    raise ValueError(f"unknown event {event!r}")


# --------------------------------------------------------------------------
# Growing When Required network
# --------------------------------------------------------------------------

def gwr_activity(d2: float) -> float:
    if d2 < 0:
        raise ValueError("squared distance must be non-negative")
    return math.exp(-d2)


def gwr_habituate(h: float, tau: float, kappa: float) -> float:
    return _clamp01(h + tau * kappa * (1.0 - h) - tau)


@dataclass
class GwrParams:
    activity_threshold: float = 0.85
    habituation_threshold: float = 0.1
    eps_b: float = 0.2
    eps_n: float = 0.006
    tau_b: float = 0.3
    tau_n: float = 0.1
    kappa: float = 1.05
    max_age: int = 50


FALLBACK_WEIGHTS = ((0.25, 0.5), (0.75, 0.5))


@dataclass
class GwrNeuron:
    weight: np.ndarray
    habituation: float = 1.0


class GwrNetwork:
    """Online GWR over pleasure/arousal points.

    Starts with two neurons at fallback positions; the first two inputs seed
    them in turn, after which ordinary GWR learning applies.
    """

    def __init__(self, params: Optional[GwrParams] = None, weights=FALLBACK_WEIGHTS,
                 seeded: int = 0):
        self.params = params or GwrParams()
        self.neurons: dict[int, GwrNeuron] = {}
        self.edges: dict[tuple[int, int], int] = {}
        for i, w in enumerate(weights):
            self.neurons[i] = GwrNeuron(np.array(w, dtype=np.float64))
        if len(self.neurons) < 2:
            raise ValueError("a GWR network needs at least two neurons")
        self.next_id = len(self.neurons)
        self.seeded = seeded
        self.steps = 0

    # -- queries --------------------------------------------------------

    def __len__(self):
        return len(self.neurons)

    def ids(self) -> list[int]:
        return sorted(self.neurons)

    def weights(self) -> np.ndarray:
        return np.array([self.neurons[i].weight for i in self.ids()])

    def neighbours(self, n: int) -> list[int]:
        return sorted(b if a == n else a for (a, b) in self.edges if n in (a, b))

    def bmu(self, x) -> tuple[int, int, float]:
        """Best and second-best neuron ids and the best squared distance; ties go to the lower id."""
        if len(self.neurons) < 2:
            raise ValueError("need at least two neurons")
        ids = self.ids()
        d2 = ((self.weights() - np.asarray(x, dtype=np.float64)) ** 2).sum(axis=1)
        order = np.argsort(d2, kind="stable")
        return ids[order[0]], ids[order[1]], float(d2[order[0]])

    def reading(self) -> PAPoint:
        m = self.weights().mean(axis=0)
        return PAPoint(float(m[0]), float(m[1]))

    # -- learning -------------------------------------------------------

    @staticmethod
    def _key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def train(self, x) -> "GwrNetwork":
        x = np.asarray(tuple(x), dtype=np.float64)
        if x.shape != (2,) or not np.all((x >= 0.0) & (x <= 1.0)):
            raise ValueError(f"input must lie in the unit square, got {x}")
        self.steps += 1
        if self.seeded < 2:
            self.neurons[self.ids()[self.seeded]].weight = x.copy()
            self.seeded += 1
            return self

        p = self.params
        b, s, d2 = self.bmu(x)
        self.edges[self._key(b, s)] = 0
        nb = self.neurons[b]
        fresh = {s}
        if gwr_activity(d2) < p.activity_threshold and nb.habituation < p.habituation_threshold:
            r = self.next_id
            self.next_id += 1
            self.neurons[r] = GwrNeuron((nb.weight + x) / 2.0, 1.0)
            self.edges[self._key(r, b)] = 0
            self.edges[self._key(r, s)] = 0
            del self.edges[self._key(b, s)]
            fresh = {r}
        else:
            nb.weight = nb.weight + p.eps_b * nb.habituation * (x - nb.weight)
            for n in self.neighbours(b):
                nn_ = self.neurons[n]
                nn_.weight = nn_.weight + p.eps_n * nn_.habituation * (x - nn_.weight)

        nb.habituation = gwr_habituate(nb.habituation, p.tau_b, p.kappa)
        for n in self.neighbours(b):
            nn_ = self.neurons[n]
            nn_.habituation = gwr_habituate(nn_.habituation, p.tau_n, p.kappa)
            if n not in fresh:
                self.edges[self._key(b, n)] += 1

        self._prune()
        return self

    def _prune(self):
        p = self.params
        for k in [k for k, age in self.edges.items() if age > p.max_age]:
            del self.edges[k]
        linked = {n for k in self.edges for n in k}
        for n in self.ids():
            if len(self.neurons) <= 2:
                break
            if n not in linked:
                del self.neurons[n]

    # -- persistence ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": SNAPSHOT_SCHEMA,
            "version": SNAPSHOT_VERSION,
            "params": asdict(self.params),
            "seeded": self.seeded,
            "steps": self.steps,
            "next_id": self.next_id,
            "neurons": [{"id": i, "weight": [float(v) for v in self.neurons[i].weight],
                         "habituation": self.neurons[i].habituation} for i in self.ids()],
            "edges": [[a, b, age] for (a, b), age in sorted(self.edges.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GwrNetwork":
        if d.get("schema") != SNAPSHOT_SCHEMA:
            raise ValueError(f"not a GWR snapshot (schema {d.get('schema')!r})")
        if d.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported GWR snapshot version {d.get('version')!r}")
        net = cls.__new__(cls)
        net.params = GwrParams(**d["params"])
        net.neurons = {int(n["id"]): GwrNeuron(np.array(n["weight"], dtype=np.float64),
                                               float(n["habituation"])) for n in d["neurons"]}
        if len(net.neurons) < 2:
            raise ValueError("snapshot holds fewer than two neurons")
        net.edges = {}
        for a, b, age in d["edges"]:
            if a not in net.neurons or b not in net.neurons:
                raise ValueError(f"edge ({a}, {b}) references a missing neuron")
            net.edges[cls._key(int(a), int(b))] = int(age)
        net.next_id = int(d["next_id"])
        net.seeded = int(d["seeded"])
        net.steps = int(d["steps"])
        return net


def gwr_bmu(net: GwrNetwork, x) -> tuple[int, int, float]:
    return net.bmu(x)


def gwr_train(net: GwrNetwork, x) -> GwrNetwork:
    return net.train(x)


def mood_reading(net: GwrNetwork) -> PAPoint:
    return net.reading()
