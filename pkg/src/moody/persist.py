"""Checkpoint and GWR snapshot files.

Checkpoints are JSON documents carrying a schema id, the network
architecture, the learner config and the parameters as base64-encoded
little-endian float64, so they round-trip bit for bit.
"""

from __future__ import annotations

import base64
import binascii
import json
from pathlib import Path

import numpy as np

from moody.agents import DQLAgent, LearnerConfig, PPOAgent
from moody.mood import GwrNetwork

CHECKPOINT_VERSION = 1
SCHEMAS = {"dql": "moody.dql-checkpoint", "ppo": "moody.ppo-checkpoint"}
_KIND_BY_SCHEMA = {v: k for k, v in SCHEMAS.items()}


class CheckpointError(ValueError):
    """A checkpoint or snapshot file cannot be loaded."""


def save_agent(agent, path) -> Path:
    if agent.kind not in SCHEMAS:
        raise ValueError(f"agents of kind {agent.kind!r} have no checkpoint")
    flat = agent.net.get_flat().astype("<f8")
    doc = {
        "schema": SCHEMAS[agent.kind],
        "version": CHECKPOINT_VERSION,
        "name": agent.name,
        "seed": agent.seed,
        "arch": agent.net.arch(),
        "config": agent.config.to_dict(),
        "n_params": int(flat.size),
        "params": base64.b64encode(flat.tobytes()).decode("ascii"),
    }
    path = Path(path)
    path.write_text(json.dumps(doc))
    return path


def load_agent(path, name=None):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise CheckpointError(f"{path}: no such checkpoint") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CheckpointError(f"{path}: truncated or corrupt checkpoint ({e})") from None
    if not isinstance(doc, dict) or doc.get("schema") not in _KIND_BY_SCHEMA:
        raise CheckpointError(f"{path}: not an agent checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: checkpoint version {doc.get('version')!r}, "
                              f"expected {CHECKPOINT_VERSION}")
    kind = _KIND_BY_SCHEMA[doc["schema"]]
    try:
        raw = base64.b64decode(doc["params"], validate=True)
    except (binascii.Error, KeyError) as e:
        raise CheckpointError(f"{path}: unreadable parameter block ({e})") from None
    if len(raw) % 8:
        raise CheckpointError(f"{path}: parameter block is truncated")
    flat = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    if flat.size != doc.get("n_params"):
        raise CheckpointError(f"{path}: holds {flat.size} parameters, header says {doc.get('n_params')}")

    cfg = LearnerConfig(**doc["config"])
    cls = DQLAgent if kind == "dql" else PPOAgent
    agent = cls(cfg, seed=int(doc.get("seed", 0)), name=name or doc.get("name", kind))
    if agent.net.arch() != doc["arch"]:
        raise CheckpointError(f"{path}: architecture {doc['arch']} does not match config")
    try:
        agent.net.set_flat(flat)
    except ValueError as e:
        raise CheckpointError(f"{path}: {e}") from None
    if kind == "dql":
        agent.target = agent.net.copy()
    return agent


def save_gwr(net: GwrNetwork, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(net.to_dict()))
    return path


def load_gwr(path) -> GwrNetwork:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise CheckpointError(f"{path}: no such snapshot") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CheckpointError(f"{path}: truncated or corrupt snapshot ({e})") from None
    try:
        return GwrNetwork.from_dict(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: {e}") from None
