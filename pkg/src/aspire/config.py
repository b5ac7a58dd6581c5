"""Experiment configuration documents (YAML or JSON).

The key set is fixed; unknown keys are rejected so that a misspelt
parameter cannot silently fall back to a default. See ``configs/`` in the
repository for complete examples.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import InputError
from .game import Game, game_from_dict
from .games import (
    CommonPoolSpec,
    NetworkSpec,
    common_pool,
    network_formation,
    payoff_dominant_networks,
    stag_hunt,
    successful_set,
)
from .learning import LearnerState, Params

CONFIG_VERSION = 1

SCHEMA = {
    "version": None,
    "game": {
        "type", "players", "costs", "taus", "levels", "strict_chain", "nodes", "neighborhoods",
        "c_link", "budget", "file", "action_counts", "payoffs", "labels", "desirable",
    },
    "params": {"epsilon", "lambda", "zeta", "c_phi", "h", "rho_lo", "rho_hi"},
    "run": {"horizon", "seed", "initial", "window_last", "stride", "backend"},
    "analysis": {"samples_per_row", "max_steps", "fw_check", "verify", "search_budget", "workers"},
    "output": {"directory", "formats"},
    "sweep": {"parameter", "values", "command"},
}

GAME_TYPES = ("stag_hunt", "common_pool", "network_formation", "table")
VERIFY_CHECKS = ("coordination", "symmetry", "constants", "partition")
SWEEPABLE = {"epsilon", "lambda", "zeta"}

DEFAULTS = {
    "run": {"initial": "pure:0", "stride": 1000, "window_last": None, "backend": None},
    "analysis": {
        "samples_per_row": 1000, "max_steps": 10**7, "fw_check": False,
        "verify": list(VERIFY_CHECKS), "search_budget": 10**7, "workers": 1,
    },
    "output": {"directory": "out", "formats": ["csv", "json"]},
}


def load(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InputError(f"config {path} is not valid YAML/JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must be a mapping")
    doc.setdefault("_base", str(path.parent))
    return doc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as YAML scalars."""
    doc = copy.deepcopy(doc)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or "." not in key:
            raise InputError(f"override {item!r} must look like section.key=value")
        section, name = key.split(".", 1)
        doc.setdefault(section, {})
        if not isinstance(doc[section], dict):
            raise InputError(f"cannot override inside non-mapping section {section!r}")
        doc[section][name] = yaml.safe_load(raw)
    return doc


def validate(doc: dict) -> dict:
    """Check keys and fill defaults; returns a normalized copy."""
    doc = copy.deepcopy(doc)
    base = doc.pop("_base", ".")
    unknown = set(doc) - set(SCHEMA)
    if unknown:
        raise InputError(f"unknown config sections: {sorted(unknown)}")
    if doc.get("version") != CONFIG_VERSION:
        raise InputError(f"config 'version' must be {CONFIG_VERSION}")
    for section, keys in SCHEMA.items():
        if keys is None or section not in doc:
            continue
        if not isinstance(doc[section], dict):
            raise InputError(f"config section {section!r} must be a mapping")
        bad = set(doc[section]) - keys
        if bad:
            raise InputError(f"unknown keys in {section!r}: {sorted(bad)}")
    if "game" not in doc or "type" not in doc["game"]:
        raise InputError("config needs game.type")
    if doc["game"]["type"] not in GAME_TYPES:
        raise InputError(f"game.type must be one of {GAME_TYPES}")
    for section, defaults in DEFAULTS.items():
        merged = dict(defaults)
        merged.update(doc.get(section) or {})
        doc[section] = merged
    bad_checks = set(doc["analysis"]["verify"]) - set(VERIFY_CHECKS)
    if bad_checks:
        raise InputError(f"unknown verify checks: {sorted(bad_checks)}")
    if "sweep" in doc:
        sw = doc["sweep"]
        if sw.get("parameter") not in SWEEPABLE:
            raise InputError(f"sweep.parameter must be one of {sorted(SWEEPABLE)}")
        if not isinstance(sw.get("values"), list) or not sw["values"]:
            raise InputError("sweep.values must be a non-empty list")
        if sw.setdefault("command", "phat") not in ("phat", "simulate"):
            raise InputError("sweep.command must be 'phat' or 'simulate'")
    if "file" in doc["game"]:
        doc["game"]["file"] = str(Path(base) / doc["game"]["file"])
    return doc


def config_hash(doc: dict) -> str:
    """Digest of the experiment definition; the output block is excluded."""
    core = {k: v for k, v in doc.items() if k != "output"}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def build_game(block: dict) -> Game:
    kind = block["type"]
    try:
        if kind == "stag_hunt":
            return stag_hunt()
        if kind == "common_pool":
            spec = CommonPoolSpec(int(block.get("players", 2)), block["costs"], block["taus"], block.get("levels"))
            return common_pool(spec, strict_chain=bool(block.get("strict_chain", False)))
        if kind == "network_formation":
            c_link = float(block["c_link"])
            hoods = block.get("neighborhoods", "complete")
            budget = int(block.get("budget", 2**20))
            if hoods in ("ring", "complete"):
                n = int(block["nodes"])
                spec = NetworkSpec.ring(n, c_link) if hoods == "ring" else NetworkSpec.complete(n, c_link)
            elif isinstance(hoods, str):
                spec = NetworkSpec.parse(hoods, c_link)
            else:
                spec = NetworkSpec(len(hoods), hoods, c_link)
            return network_formation(spec, budget=budget)
        if "file" in block:
            return game_from_dict(load_game_file(block["file"]))
        doc = {k: block[k] for k in ("players", "action_counts", "payoffs", "labels") if k in block}
        doc["version"] = 1
        return game_from_dict(doc)
    except KeyError as exc:
        raise InputError(f"game block for {kind!r} is missing {exc.args[0]!r}") from None


def load_game_file(path: str | Path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise InputError(f"cannot read game file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"game file {path} must be a mapping")
    return doc


def _parse_profile(game: Game, text) -> tuple:
    if isinstance(text, (list, tuple)):
        parts = [str(x) for x in text]
    else:
        parts = [x.strip() for x in str(text).split(",") if x.strip()]
    if len(parts) == 1 and game.n > 1:
        parts = parts * game.n
    out = []
    for i, p in enumerate(parts[: game.n]):
        if p in game.labels[i]:
            out.append(game.labels[i].index(p))
        else:
            try:
                out.append(int(p))
            except ValueError:
                raise InputError(f"unknown action {p!r} for player {i}") from None
    return game.check(out)


def desirable_set(game: Game, block: dict) -> frozenset:
    spec = block.get("desirable", "default")
    if spec == "default":
        if block["type"] == "stag_hunt":
            return frozenset({(0, 0)})
        if block["type"] == "common_pool":
            return successful_set(game)
        return payoff_dominant_networks(game)
    if spec == "successful":
        return successful_set(game)
    if spec == "dominant":
        return payoff_dominant_networks(game)
    return frozenset(_parse_profile(game, a) for a in spec)


def build_params(game: Game, block: dict, required=("epsilon", "lambda", "zeta", "c_phi", "h")) -> Params:
    missing = [k for k in required if k not in block]
    if missing:
        raise InputError(f"params block is missing {missing}")
    return Params.for_game(
        game,
        epsilon=float(block["epsilon"]),
        lam=float(block["lambda"]),
        zeta=float(block["zeta"]),
        c_phi=float(block["c_phi"]),
        h=float(block["h"]),
        rho_lo=block.get("rho_lo"),
        rho_hi=block.get("rho_hi"),
    )


def initial_state(game: Game, spec, seed: int) -> LearnerState:
    import numpy as np

    spec = str(spec)
    if spec == "random":
        return LearnerState.random(game, np.random.Generator(np.random.PCG64(seed)))
    if spec.startswith("pure:"):
        return LearnerState.pure(game, _parse_profile(game, spec[5:]))
    raise InputError(f"run.initial must be 'random' or 'pure:<joint action>', got {spec!r}")


@dataclass
class Experiment:
    doc: dict
    game: Game
    abar: frozenset
    digest: str

    @classmethod
    def from_doc(cls, doc: dict) -> "Experiment":
        doc = validate(doc)
        game = build_game(doc["game"])
        return cls(doc, game, desirable_set(game, doc["game"]), config_hash(doc))

    def params(self) -> Params:
        return build_params(self.game, self.doc.get("params") or {})

    def seed(self) -> int:
        seed = self.doc["run"].get("seed") if "run" in self.doc else None
        if seed is None:
            raise InputError("run.seed is required for stochastic commands")
        return int(seed)
