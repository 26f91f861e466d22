"""Run configuration, profiles and config-file loading."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from .diversity import DEFAULT_PROJECTION_DIM, DEFAULT_PROJECTION_SEED, FEATURE_KINDS
from .quality import STRATEGIES

# Desk-scale profile: finishes a full sweep in minutes.
TOY_PROFILE = {
    "n_seed_sentences": 16,
    "sentence_stage_token_budget": 250,
    "token_budget_per_round": 50,
    "rounds": 8,
}
# Protocol-scale profile (seed 128, budgets 2500/500, 32 rounds).
FULL_PROFILE = {
    "n_seed_sentences": 128,
    "sentence_stage_token_budget": 2500,
    "token_budget_per_round": 500,
    "rounds": 32,
}
PROFILES = {"toy": TOY_PROFILE, "full": FULL_PROFILE}


@dataclass(frozen=True)
class RunConfig:
    corpus: str
    test_corpus: str | None = None
    fold: int = 1
    strategy: str = "AMP"
    use_dpp: bool = False
    diversity_kind: str = "SUBGRAPH"
    n_seed_sentences: int = 128
    sentence_stage_token_budget: int = 2500
    token_budget_per_round: int = 500
    rounds: int = 32
    k_bald: int = 5
    p_drop: float = 0.33
    seed: int = 1
    learning_rate: float = 0.1
    epochs: int = 30
    hash_dim: int = 2**20
    projection_dim: int = DEFAULT_PROJECTION_DIM
    projection_seed: int = DEFAULT_PROJECTION_SEED
    single_root: bool = False
    candidate_cap: int = 5000
    save_models: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.diversity_kind not in FEATURE_KINDS:
            raise ValueError(f"diversity_kind must be one of {FEATURE_KINDS}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.token_budget_per_round > self.sentence_stage_token_budget:
            raise ValueError("token budget per round cannot exceed the sentence-stage budget")
        if self.fold < 1:
            raise ValueError("fold must be >= 1")

    def with_overrides(self, **kwargs: Any) -> "RunConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    """Build a RunConfig from a plain mapping; a ``profile`` key applies presets."""
    data = dict(data)
    profile = data.pop("profile", None)
    merged: dict[str, Any] = {}
    if profile is not None:
        try:
            merged.update(PROFILES[profile])
        except KeyError:
            raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}") from None
    merged.update(data)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged)


def load_config(path: str | Path) -> RunConfig:
    """Load a RunConfig from a TOML or JSON file (by extension)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
    elif path.suffix.lower() == ".toml":
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    else:
        raise ValueError(f"config file must be .toml or .json, got {path.suffix!r}")
    return config_from_mapping(data)
