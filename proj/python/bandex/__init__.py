"""Off-policy evaluation and learning under support-deficient logging."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import _bandex
from ._bandex import (
    BandexError,
    ContractError,
    CorruptDataError,
    DegenerateRestrictionError,
    InvalidPolicyError,
    StageError,
    augmented_bias,
    build_minsup,
    check_kappa,
)

__all__ = [
    "BandexError",
    "ContractError",
    "CorruptDataError",
    "DegenerateRestrictionError",
    "InvalidPolicyError",
    "StageError",
    "Dataset",
    "Problem",
    "augmented_bias",
    "augmented_ips",
    "build_minsup",
    "check_kappa",
    "dm",
    "dr",
    "exact_report",
    "generate",
    "ips",
    "minsup_estimate",
    "run_experiment",
    "verify",
]


@dataclass
class Problem:
    """Enumerated ground truth: context weights and the mean reward table."""

    context_weights: np.ndarray
    delta: np.ndarray
    r_min: float = 0.0
    r_max: float = 1.0


@dataclass
class Dataset:
    """Logged records indexed into a context table of size n_contexts."""

    ctx: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    propensity: np.ndarray
    n_contexts: int
    n_actions: int
    r_min: float = 0.0
    r_max: float = 1.0

    def _args(self) -> dict[str, Any]:
        return {
            "ctx": np.asarray(self.ctx, dtype=np.int64),
            "action": np.asarray(self.action, dtype=np.int64),
            "reward": np.asarray(self.reward, dtype=float),
            "propensity": np.asarray(self.propensity, dtype=float),
            "n_contexts": int(self.n_contexts),
            "n_actions": int(self.n_actions),
            "r_min": float(self.r_min),
            "r_max": float(self.r_max),
        }


def exact_report(problem: Problem, logging, target) -> dict[str, float]:
    """True value, enumerated IPS expectation, bias terms and support divergence."""
    return json.loads(
        _bandex.exact_report(
            list(problem.context_weights), problem.delta, logging, target, problem.r_min, problem.r_max
        )
    )


def generate(config: dict[str, Any] | None = None, n: int = 1000, reward_offset: float = 0.0):
    """Synthetic problem, tabulated logging policy and a logged dataset."""
    raw = _bandex.generate(json.dumps(config or {}), n, reward_offset)
    problem = Problem(np.asarray(raw["context_weights"]), raw["delta"], raw["r_min"], raw["r_max"])
    n_contexts, n_actions = raw["delta"].shape
    data = Dataset(
        raw["ctx"], raw["action"], raw["reward"], raw["propensity"], n_contexts, n_actions, raw["r_min"], raw["r_max"]
    )
    return problem, raw["logging"], data


def ips(data: Dataset, target) -> dict[str, Any]:
    return _bandex.ips(**data._args(), target=target)


def augmented_ips(data: Dataset, target, logging, reward_model, seed: int = 0) -> dict[str, Any]:
    return _bandex.augmented_ips(**data._args(), target=target, logging=logging, reward_model=reward_model, seed=seed)


def dr(data: Dataset, target, reward_model, logging) -> dict[str, Any]:
    return _bandex.dr(**data._args(), target=target, reward_model=reward_model, logging=logging)


def dm(data: Dataset, target, reward_model) -> float:
    return _bandex.dm(**data._args(), target=target, reward_model=reward_model)


def minsup_estimate(data: Dataset, target, logging, weight_bound: float = 100.0, holdout: bool = False) -> float:
    return _bandex.minsup_estimate(
        **data._args(), target=target, logging=logging, weight_bound=weight_bound, holdout=holdout
    )


def run_experiment(config: dict[str, Any]) -> dict[str, Any]:
    """Runs the seed/temperature protocol and returns the aggregate report."""
    return json.loads(_bandex.run_experiment(json.dumps(config)))


def verify(level: str = "fast", seed: int = 0) -> list[dict[str, Any]]:
    return [
        {"name": name, "passed": passed, "statistic": stat, "detail": detail}
        for name, passed, stat, detail in _bandex.verify(level, seed)
    ]
