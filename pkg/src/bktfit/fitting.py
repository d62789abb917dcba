"""Shared fitting plumbing: options, reports, and initial-guess sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import ConstraintReport, ParamSet

__all__ = [
    "ALGORITHM_BAUM_WELCH",
    "ALGORITHM_CONSTRAINED",
    "INIT_LOW",
    "INIT_HIGH",
    "FitOptions",
    "FitReport",
    "random_init",
]

ALGORITHM_BAUM_WELCH = "baum-welch"
ALGORITHM_CONSTRAINED = "constrained"

# Initial guesses stay away from the walls; the sampling range is a project
# choice, exposed here so the harness and CLI agree.
INIT_LOW = 0.05
INIT_HIGH = 0.95


@dataclass(frozen=True)
class FitOptions:
    """Stopping rules for the EM loops plus the initial-guess seed."""

    max_iterations: int = 500
    loglik_tolerance: float = 1e-8
    param_tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.loglik_tolerance > 0:
            raise ValueError("loglik_tolerance must be positive")
        if not self.param_tolerance > 0:
            raise ValueError("param_tolerance must be positive")

    def to_dict(self) -> dict[str, object]:
        return {
            "max_iterations": self.max_iterations,
            "loglik_tolerance": self.loglik_tolerance,
            "param_tolerance": self.param_tolerance,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, mapping: Mapping[str, object]) -> "FitOptions":
        known = {"max_iterations", "loglik_tolerance", "param_tolerance", "seed"}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown fit option keys: {', '.join(sorted(unknown))}")
        return cls(**{k: mapping[k] for k in known if k in mapping})  # type: ignore[arg-type]


@dataclass(frozen=True)
class FitReport:
    """Outcome of one EM fit: estimate, trace, and constraint verdicts."""

    algorithm: str
    theta_hat: ParamSet
    initial_theta: ParamSet
    loglik_trace: tuple[float, ...]
    iterations: int
    converged: bool
    constraints: ConstraintReport
    diagnostics: dict[str, object] = field(default_factory=dict)

    @property
    def final_log_likelihood(self) -> float:
        return self.loglik_trace[-1]

    def to_dict(self) -> dict[str, object]:
        return {
            "algorithm": self.algorithm,
            "theta_hat": self.theta_hat.to_dict(),
            "initial_theta": self.initial_theta.to_dict(),
            "loglik_trace": list(self.loglik_trace),
            "iterations": self.iterations,
            "converged": self.converged,
            "constraints": self.constraints.to_dict(),
            "diagnostics": self.diagnostics,
        }


def random_init(seed: int | Sequence[int]) -> ParamSet:
    """Sample an initial guess uniformly from (INIT_LOW, INIT_HIGH)^4."""

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    l0, g, s, r = rng.uniform(INIT_LOW, INIT_HIGH, 4)
    return ParamSet(l0=l0, g=g, s=s, r=r)
