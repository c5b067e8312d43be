"""Shared domain vocabulary: bounds, budgets, objectives, run records, seeded RNG."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ContractError(ValueError):
    """Raised when a caller violates a documented precondition."""


@dataclass
class Bounds:
    """Box constraints, one (lower, upper) pair per coordinate, in raw problem units."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ContractError("lower and upper must be 1-d arrays of the same length")
        if self.lower.size < 1:
            raise ContractError("bounds need at least one dimension")
        if not np.all(self.lower < self.upper):
            raise ContractError("every lower bound must lie strictly below its upper bound")

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def range(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def unit_bounds(dim: int) -> Bounds:
    """The normalized cube [0, 1]^dim in which all strategy arithmetic runs."""
    return Bounds(np.zeros(dim), np.ones(dim))


def normalize(x: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Map raw coordinates into [0, 1]^D. Accepts a vector or a stack of row vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != bounds.dim:
        raise ContractError(f"expected vectors of length {bounds.dim}, got {x.shape[-1]}")
    return (x - bounds.lower) / bounds.range


def denormalize(u: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Inverse of :func:`normalize`."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != bounds.dim:
        raise ContractError(f"expected vectors of length {bounds.dim}, got {u.shape[-1]}")
    return bounds.lower + u * bounds.range


@dataclass
class Budget:
    """Evaluation budget with an elapsed-fraction clock."""

    max_evals: int
    used_evals: int = 0

    def __post_init__(self) -> None:
        if self.max_evals < 1:
            raise ContractError("max_evals must be positive")
        if not 0 <= self.used_evals <= self.max_evals:
            raise ContractError("used_evals must lie in [0, max_evals]")

    @property
    def remaining(self) -> int:
        return self.max_evals - self.used_evals

    @property
    def fraction(self) -> float:
        return self.used_evals / self.max_evals

    def spend(self, n: int) -> None:
        if n < 0 or self.used_evals + n > self.max_evals:
            raise ContractError("budget overspend")
        self.used_evals += n


@dataclass
class Objective:
    """A deterministic, side-effect-free objective over a bounded box.

    ``fn`` maps a single raw-coordinate vector to a float.  ``batch_fn``, when
    provided, evaluates a stack of row vectors in one call and must agree with
    ``fn`` pointwise.  A declared optimum value must be strictly positive, as
    the relative-error metric divides by it.
    """

    fn: Callable[[np.ndarray], float]
    bounds: Bounds
    optimum_x: Optional[np.ndarray] = None
    optimum_f: Optional[float] = None
    batch_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.optimum_x is not None:
            self.optimum_x = np.asarray(self.optimum_x, dtype=float)
        if self.optimum_f is not None and not self.optimum_f > 0:
            raise ContractError("declared optimum value must be strictly positive")

    @property
    def dim(self) -> int:
        return self.bounds.dim

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.fn(np.asarray(x, dtype=float)))

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.batch_fn is not None:
            return np.asarray(self.batch_fn(xs), dtype=float)
        return np.array([self.fn(row) for row in xs], dtype=float)


@dataclass
class RunResult:
    """Best-so-far record of one seeded run.

    ``history`` holds improvement events as (cumulative evals, best f) pairs,
    plus one terminal entry at budget exhaustion.  ``restarts`` logs
    (eval index, converged mean) for every convergence-triggered restart.
    """

    best_x: Optional[np.ndarray] = None
    best_f: float = float("inf")
    evals_used: int = 0
    history: list = field(default_factory=list)
    restarts: list = field(default_factory=list)

    def record_improvement(self, evals: int, f: float, x: Optional[np.ndarray] = None) -> "RunResult":
        """Fold one evaluation into the incumbent; appends to history only on strict improvement."""
        if f < self.best_f:
            self.best_f = float(f)
            if x is not None:
                self.best_x = np.array(x, dtype=float)
            self.history.append((int(evals), float(f)))
        return self

    def record_batch(self, start_evals: int, fs: np.ndarray, xs: Optional[np.ndarray] = None) -> None:
        """Fold a generation evaluated at cumulative counts start_evals+1 .. start_evals+len(fs)."""
        fs = np.asarray(fs, dtype=float)
        running = np.minimum.accumulate(fs)
        prev = np.concatenate(([self.best_f], running[:-1]))
        improved = np.flatnonzero(running < prev)
        for i in improved:
            self.history.append((start_evals + int(i) + 1, float(fs[i])))
        if improved.size:
            last = improved[-1]
            self.best_f = float(fs[last])
            if xs is not None:
                self.best_x = np.array(xs[last], dtype=float)

    def log_restart(self, evals: int, converged_mean: np.ndarray) -> None:
        self.restarts.append((int(evals), np.array(converged_mean, dtype=float)))

    def finalize(self, evals: int) -> None:
        """Close the record at budget exhaustion with a terminal history entry."""
        self.evals_used = int(evals)
        if self.history and self.history[-1][0] < evals:
            self.history.append((int(evals), self.best_f))


class RngStream:
    """Deterministic per-run random stream.

    Identical seed plus identical call sequence yields identical output on
    every platform (PCG64).  Each run owns exactly one stream seeded by its
    run index.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed)
        self._gen = np.random.default_rng(self.seed)

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"
