"""Restart controller: population-size schedule, convergence-triggered restarts,
exclusion-aware restart means, and stochastic bound repair.

The main driver is :func:`run`.  It executes a nested loop: the outer loop
restarts the strategy at a fresh mean sampled uniformly inside the bounds but
outside all previously stored exclusion boxes; the inner loop steps the CMA
engine, resizing the population every generation from the elapsed budget
fraction, until the population's objective values collapse (relative spread
delta <= 1e-8) or the budget runs out.

Two plumbing baselines share the machinery for comparison campaigns: a
fixed-population restarter and an IPOP-style doubling restarter.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cma import CmaState, ask, default_params, population_spread, set_lambda, tell
from .core import Bounds, Budget, ContractError, Objective, RngStream, RunResult, denormalize, unit_bounds

log = logging.getLogger(__name__)

# Initial step size in normalized [0, 1]^D coordinates.
SIGMA0 = 0.3
# Exclusion boxes span 10% of each variable's range (half-width 5%).
EXCLUSION_HALF_WIDTH = 0.05
# Uniform redraws before giving up and accepting a mean inside an exclusion box.
MAX_REJECTIONS = 1000

POLICY_VARIANTS = ("rcmaes", "fixed", "ipop")
IPOP_CAP_FACTOR = 10


def initial_pop_size(dim: int, n_max: int) -> int:
    """Budget- and dimension-dependent initial offspring count.

    N0 = D * max(2, 10 * log10(N_max / D) - 20), rounded to the nearest
    integer.  Large budgets buy large initial populations; tight budgets fall
    back to the floor of 2 per dimension.
    """
    if dim < 1:
        raise ContractError("dimension must be >= 1")
    if n_max <= dim:
        raise ContractError("budget must exceed the problem dimension")
    eta = math.log10(n_max / dim)
    return int(round(dim * max(2.0, 10.0 * eta - 20.0)))


def reduction_exponent(dim: int) -> float:
    """Shrink-curve exponent 1.7 - 0.01 * D.

    Above 1 the population shrinks faster than linearly (low dimensions),
    exactly 1 at D = 70, and slower than linearly beyond.  Computed as
    (170 - D) / 100 so the advertised values are exact in floating point.
    """
    return (170.0 - dim) / 100.0


@dataclass
class PopulationSchedule:
    """Yields the offspring count for any elapsed budget fraction t in [0, 1]."""

    n0: int
    r: float
    dim: int
    n_max: int

    def __post_init__(self) -> None:
        if self.n0 < 2 or self.n0 < self.dim:
            raise ContractError("initial population must be >= max(2, dim)")
        if self.n_max < 1:
            raise ContractError("n_max must be positive")


def pop_size_at(s: PopulationSchedule, t: float) -> int:
    """Population size N0 - (N0 - D) * (1 - (1 - t)^r), floored, clamped to >= 2."""
    if not 0.0 <= t <= 1.0:
        raise ContractError("budget fraction t must lie in [0, 1]")
    raw = s.n0 - (s.n0 - s.dim) * (1.0 - (1.0 - t) ** s.r)
    n = math.floor(raw)
    n = max(n, min(s.dim, s.n0))
    return max(n, 2)


@dataclass
class ConvergenceTest:
    """Relative-spread collapse test: (f_max - f_min) / max(|f_mean|, eps) <= threshold."""

    threshold: float = 1e-8
    epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if not (self.threshold > 0 and self.epsilon > 0):
            raise ContractError("threshold and epsilon must be positive")

    def triggered(self, f_max: float, f_min: float, f_mean: float) -> bool:
        delta = (f_max - f_min) / max(abs(f_mean), self.epsilon)
        return delta <= self.threshold


@dataclass
class ExclusionSet:
    """Union of hyper-rectangles around previously converged means."""

    boxes: list = field(default_factory=list)

    def add(self, center: np.ndarray, bounds: Bounds) -> None:
        half = EXCLUSION_HALF_WIDTH * bounds.range
        lo = np.maximum(center - half, bounds.lower)
        hi = np.minimum(center + half, bounds.upper)
        self.boxes.append((lo, hi))

    def contains(self, x: np.ndarray) -> bool:
        return any(bool(np.all(x >= lo) and np.all(x <= hi)) for lo, hi in self.boxes)

    def __len__(self) -> int:
        return len(self.boxes)


def sample_restart_mean(bounds: Bounds, exclusion: ExclusionSet, rng: RngStream) -> np.ndarray:
    """Uniform draw over the bounds, rejected while inside any exclusion box.

    After MAX_REJECTIONS failed draws the last draw is returned unconditionally
    (and logged), so a box cover of the whole space cannot livelock the restart.
    """
    x = rng.uniform(bounds.lower, bounds.upper)
    for _ in range(MAX_REJECTIONS - 1):
        if not exclusion.contains(x):
            return x
        x = rng.uniform(bounds.lower, bounds.upper)
    if exclusion.contains(x):
        log.warning("restart mean rejection cap hit; accepting a mean inside an exclusion box")
    return x


def _repair_batch(xs: np.ndarray, bounds: Bounds, rng: RngStream) -> np.ndarray:
    """Vectorized stochastic repair of a stack of row vectors."""
    lo, hi, rng_width = bounds.lower, bounds.upper, bounds.range
    over = xs > hi
    under = xs < lo
    if not (over.any() or under.any()):
        return xs
    out = xs.copy()
    if over.any():
        rows, cols = np.nonzero(over)
        v = np.minimum(xs[rows, cols] - hi[cols], rng_width[cols])
        out[rows, cols] = rng.uniform(hi[cols] - v, hi[cols])
    if under.any():
        rows, cols = np.nonzero(under)
        v = np.minimum(lo[cols] - xs[rows, cols], rng_width[cols])
        out[rows, cols] = rng.uniform(lo[cols], lo[cols] + v)
    return out


def repair_bounds(x: np.ndarray, bounds: Bounds, rng: RngStream) -> np.ndarray:
    """Re-sample each violated coordinate uniformly in a truncated strip at the
    violated boundary, strip width capped by the violation magnitude.
    In-bounds coordinates are untouched."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != bounds.dim:
        raise ContractError(f"expected vectors of length {bounds.dim}")
    if x.ndim == 1:
        return _repair_batch(x[None, :], bounds, rng)[0]
    return _repair_batch(x, bounds, rng)


@dataclass
class RestartPolicy:
    """Which population rule drives the restart loop.

    variant "rcmaes": nonlinear schedule with exclusion-aware restart means.
    variant "fixed":  constant population N0, plain uniform restarts.
    variant "ipop":   population doubles per restart (capped at 10 * N0),
                      plain uniform restarts.
    """

    variant: str = "rcmaes"
    active: bool = True

    def __post_init__(self) -> None:
        if self.variant not in POLICY_VARIANTS:
            raise ContractError(f"unknown policy variant {self.variant!r}")

    @property
    def name(self) -> str:
        return f"{self.variant}-{'active' if self.active else 'standard'}"


def _target_lambda(policy: RestartPolicy, schedule: PopulationSchedule, t: float, restarts: int) -> int:
    if policy.variant == "rcmaes":
        return pop_size_at(schedule, t)
    if policy.variant == "fixed":
        return schedule.n0
    return min(schedule.n0 * 2**restarts, IPOP_CAP_FACTOR * schedule.n0)


def run(objective: Objective, budget: Budget, policy: RestartPolicy, rng: RngStream) -> RunResult:
    """Optimize a bounded objective under an evaluation budget.

    The strategy operates in normalized [0, 1]^D coordinates; candidates are
    repaired into the cube, denormalized, and evaluated in raw units.  The
    final partial generation is truncated so the budget is never exceeded;
    a single leftover evaluation only updates the incumbent.
    """
    dim = objective.dim
    n_max = budget.max_evals - budget.used_evals
    if n_max <= dim:
        raise ContractError("budget must exceed the problem dimension")

    n0 = initial_pop_size(dim, n_max)
    schedule = PopulationSchedule(n0=n0, r=reduction_exponent(dim), dim=dim, n_max=n_max)
    cube = unit_bounds(dim)
    conv = ConvergenceTest()
    exclusion = ExclusionSet()
    track_exclusion = policy.variant == "rcmaes"

    result = RunResult()
    evals = 0
    restarts = 0

    while evals < n_max:
        mean0 = sample_restart_mean(cube, exclusion if track_exclusion else ExclusionSet(), rng)
        state = CmaState.fresh(mean0, SIGMA0)
        params = default_params(dim, _target_lambda(policy, schedule, evals / n_max, restarts), policy.active)

        while evals < n_max:
            lam = min(_target_lambda(policy, schedule, evals / n_max, restarts), n_max - evals)
            if lam < 2:
                # Last evaluation of the budget: sample, repair, track the incumbent.
                gen = ask(state, set_lambda(state, params, 2), rng)
                xs = _repair_batch(gen.offspring[:1], cube, rng)
                raw = denormalize(xs, objective.bounds)
                fs = objective.evaluate_many(raw)
                result.record_batch(evals, fs, raw)
                evals += 1
                break
            if lam != params.lam:
                params = set_lambda(state, params, lam)

            gen = ask(state, params, rng)
            gen.offspring = _repair_batch(gen.offspring, cube, rng)
            raw = denormalize(gen.offspring, objective.bounds)
            fs = objective.evaluate_many(raw)
            result.record_batch(evals, fs, raw)
            evals += lam
            gen.fitnesses = fs
            tell(state, params, gen)

            f_max, f_min, f_mean = population_spread(fs)
            if conv.triggered(f_max, f_min, f_mean):
                converged = np.clip(state.mean, cube.lower, cube.upper)
                if track_exclusion:
                    exclusion.add(converged, cube)
                result.log_restart(evals, denormalize(converged, objective.bounds))
                restarts += 1
                break

    budget.spend(evals)
    result.finalize(evals)
    return result
