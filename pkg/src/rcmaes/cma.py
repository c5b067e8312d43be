"""Generation-stepped CMA-ES engine with standard and active covariance updates.

One instance advances through ask/tell cycles: ask samples lambda offspring
from N(m, sigma^2 C), tell re-estimates m by weighted recombination, adapts
sigma through cumulative step-size adaptation, and updates C with rank-one
plus rank-mu terms.  In active mode the worst offspring additionally shrink
variance along their directions via negative weights.  The offspring count
may be changed between generations with set_lambda; the search state (mean,
step size, covariance, evolution paths) survives the resize.

All coordinates are in the normalized cube [0, 1]^D; callers denormalize
before evaluating objectives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ContractError, RngStream
from .linalg import EigenDecomp, NumericalError, enforce_symmetry, mvn_sample_batch, sym_eigen


@dataclass(eq=False)
class CmaParams:
    """Strategy constants derived from (dimension, lambda); recomputed on every resize."""

    lam: int
    mu: int
    weights_pos: np.ndarray   # mu positive weights, non-increasing, sum 1
    weights_neg: np.ndarray   # lambda - mu non-positive weights, abs-sum 1 (or all zero)
    mu_eff: float
    c1: float
    c_mu: float               # rank-mu rate for the positive term
    c_mu_neg: float           # rank-mu rate for the negative (active) term; 0 in standard mode
    c_sigma: float
    d_sigma: float
    c_c: float
    chi_n: float              # E||N(0, I_D)||
    active: bool

    def field_equal(self, other: "CmaParams") -> bool:
        for name in ("lam", "mu", "mu_eff", "c1", "c_mu", "c_mu_neg",
                     "c_sigma", "d_sigma", "c_c", "chi_n", "active"):
            if getattr(self, name) != getattr(other, name):
                return False
        return (np.array_equal(self.weights_pos, other.weights_pos)
                and np.array_equal(self.weights_neg, other.weights_neg))


def default_params(dim: int, lam: int, active: bool = True) -> CmaParams:
    """Standard CMA-ES strategy constants for the given dimension and offspring count.

    Weights follow the log-rank recipe w_i proportional to ln((lambda+1)/2) - ln i.
    Active mode scales the negative tail by the usual alpha bound so that the
    covariance update cannot lose positive definiteness faster than the
    eigenvalue floor can absorb.
    """
    if dim < 1:
        raise ContractError("dimension must be >= 1")
    if lam < 2:
        raise ContractError("lambda must be >= 2")
    mu = lam // 2
    ranks = np.arange(1, lam + 1, dtype=float)
    raw = math.log((lam + 1) / 2.0) - np.log(ranks)
    pos = raw[:mu]
    weights_pos = pos / pos.sum()
    mu_eff = float(pos.sum() ** 2 / (pos**2).sum())

    c_sigma = (mu_eff + 2.0) / (dim + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (dim + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / dim) / (dim + 4.0 + 2.0 * mu_eff / dim)
    c1 = 2.0 / ((dim + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((dim + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim**2))

    weights_neg = np.zeros(lam - mu)
    c_mu_neg = 0.0
    if active:
        neg = raw[mu:]
        abs_sum = float(np.abs(neg).sum())
        if c_mu > 0.0 and abs_sum > 0.0:
            mu_eff_neg = float(neg.sum() ** 2 / (neg**2).sum())
            alpha = min(
                1.0 + c1 / c_mu,
                1.0 + 2.0 * mu_eff_neg / (mu_eff + 2.0),
                (1.0 - c1 - c_mu) / (dim * c_mu),
            )
            alpha = max(alpha, 0.0)
            weights_neg = neg / abs_sum
            c_mu_neg = c_mu * alpha

    return CmaParams(
        lam=lam, mu=mu, weights_pos=weights_pos, weights_neg=weights_neg,
        mu_eff=mu_eff, c1=c1, c_mu=c_mu, c_mu_neg=c_mu_neg,
        c_sigma=c_sigma, d_sigma=d_sigma, c_c=c_c, chi_n=chi_n, active=active,
    )


@dataclass(eq=False)
class CmaState:
    """Mutable strategy state: mean, step size, covariance, evolution paths."""

    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_c: np.ndarray
    p_sigma: np.ndarray
    generation: int = 0
    _eigen: Optional[EigenDecomp] = field(default=None, repr=False)
    _eigen_stale: bool = field(default=True, repr=False)

    @classmethod
    def fresh(cls, mean: np.ndarray, sigma: float) -> "CmaState":
        mean = np.asarray(mean, dtype=float)
        d = mean.size
        return cls(mean=mean.copy(), sigma=float(sigma), cov=np.eye(d),
                   p_c=np.zeros(d), p_sigma=np.zeros(d))

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    def eigen(self) -> EigenDecomp:
        """Decomposition of the current covariance, recomputed lazily (at most once per generation)."""
        if self._eigen_stale or self._eigen is None:
            self._eigen = sym_eigen(self.cov)
            self._eigen_stale = False
        return self._eigen

    def clone(self) -> "CmaState":
        return CmaState(mean=self.mean.copy(), sigma=self.sigma, cov=self.cov.copy(),
                        p_c=self.p_c.copy(), p_sigma=self.p_sigma.copy(),
                        generation=self.generation)


@dataclass(eq=False)
class Generation:
    """Offspring of one ask call, with fitnesses filled in by the caller before tell."""

    offspring: np.ndarray          # (lambda, D) rows
    mean_at_sampling: np.ndarray
    sigma_at_sampling: float
    fitnesses: Optional[np.ndarray] = None

    @property
    def displacements(self) -> np.ndarray:
        """y_k = (x_k - m) / sigma rows, consistent with any in-place offspring repair."""
        return (self.offspring - self.mean_at_sampling) / self.sigma_at_sampling

    @property
    def sorted_index(self) -> np.ndarray:
        """Ascending fitness order; ties break by sample index for determinism."""
        if self.fitnesses is None:
            raise ContractError("fitnesses not set")
        return np.argsort(self.fitnesses, kind="stable")


def ask(state: CmaState, params: CmaParams, rng: RngStream) -> Generation:
    """Sample lambda offspring from N(m, sigma^2 C)."""
    eig = state.eigen()
    xs = mvn_sample_batch(state.mean, state.sigma, eig, params.lam, rng)
    return Generation(offspring=xs, mean_at_sampling=state.mean.copy(),
                      sigma_at_sampling=state.sigma)


def tell(state: CmaState, params: CmaParams, gen: Generation) -> CmaState:
    """Consume an evaluated generation: recombine the mean, adapt sigma and C.

    Update order: sort by fitness, weighted mean recombination, evolution-path
    cumulation (with the h_sigma stall indicator), multiplicative step-size
    update, then the rank-one / rank-mu covariance update (active variant when
    negative weights are present).  The covariance is re-symmetrized and the
    eigen cache invalidated.
    """
    if gen.fitnesses is None:
        raise ContractError("generation has no fitnesses")
    fs = np.asarray(gen.fitnesses, dtype=float)
    if fs.size != params.lam:
        raise ContractError(f"expected {params.lam} fitnesses, got {fs.size}")
    if not np.all(np.isfinite(fs)):
        raise ContractError("fitnesses must be finite")

    d = state.dim
    mu = params.mu
    order = np.argsort(fs, kind="stable")
    xs = gen.offspring[order]
    ys = (xs - state.mean) / state.sigma

    old_mean = state.mean
    new_mean = params.weights_pos @ xs[:mu]

    # Step-size path uses C^{-1/2} of the pre-update covariance.
    eig = state.eigen()
    delta = (new_mean - old_mean) / state.sigma
    cs, ds = params.c_sigma, params.d_sigma
    state.p_sigma = (1.0 - cs) * state.p_sigma + math.sqrt(cs * (2.0 - cs) * params.mu_eff) * (eig.inv_sqrt() @ delta)

    gen_count = state.generation + 1
    p_sigma_norm = float(np.linalg.norm(state.p_sigma))
    denom = 1.0 - (1.0 - cs) ** (2 * gen_count)
    h_sigma = 1.0 if p_sigma_norm**2 / max(denom, 1e-300) / d < 2.0 + 4.0 / (d + 1.0) else 0.0

    cc = params.c_c
    state.p_c = (1.0 - cc) * state.p_c + h_sigma * math.sqrt(cc * (2.0 - cc) * params.mu_eff) * delta

    new_sigma = state.sigma * math.exp((cs / ds) * (p_sigma_norm / params.chi_n - 1.0))
    if not (np.isfinite(new_sigma) and new_sigma > 0.0):
        raise NumericalError(f"step size degenerated to {new_sigma}")
    state.sigma = new_sigma

    # Rank-one term carries the usual variance-loss correction when h_sigma stalls.
    rank1 = np.outer(state.p_c, state.p_c) + (1.0 - h_sigma) * cc * (2.0 - cc) * state.cov
    pos = (ys[:mu].T * params.weights_pos) @ ys[:mu]
    c1, cm, cmn = params.c1, params.c_mu, params.c_mu_neg
    if cmn > 0.0:
        neg = (ys[mu:].T * np.abs(params.weights_neg)) @ ys[mu:]
        cov = (1.0 - c1 - cm - cmn) * state.cov + c1 * rank1 + cm * pos - cmn * neg
    else:
        cov = (1.0 - c1 - cm) * state.cov + c1 * rank1 + cm * pos
    state.cov = enforce_symmetry(cov)

    state.mean = np.asarray(new_mean, dtype=float)
    state.generation += 1
    state._eigen_stale = True
    return state


def set_lambda(state: CmaState, params: CmaParams, new_lambda: int) -> CmaParams:
    """Recompute strategy constants for a new offspring count; state is untouched."""
    if new_lambda < 2:
        raise ContractError("lambda must be >= 2")
    return default_params(state.dim, new_lambda, params.active)


def population_spread(fitnesses) -> tuple[float, float, float]:
    """(max, min, mean) of the current population's objective values."""
    fs = np.asarray(fitnesses, dtype=float)
    if fs.size == 0:
        raise ContractError("empty fitness list")
    if not np.all(np.isfinite(fs)):
        raise ContractError("fitnesses must be finite")
    return float(fs.max()), float(fs.min()), float(fs.mean())
