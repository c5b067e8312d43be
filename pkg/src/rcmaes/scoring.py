"""Rank- and accuracy-based comparison of optimizer results.

Given a fully populated tensor of final objective values indexed by
(algorithm, problem, run) this module computes Friedman average ranks with
tie averaging, pairwise Mann-Whitney U win/tie/loss decisions at a fixed
significance level, mean relative errors with the bounded eps/(1+eps)
transform, and an aggregated comparison table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import ContractError

# Exact permutation enumeration is used up to this per-sample size; beyond it
# the normal approximation with tie and continuity corrections takes over.
EXACT_MAX_N = 8


@dataclass
class ResultMatrix:
    """Final objective values, tensor of shape (algorithms, problems, runs)."""

    algorithms: list
    problems: list
    finals: np.ndarray

    def __post_init__(self) -> None:
        self.finals = np.asarray(self.finals, dtype=float)
        k, p, r = len(self.algorithms), len(self.problems), -1
        if self.finals.ndim != 3 or self.finals.shape[:2] != (k, p):
            raise ContractError("finals must have shape (n_algorithms, n_problems, n_runs)")
        if self.finals.shape[2] < 1:
            raise ContractError("at least one run per cell is required")
        if not np.all(np.isfinite(self.finals)):
            raise ContractError("finals must be fully populated with finite values")

    @property
    def n_runs(self) -> int:
        return int(self.finals.shape[2])

    def index_of(self, algorithm: str) -> int:
        try:
            return self.algorithms.index(algorithm)
        except ValueError:
            raise ContractError(f"unknown algorithm {algorithm!r}") from None


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ascending ranks; tied values share the average of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass
class RankTable:
    """Per-cell ranks and the per-algorithm Friedman score (mean rank; lower is better)."""

    algorithms: list
    ranks: np.ndarray        # (algorithms, problems, runs)
    scores: np.ndarray       # (algorithms,)


def friedman(m: ResultMatrix) -> RankTable:
    """Rank algorithms per (problem, run) cell with tie averaging; average everything."""
    if len(m.algorithms) < 2:
        raise ContractError("Friedman ranking needs at least two algorithms")
    k, p, r = m.finals.shape
    ranks = np.empty((k, p, r))
    for j in range(p):
        for i in range(r):
            ranks[:, j, i] = average_ranks(m.finals[:, j, i])
    return RankTable(algorithms=list(m.algorithms), ranks=ranks,
                     scores=ranks.reshape(k, -1).mean(axis=1))


@dataclass
class MwuResult:
    u: float                 # U statistic of the first sample
    p: float                 # two-sided p-value
    decision: str            # "x-wins" | "tie" | "y-wins"


@lru_cache(maxsize=64)
def _subset_indices(total: int, take: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(total), take)), dtype=np.intp)


def _exact_two_sided_p(ranks: np.ndarray, n: int, u_obs: float) -> float:
    m_ = ranks.size - n
    center = n * m_ / 2.0
    subsets = _subset_indices(ranks.size, n)
    all_u = ranks[subsets].sum(axis=1) - n * (n + 1) / 2.0
    return float(np.mean(np.abs(all_u - center) >= abs(u_obs - center) - 1e-9))


def mann_whitney(x, y, alpha: float = 0.05, method: str = "auto") -> MwuResult:
    """Two-sided Mann-Whitney U test with a directional win/tie/loss decision.

    Samples up to size 8 are tested by exact permutation enumeration (which
    doubles as the oracle for the approximate path); larger samples use the
    normal approximation with tie and continuity corrections.  When the test
    is significant, the sample with the smaller rank sum wins, smaller
    objective values being better.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m_ = x.size, y.size
    if n == 0 or m_ == 0:
        raise ContractError("both samples must be non-empty")
    if method not in ("auto", "exact", "approx"):
        raise ContractError(f"unknown method {method!r}")

    pooled = np.concatenate([x, y])
    ranks = average_ranks(pooled)
    r_x = float(ranks[:n].sum())
    u_x = r_x - n * (n + 1) / 2.0

    exact = method == "exact" or (method == "auto" and n <= EXACT_MAX_N and m_ <= EXACT_MAX_N)
    if exact:
        p = _exact_two_sided_p(ranks, n, u_x)
    else:
        total = n + m_
        _, counts = np.unique(pooled, return_counts=True)
        tie_term = float((counts**3 - counts).sum()) / (total * (total - 1))
        var = n * m_ / 12.0 * ((total + 1) - tie_term)
        if var <= 0.0:
            p = 1.0
        else:
            z = max(abs(u_x - n * m_ / 2.0) - 0.5, 0.0) / math.sqrt(var)
            p = math.erfc(z / math.sqrt(2.0))
    p = min(p, 1.0)

    if p > alpha:
        decision = "tie"
    else:
        # equal mean ranks would give u_x == n*m/2 and hence p == 1, so a
        # significant result always has a direction
        decision = "x-wins" if r_x / n < (ranks[n:].sum()) / m_ else "y-wins"
    return MwuResult(u=u_x, p=p, decision=decision)


@dataclass
class WtlRecord:
    """Win/tie/loss counts of the subject against one opponent, with per-problem detail."""

    opponent: str
    wins: int = 0
    ties: int = 0
    losses: int = 0
    per_problem: list = field(default_factory=list)   # (problem, U, p, decision)

    def as_string(self) -> str:
        return f"{self.wins}/{self.ties}/{self.losses}"


def wtl(m: ResultMatrix, subject: str, alpha: float = 0.05) -> list[WtlRecord]:
    """Pairwise Mann-Whitney decisions of the subject against every other algorithm."""
    si = m.index_of(subject)
    records = []
    for oi, opponent in enumerate(m.algorithms):
        if oi == si:
            continue
        rec = WtlRecord(opponent=opponent)
        for pj, problem in enumerate(m.problems):
            res = mann_whitney(m.finals[si, pj], m.finals[oi, pj], alpha=alpha)
            if res.decision == "x-wins":
                rec.wins += 1
            elif res.decision == "y-wins":
                rec.losses += 1
            else:
                rec.ties += 1
            rec.per_problem.append((problem, res.u, res.p, res.decision))
        records.append(rec)
    return records


@dataclass
class AccuracyTable:
    """Mean relative errors and their bounded transform E = eps / (1 + eps) in [0, 1)."""

    algorithms: list
    problems: list
    epsilon: np.ndarray      # (algorithms, problems)
    bounded: np.ndarray      # (algorithms, problems)
    scores: np.ndarray       # (algorithms,) mean bounded error over problems


# Finals this far below the known optimum are treated as round-off and clamped.
ROUNDOFF_TOLERANCE = 1e-9


def accuracy(m: ResultMatrix, optima) -> AccuracyTable:
    """Per-problem mean relative error (f - f*) / f* and its bounded transform."""
    optima = np.asarray(optima, dtype=float)
    if optima.shape != (len(m.problems),):
        raise ContractError("need one optimum per problem")
    if not np.all(optima > 0):
        raise ContractError("relative error requires strictly positive optima")
    finals = m.finals.copy()
    for j, fstar in enumerate(optima):
        cell = finals[:, j, :]
        low = cell < fstar
        if np.any(cell < fstar - ROUNDOFF_TOLERANCE):
            raise ContractError(f"finals below the optimum of {m.problems[j]} by more than round-off")
        cell[low] = fstar
    eps = (finals - optima[None, :, None]) / optima[None, :, None]
    eps = eps.mean(axis=2)
    bounded = eps / (1.0 + eps)
    return AccuracyTable(algorithms=list(m.algorithms), problems=list(m.problems),
                         epsilon=eps, bounded=bounded, scores=bounded.mean(axis=1))


@dataclass
class ComparisonRow:
    algorithm: str
    accuracy: float
    accuracy_rank: float
    friedman: float
    friedman_rank: float
    wtl: str


@dataclass
class ComparisonTable:
    rows: list

    def to_text(self) -> str:
        header = f"{'algorithm':<24} {'E':>9} {'(rank)':>7} {'R':>9} {'(rank)':>7} {'W/T/L':>9}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(
                f"{row.algorithm:<24} {row.accuracy:>9.3f} {row.accuracy_rank:>7.1f} "
                f"{row.friedman:>9.3f} {row.friedman_rank:>7.1f} {row.wtl:>9}"
            )
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "algorithm": r.algorithm,
                    "accuracy": r.accuracy,
                    "accuracy_rank": r.accuracy_rank,
                    "friedman": r.friedman,
                    "friedman_rank": r.friedman_rank,
                    "wtl": r.wtl,
                }
                for r in self.rows
            ]
        }


def rank_report(rank: RankTable, acc: AccuracyTable, wtl_records: list) -> ComparisonTable:
    """Merge Friedman scores, bounded accuracy, and W/T/L strings; sort by Friedman score.

    The W/T/L column reads as subject-vs-row; the subject's own row shows "--".
    """
    if rank.algorithms != acc.algorithms:
        raise ContractError("rank and accuracy tables cover different algorithms")
    opponents = {rec.opponent: rec for rec in wtl_records}
    subjects = [a for a in rank.algorithms if a not in opponents]
    subject = subjects[0] if len(subjects) == 1 else None
    e_ranks = average_ranks(acc.scores)
    r_ranks = average_ranks(rank.scores)
    rows = []
    for i, name in enumerate(rank.algorithms):
        if name in opponents:
            wtl_str = opponents[name].as_string()
        else:
            wtl_str = "--" if name == subject else ""
        rows.append(ComparisonRow(
            algorithm=name,
            accuracy=float(acc.scores[i]), accuracy_rank=float(e_ranks[i]),
            friedman=float(rank.scores[i]), friedman_rank=float(r_ranks[i]),
            wtl=wtl_str,
        ))
    rows.sort(key=lambda r: (r.friedman, r.algorithm))
    return ComparisonTable(rows=rows)
