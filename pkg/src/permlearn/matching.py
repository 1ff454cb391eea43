"""Maximum-weight perfect matching on square score matrices.

Entry (k, b) of a weight matrix scores assigning class k to region b; a
permutation is a perfect matching of classes to regions. The solver runs as
a min-cost assignment on negated weights, so tie tolerances below refer to
total weights of whole permutations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import linear_sum_assignment

from .mixtures import Permutation

__all__ = [
    "MatchingResult",
    "max_weight_matching",
    "second_best_matching",
    "brute_force_matching",
    "TIE_TOL",
    "BRUTE_FORCE_LIMIT",
]

# Two permutations within this total-weight distance count as tied.
TIE_TOL = 1e-9

# brute_force_matching refuses anything above 10! evaluations.
BRUTE_FORCE_LIMIT = 10


@dataclass(frozen=True)
class MatchingResult:
    """A permutation with its total weight.

    ``is_unique`` is False when some other permutation's total comes within
    TIE_TOL of the best total (for second_best_matching it reports the same
    fact: the optimum was tied).
    """

    permutation: Permutation
    total_weight: float
    is_unique: bool


def _as_weight_matrix(weights: ArrayLike) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
        raise ValueError("weight matrix must be square and nonempty")
    if not np.all(np.isfinite(w)):
        raise ValueError("weight matrix entries must be finite")
    return w


def _solve(w: np.ndarray) -> np.ndarray:
    """Columns of the max-weight assignment, one per row in order."""
    _, cols = linear_sum_assignment(-w)
    return cols


def _total(w: np.ndarray, cols: np.ndarray) -> float:
    return float(w[np.arange(w.shape[0]), cols].sum())


def _runner_up(w: np.ndarray, best_cols: np.ndarray) -> tuple[float, np.ndarray]:
    """Best permutation differing from best_cols, via K forced exclusions.

    Any permutation other than the optimum disagrees with it on at least one
    row, so forbidding each optimal edge in turn and re-solving covers all of
    them exactly.
    """
    k = w.shape[0]
    cost = -w.copy()
    best_total, best = -np.inf, None
    for row in range(k):
        saved = cost[row, best_cols[row]]
        cost[row, best_cols[row]] = np.inf
        _, cols = linear_sum_assignment(cost)
        cost[row, best_cols[row]] = saved
        total = _total(w, cols)
        if total > best_total:
            best_total, best = total, cols
    return best_total, best


def max_weight_matching(weights: ArrayLike) -> MatchingResult:
    """Permutation maximizing the total weight sum_k w[k, perm(k)]."""
    w = _as_weight_matrix(weights)
    k = w.shape[0]
    if k == 1:
        return MatchingResult(Permutation.identity(1), float(w[0, 0]), True)
    cols = _solve(w)
    total = _total(w, cols)
    second_total, _ = _runner_up(w, cols)
    return MatchingResult(
        Permutation(tuple(int(c) + 1 for c in cols)),
        total,
        total - second_total > TIE_TOL,
    )


def second_best_matching(weights: ArrayLike) -> MatchingResult:
    """Best permutation strictly different (as a map) from the optimum.

    Its weight equals the optimum exactly when the optimum is tied.
    """
    w = _as_weight_matrix(weights)
    if w.shape[0] < 2:
        raise ValueError("second-best matching needs K >= 2")
    cols = _solve(w)
    best_total = _total(w, cols)
    second_total, second_cols = _runner_up(w, cols)
    return MatchingResult(
        Permutation(tuple(int(c) + 1 for c in second_cols)),
        second_total,
        best_total - second_total > TIE_TOL,
    )


def brute_force_matching(weights: ArrayLike) -> MatchingResult:
    """Exhaustive reference maximizer; refuses K > BRUTE_FORCE_LIMIT.

    Permutations are scored in vectorized chunks, so even 10! stays cheap;
    earlier chunks win ties, which matches lexicographically-first semantics
    because itertools.permutations yields in lexicographic order.
    """
    w = _as_weight_matrix(weights)
    k = w.shape[0]
    if k > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force refused for K > {BRUTE_FORCE_LIMIT}")
    rows = np.arange(k)
    best_total, best_perm = -np.inf, None
    runner_total = -np.inf
    perms = itertools.permutations(range(k))
    while True:
        chunk = np.array(list(itertools.islice(perms, 200_000)), dtype=np.intp)
        if chunk.size == 0:
            break
        totals = w[rows, chunk.reshape(-1, k)].sum(axis=1)
        top = int(np.argmax(totals))
        chunk_best = float(totals[top])
        chunk_second = (
            float(np.partition(totals, -2)[-2]) if totals.size > 1 else -np.inf
        )
        if chunk_best > best_total:
            # the displaced optimum and this chunk's runner both compete
            runner_total = max(runner_total, best_total, chunk_second)
            best_total, best_perm = chunk_best, tuple(int(c) for c in chunk[top])
        else:
            # a distinct permutation, even on an exact tie with the optimum
            runner_total = max(runner_total, chunk_best)
    is_unique = k == 1 or best_total - runner_total > TIE_TOL
    return MatchingResult(
        Permutation(tuple(c + 1 for c in best_perm)), best_total, is_unique
    )
