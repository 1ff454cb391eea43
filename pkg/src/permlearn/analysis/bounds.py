"""Recovery-probability lower bounds and matching sample-size requirements.

The likelihood-route bound needs a large-deviation exponent for the
per-sample score margin of each class; ``chernoff_exponent`` estimates that
exponent from samples by maximizing ``s*t - log E[exp(s*(U - E U))]`` over
``s >= 0``, with the expectation replaced by an empirical average. The
vote-route bound only needs the worst-region margin. Both bounds degrade
gracefully: they clamp into [0, 1] and accept degenerate inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from ..mixtures import MixingMeasure, Permutation, sample_labeled

__all__ = [
    "DualEstimate",
    "BoundReport",
    "chernoff_exponent",
    "chernoff_exponent_from_scores",
    "mle_recovery_bound",
    "mv_recovery_bound",
    "required_sample_size",
    "min_count_probability",
]

ESS_FLOOR = 50.0
_GRID_POINTS = 61


@dataclass(frozen=True)
class DualEstimate:
    """Estimated large-deviation exponent at a fixed margin ``t``.

    ``value`` is +inf when the score is (numerically) constant, in which case
    any positive margin is infinitely unlikely; it is 0 with ``diverged`` set
    when no scaling of the samples kept enough effective mass to trust the
    empirical average. ``s_star`` is the maximizing tilt.
    """

    value: float
    s_star: float
    diverged: bool
    samples_used: int
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "value": None if math.isinf(self.value) else self.value,
            "s_star": None if math.isinf(self.s_star) else self.s_star,
            "diverged": self.diverged,
            "samples_used": self.samples_used,
            "seed": self.seed,
        }


def _effective_sample_sizes(log_w: np.ndarray) -> np.ndarray:
    # (sum w)^2 / sum w^2, rows = grid points
    return np.exp(2.0 * logsumexp(log_w, axis=1) - logsumexp(2.0 * log_w, axis=1))


def chernoff_exponent_from_scores(
    scores: np.ndarray,
    t: float,
    ess_floor: float = ESS_FLOOR,
    seed: int | None = None,
) -> DualEstimate:
    """Exponent of ``P(mean of n centered copies >= t)`` from raw samples."""
    u = np.asarray(scores, dtype=float).ravel()
    if u.size < 1:
        raise ValueError("scores must be nonempty")
    if not np.all(np.isfinite(u)):
        raise ValueError("scores must be finite")
    if not (t >= 0.0):
        raise ValueError("margin t must be >= 0")
    n = u.size
    if t == 0.0:
        return DualEstimate(0.0, 0.0, False, n, seed)

    v = u - u.mean()
    sd = float(v.std())
    if sd == 0.0:
        # Constant score: a positive deviation never happens.
        return DualEstimate(math.inf, math.inf, True, n, seed)

    grid = np.geomspace(1e-3, 1e3, _GRID_POINTS) / sd
    ess = _effective_sample_sizes(grid[:, np.newaxis] * v[np.newaxis, :])
    stable = grid[ess >= min(ess_floor, n)]
    if stable.size == 0:
        return DualEstimate(0.0, 0.0, True, n, seed)
    s_hi = float(stable.max())

    log_n = math.log(n)

    def objective(s: float) -> float:
        return -(s * t - (float(logsumexp(s * v)) - log_n))

    res = minimize_scalar(objective, bounds=(0.0, s_hi), method="bounded")
    value = max(-float(res.fun), 0.0)
    return DualEstimate(value, float(res.x), False, n, seed)


def chernoff_exponent(
    measure: MixingMeasure,
    atom: int,
    t: float,
    samples: int = 100_000,
    seed: int | np.random.Generator = 0,
) -> DualEstimate:
    """Exponent for one atom's weighted log score under the whole mixture.

    Draws X from ``measure``'s mixture density and feeds the samples of
    ``log(weight_atom * density_atom(X))`` to the score-based estimator.
    ``atom`` is 1-based.
    """
    if not 1 <= atom <= measure.n_atoms:
        raise ValueError(f"atom must be in 1..{measure.n_atoms}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    data = sample_labeled(measure, Permutation.identity(measure.n_atoms), samples, rng)
    u = measure.log_scores(data.x)[:, atom - 1]
    return chernoff_exponent_from_scores(
        u, t, seed=seed if isinstance(seed, int) else None
    )


def _clamp01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def _min_count(counts) -> float:
    arr = np.asarray(counts, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("counts must be nonempty")
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("counts must be finite and >= 0")
    return float(arr.min())


def mle_recovery_bound(k: int, class_counts, exponent: float) -> float:
    """Lower bound on exact-recovery probability for the matching estimator.

    ``1 - 2 k^2 exp(-min(class_counts) * exponent)`` clamped into [0, 1].
    ``exponent`` is the worst-atom large-deviation exponent; +inf is accepted
    and gives a bound of 1 when every class was observed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    min_n = _min_count(class_counts)
    rate = 0.0 if (min_n == 0.0 or exponent == 0.0) else min_n * exponent
    return _clamp01(1.0 - 2.0 * k * k * math.exp(-rate))


def mv_recovery_bound(k: int, region_counts, gap: float) -> float:
    """Lower bound on exact recovery for the vote estimator.

    ``1 - 2 k^2 exp(-2 gap^2 min(region_counts) / 9)`` clamped into [0, 1],
    where ``gap`` is the worst-region vote margin.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= gap <= 1.0:
        raise ValueError("gap must lie in [0, 1]")
    min_m = _min_count(region_counts)
    return _clamp01(1.0 - 2.0 * k * k * math.exp(-2.0 * gap * gap * min_m / 9.0))


def required_sample_size(k: int, delta: float, method: str, value: float) -> int:
    """Samples sufficient for recovery with probability ``1 - delta``.

    ``value`` is the exponent (method 'mle') or the vote margin (method
    'mv'). Returns ``ceil(k log(k/delta) (1 + 4/value))`` respectively
    ``ceil(k log(k/delta) (1 + 18/value^2))``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not value > 0.0:
        raise ValueError("value must be > 0")
    if method == "mle":
        factor = 1.0 + 4.0 / value
    elif method == "mv":
        if value > 1.0:
            raise ValueError("a vote margin cannot exceed 1")
        factor = 1.0 + 18.0 / value**2
    else:
        raise ValueError("method must be 'mle' or 'mv'")
    return math.ceil(k * math.log(k / delta) * factor)


def min_count_probability(n: int, probs, m: int) -> float:
    """Lower bound on ``P(every class appears >= m times among n draws)``.

    Uses one additive Hoeffding-style term per class:
    ``1 - sum_k exp(-2 (n p_k - m)^2 / (n p_k))``, where classes with
    ``n p_k <= m`` contribute a full unit (no guarantee for them).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 0:
        raise ValueError("m must be >= 0")
    p = np.asarray(probs, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("probs must be a probability vector")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probs must sum to 1")
    expect = n * p
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(
            expect > m, np.exp(-2.0 * (expect - m) ** 2 / expect), 1.0
        )
    return _clamp01(1.0 - float(terms.sum()))


@dataclass(frozen=True)
class BoundReport:
    """One bound evaluation, bundled for serialization."""

    kind: str
    value: float
    inputs: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "inputs": dict(self.inputs)}
