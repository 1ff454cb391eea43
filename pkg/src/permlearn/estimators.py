"""Permutation estimators: exact matching MLE, majority vote, greedy.

All three consume the same one-pass summary of the data under a given mixing
measure (per-sample atom scores, region memberships, and their per-class
aggregates), so running several estimators on one dataset costs one density
evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .matching import max_weight_matching
from .mixtures import LabeledData, MixingMeasure, Permutation

__all__ = [
    "FAIL_EMPTY_REGION",
    "FAIL_MAJORITY_TIE",
    "FAIL_NON_BIJECTIVE",
    "EstimateOutcome",
    "DataSummary",
    "summarize",
    "summary_from_scores",
    "mle_estimate",
    "mv_estimate",
    "greedy_estimate",
    "mle_from_summary",
    "mv_from_summary",
    "greedy_from_summary",
]

FAIL_EMPTY_REGION = "empty_region"
FAIL_MAJORITY_TIE = "majority_tie"
FAIL_NON_BIJECTIVE = "non_bijective"


@dataclass(frozen=True)
class EstimateOutcome:
    """Result of one estimator run.

    Exactly one of ``permutation`` / ``failure`` is set. ``log_likelihood``
    is the mean per-sample log joint score of the returned permutation (None
    on failure). ``class_counts[k-1]`` counts label k in the data;
    ``region_counts[b-1]`` counts samples falling in region b.
    ``unconstrained_classes`` lists labels with no samples, whose assignment
    the data cannot pin down. ``unique`` is the matching's tie flag for the
    MLE and None for the other methods.
    """

    method: str
    permutation: Permutation | None
    failure: str | None
    log_likelihood: float | None
    class_counts: tuple[int, ...]
    region_counts: tuple[int, ...]
    unconstrained_classes: tuple[int, ...] = ()
    unique: bool | None = None

    @property
    def ok(self) -> bool:
        return self.permutation is not None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "permutation": list(self.permutation.to_region) if self.ok else None,
            "failure": self.failure,
            "log_likelihood": self.log_likelihood,
            "class_counts": list(self.class_counts),
            "region_counts": list(self.region_counts),
            "unconstrained_classes": list(self.unconstrained_classes),
            "unique": self.unique,
        }


@dataclass(frozen=True)
class DataSummary:
    """One-pass sufficient statistics of (measure, data) for all estimators.

    weights[k-1, b-1] sums log(weight_b f_b(x_i)) over samples with label k;
    votes[b-1, k-1] counts samples with label k falling in region b.
    """

    n: int
    k: int
    weights: np.ndarray
    votes: np.ndarray
    class_counts: np.ndarray
    region_counts: np.ndarray

    def loglik(self, perm: Permutation) -> float:
        """Mean per-sample log joint score under the permutation."""
        cols = np.asarray(perm.to_region) - 1
        return float(self.weights[np.arange(self.k), cols].sum() / self.n)


def _as_data(data) -> LabeledData:
    if isinstance(data, LabeledData):
        return data
    if isinstance(data, Iterable):
        return LabeledData.from_samples(data)
    raise ValueError("data must be a LabeledData or an iterable of samples")


def summary_from_scores(scores: np.ndarray, labels: np.ndarray, k: int) -> DataSummary:
    """Aggregate precomputed per-atom log scores by class and region.

    Useful when many prefixes of one dataset are summarized against the same
    measure: score once, then slice ``scores`` and ``labels`` per prefix.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n == 0:
        raise ValueError("data must be non-empty")
    if scores.shape != (n, k):
        raise ValueError(f"scores must have shape ({n}, {k})")
    if int(labels.max()) > k or int(labels.min()) < 1:
        raise ValueError(f"labels must lie in 1..{k}")
    regions0 = np.argmax(scores, axis=1)
    label_onehot = labels[:, np.newaxis] == np.arange(1, k + 1)
    weights = label_onehot.T.astype(float) @ scores
    region_onehot = regions0[:, np.newaxis] == np.arange(k)
    votes = region_onehot.T.astype(np.int64) @ label_onehot.astype(np.int64)
    return DataSummary(
        n=n,
        k=k,
        weights=weights,
        votes=votes,
        class_counts=label_onehot.sum(axis=0).astype(np.int64),
        region_counts=region_onehot.sum(axis=0).astype(np.int64),
    )


def summarize(measure: MixingMeasure, data: LabeledData | Iterable) -> DataSummary:
    """Score every sample under every atom and aggregate by class and region."""
    data = _as_data(data)
    if data.n == 0:
        raise ValueError("data must be non-empty")
    if data.dim != measure.dim:
        raise ValueError(f"data dim {data.dim} does not match measure dim {measure.dim}")
    return summary_from_scores(measure.log_scores(data.x), data.y, measure.n_atoms)


def mle_from_summary(s: DataSummary) -> EstimateOutcome:
    result = max_weight_matching(s.weights)
    return EstimateOutcome(
        method="mle",
        permutation=result.permutation,
        failure=None,
        log_likelihood=float(result.total_weight / s.n),
        class_counts=tuple(int(c) for c in s.class_counts),
        region_counts=tuple(int(c) for c in s.region_counts),
        unconstrained_classes=tuple(
            int(k + 1) for k in np.flatnonzero(s.class_counts == 0)
        ),
        unique=result.is_unique,
    )


def mv_from_summary(s: DataSummary) -> EstimateOutcome:
    counts = tuple(int(c) for c in s.class_counts)
    regions = tuple(int(c) for c in s.region_counts)

    def fail(reason: str) -> EstimateOutcome:
        return EstimateOutcome(
            method="mv",
            permutation=None,
            failure=reason,
            log_likelihood=None,
            class_counts=counts,
            region_counts=regions,
            unconstrained_classes=tuple(
                int(k + 1) for k in np.flatnonzero(s.class_counts == 0)
            ),
        )

    if np.any(s.region_counts == 0):
        return fail(FAIL_EMPTY_REGION)
    winners = []
    for b in range(s.k):
        tally = s.votes[b]
        top = int(np.argmax(tally))
        if int((tally == tally[top]).sum()) > 1:
            return fail(FAIL_MAJORITY_TIE)
        winners.append(top + 1)
    if len(set(winners)) != s.k:
        return fail(FAIL_NON_BIJECTIVE)
    # winners[b-1] is the class elected by region b, i.e. the inverse map
    perm = Permutation(tuple(winners)).inverse()
    return EstimateOutcome(
        method="mv",
        permutation=perm,
        failure=None,
        log_likelihood=s.loglik(perm),
        class_counts=counts,
        region_counts=regions,
        unconstrained_classes=tuple(
            int(k + 1) for k in np.flatnonzero(s.class_counts == 0)
        ),
    )


def greedy_from_summary(s: DataSummary) -> EstimateOutcome:
    counts = tuple(int(c) for c in s.class_counts)
    regions = tuple(int(c) for c in s.region_counts)
    empty = tuple(int(k + 1) for k in np.flatnonzero(s.class_counts == 0))

    def fail(reason: str) -> EstimateOutcome:
        return EstimateOutcome(
            method="greedy",
            permutation=None,
            failure=reason,
            log_likelihood=None,
            class_counts=counts,
            region_counts=regions,
            unconstrained_classes=empty,
        )

    if empty:
        return fail(FAIL_EMPTY_REGION)
    picks = np.argmax(s.weights, axis=1) + 1  # ties resolve to the lowest index
    if len(set(picks.tolist())) != s.k:
        return fail(FAIL_NON_BIJECTIVE)
    perm = Permutation(tuple(int(b) for b in picks))
    return EstimateOutcome(
        method="greedy",
        permutation=perm,
        failure=None,
        log_likelihood=s.loglik(perm),
        class_counts=counts,
        region_counts=regions,
    )


def mle_estimate(measure: MixingMeasure, data) -> EstimateOutcome:
    """Likelihood-maximizing permutation, found by exact matching.

    Always returns a permutation. Classes absent from the data leave all-zero
    score rows; the matching assigns them deterministically and they are
    reported in ``unconstrained_classes``.
    """
    return mle_from_summary(summarize(measure, data))


def mv_estimate(measure: MixingMeasure, data) -> EstimateOutcome:
    """Majority vote: each region elects its most frequent label.

    Fails (in this order of checks) when a region holds no samples, when some
    region's vote is tied, or when two regions elect the same class.
    """
    return mv_from_summary(summarize(measure, data))


def greedy_estimate(measure: MixingMeasure, data) -> EstimateOutcome:
    """Independent per-class argmax of the score rows; no matching step.

    Fails when a class has no samples (its argmax is undefined) or when the
    row argmaxes collide, which exact matching would have repaired.
    """
    return greedy_from_summary(summarize(measure, data))
