"""Monte-Carlo estimates of the score margins that control recovery.

Two margins matter. The likelihood margin is the expected per-sample log
score of the true assignment minus that of the best wrong assignment; the
vote margin is, per decision region, the conditional frequency of the true
class minus the strongest rival class, with the overall gap the worst region's
margin. Both are estimated from one labeled draw out of the true model and
reported with half-widths at three standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..matching import max_weight_matching, second_best_matching
from ..mixtures import MixingMeasure, Permutation, sample_labeled

__all__ = ["GapReport", "estimate_mle_gap", "estimate_mv_gap", "estimate_gaps"]


@dataclass(frozen=True)
class GapReport:
    """Gap estimates with their Monte-Carlo half-widths (3 standard errors).

    Fields for a part that was not requested are None. ``mv_gap`` is NaN when
    some region received no Monte-Carlo mass (listed in ``empty_regions``);
    otherwise it equals ``min(region_margins)`` by construction.
    ``region_margins[b-1]`` is region b's margin (NaN when empty).
    """

    mle_gap: float | None
    mle_half_width: float | None
    mv_gap: float | None
    mv_half_width: float | None
    region_margins: tuple[float, ...] | None
    margin_half_widths: tuple[float, ...] | None
    empty_regions: tuple[int, ...]
    samples_used: int
    seed: int | None

    def to_dict(self) -> dict:
        def scrub(v):
            if v is None:
                return None
            if isinstance(v, tuple):
                return [scrub(x) for x in v]
            return None if (isinstance(v, float) and math.isnan(v)) else v

        return {
            "mle_gap": scrub(self.mle_gap),
            "mle_half_width": scrub(self.mle_half_width),
            "mv_gap": scrub(self.mv_gap),
            "mv_half_width": scrub(self.mv_half_width),
            "region_margins": scrub(self.region_margins),
            "margin_half_widths": scrub(self.margin_half_widths),
            "empty_regions": list(self.empty_regions),
            "samples_used": self.samples_used,
            "seed": self.seed,
        }


def _check_pair(model: MixingMeasure, truth: MixingMeasure, perm: Permutation):
    if model.n_atoms != truth.n_atoms:
        raise ValueError("model and truth must have the same number of atoms")
    if model.dim != truth.dim:
        raise ValueError("model and truth must share one dimension")
    if perm.size != truth.n_atoms:
        raise ValueError("permutation size does not match the measures")


def _mle_part(scores, labels, k, n, true_perm):
    onehot = (labels[:, np.newaxis] == np.arange(1, k + 1)).astype(float)
    cell_mean = onehot.T @ scores / n
    cell_sq = onehot.T @ scores**2 / n
    cell_se = np.sqrt(np.maximum(cell_sq - cell_mean**2, 0.0) / n)

    def value(perm: Permutation) -> float:
        cols = np.asarray(perm.to_region) - 1
        return float(cell_mean[np.arange(k), cols].sum())

    best = max_weight_matching(cell_mean)
    if best.permutation == true_perm:
        rival = second_best_matching(cell_mean).permutation
    else:
        rival = best.permutation
    gap = value(true_perm) - value(rival)
    # Cells in one row share samples, so their errors correlate; the triangle
    # inequality on standard deviations is the safe way to combine them.
    hw = 0.0
    for k0 in range(k):
        bt = true_perm.to_region[k0] - 1
        br = rival.to_region[k0] - 1
        if bt != br:
            hw += float(cell_se[k0, bt] + cell_se[k0, br])
    return gap, 3.0 * hw


def _mv_part(regions0, labels, k, true_perm):
    region_onehot = regions0[:, np.newaxis] == np.arange(k)
    label_onehot = labels[:, np.newaxis] == np.arange(1, k + 1)
    votes = region_onehot.T.astype(np.int64) @ label_onehot.astype(np.int64)
    mass = votes.sum(axis=1)

    margins, hws, empty = [], [], []
    for b in range(k):
        if mass[b] == 0:
            margins.append(math.nan)
            hws.append(math.nan)
            empty.append(b + 1)
            continue
        freq = votes[b] / mass[b]
        target = true_perm.label_of_region(b + 1) - 1
        rival_freqs = np.delete(freq, target)
        runner = float(rival_freqs.max())
        top = float(freq[target])
        margin = top - runner
        # multinomial difference of two cell frequencies
        var = max(top + runner - margin**2, 0.0) / mass[b]
        margins.append(margin)
        hws.append(3.0 * math.sqrt(var))
    if empty:
        gap, gap_hw = math.nan, math.nan
    else:
        worst = int(np.argmin(margins))
        gap, gap_hw = margins[worst], hws[worst]
    return gap, gap_hw, tuple(margins), tuple(hws), tuple(empty)


def estimate_gaps(
    model: MixingMeasure,
    truth: MixingMeasure,
    true_perm: Permutation,
    samples: int = 100_000,
    seed: int | np.random.Generator = 0,
    which: frozenset[str] | set[str] = frozenset({"mle", "mv"}),
) -> GapReport:
    """Estimate the likelihood and/or vote margins of ``model`` in one draw.

    Samples (X, Y) from the true model, scores X under every atom of
    ``model`` once, and reuses the scores for both margins.
    """
    _check_pair(model, truth, true_perm)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    unknown = set(which) - {"mle", "mv"}
    if unknown or not which:
        raise ValueError(f"which must be a nonempty subset of {{'mle','mv'}}")
    data = sample_labeled(truth, true_perm, samples, seed)
    scores = model.log_scores(data.x)
    k = model.n_atoms

    mle_gap = mle_hw = None
    mv_gap = mv_hw = None
    margins = margin_hws = None
    empty: tuple[int, ...] = ()
    if "mle" in which:
        mle_gap, mle_hw = _mle_part(scores, data.y, k, samples, true_perm)
    if "mv" in which:
        regions0 = np.argmax(scores, axis=1)
        mv_gap, mv_hw, margins, margin_hws, empty = _mv_part(
            regions0, data.y, k, true_perm
        )
    return GapReport(
        mle_gap=mle_gap,
        mle_half_width=mle_hw,
        mv_gap=mv_gap,
        mv_half_width=mv_hw,
        region_margins=margins,
        margin_half_widths=margin_hws,
        empty_regions=empty,
        samples_used=samples,
        seed=seed if isinstance(seed, int) else None,
    )


def estimate_mle_gap(
    model: MixingMeasure,
    truth: MixingMeasure,
    true_perm: Permutation,
    samples: int = 100_000,
    seed: int | np.random.Generator = 0,
) -> GapReport:
    """Likelihood margin of the true assignment over the best wrong one."""
    return estimate_gaps(model, truth, true_perm, samples, seed, which={"mle"})


def estimate_mv_gap(
    model: MixingMeasure,
    truth: MixingMeasure,
    true_perm: Permutation,
    samples: int = 100_000,
    seed: int | np.random.Generator = 0,
) -> GapReport:
    """Worst-region vote margin; NaN (with flags) if a region drew no mass."""
    return estimate_gaps(model, truth, true_perm, samples, seed, which={"mv"})
