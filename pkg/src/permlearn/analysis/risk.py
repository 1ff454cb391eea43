"""Monte-Carlo misclassification risk of a plug-in classifier.

The excess risk over the true model's own classifier is estimated in a
paired fashion — both classifiers are evaluated on the same draw — so that
a model identical to the truth reports an excess of exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..mixtures import MixingMeasure, Permutation, classify, sample_labeled

__all__ = ["RiskEstimate", "misclassification_rate"]


@dataclass(frozen=True)
class RiskEstimate:
    """Error rates with half-widths at three standard errors."""

    rate: float
    half_width: float
    bayes_rate: float
    bayes_half_width: float
    excess: float
    excess_half_width: float
    samples_used: int
    seed: int | None

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "half_width": self.half_width,
            "bayes_rate": self.bayes_rate,
            "bayes_half_width": self.bayes_half_width,
            "excess": self.excess,
            "excess_half_width": self.excess_half_width,
            "samples_used": self.samples_used,
            "seed": self.seed,
        }


def _rate_hw(errors: np.ndarray) -> tuple[float, float]:
    n = errors.size
    p = float(errors.mean())
    return p, 3.0 * math.sqrt(p * (1.0 - p) / n)


def misclassification_rate(
    model: MixingMeasure,
    perm: Permutation,
    truth: MixingMeasure,
    true_perm: Permutation,
    samples: int = 100_000,
    seed: int | np.random.Generator = 0,
) -> RiskEstimate:
    """Estimate P(classifier(X) != Y) for the plug-in pair (model, perm).

    Draws from the true pair, classifies once with the candidate and once
    with the truth itself, and differences the two error indicators sample
    by sample for the excess.
    """
    if model.n_atoms != truth.n_atoms or model.dim != truth.dim:
        raise ValueError("model and truth must share atom count and dimension")
    if perm.size != model.n_atoms or true_perm.size != truth.n_atoms:
        raise ValueError("permutation size does not match the measures")
    if samples < 1:
        raise ValueError("samples must be >= 1")

    data = sample_labeled(truth, true_perm, samples, seed)
    errs = (classify(model, perm, data.x) != data.y).astype(float)
    bayes_errs = (classify(truth, true_perm, data.x) != data.y).astype(float)

    rate, hw = _rate_hw(errs)
    bayes_rate, bayes_hw = _rate_hw(bayes_errs)
    diff = errs - bayes_errs
    excess = float(diff.mean())
    excess_hw = 3.0 * float(diff.std(ddof=0)) / math.sqrt(samples)
    return RiskEstimate(
        rate=rate,
        half_width=hw,
        bayes_rate=bayes_rate,
        bayes_half_width=bayes_hw,
        excess=excess,
        excess_half_width=excess_hw,
        samples_used=samples,
        seed=seed if isinstance(seed, int) else None,
    )
