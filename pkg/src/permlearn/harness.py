"""Seeded synthetic families and Monte-Carlo recovery experiments.

A family draws a ground-truth mixing measure from a seed; an experiment runs
all three estimators over a grid of sample sizes, reusing each trial's draw
as nested prefixes so the curves are comparable point to point. Trial t of an
experiment seeded with s always consumes the stream ``default_rng([s, t])``,
so single results can be reproduced without rerunning the whole grid.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import __version__
from .estimators import (
    FAIL_EMPTY_REGION,
    FAIL_MAJORITY_TIE,
    FAIL_NON_BIJECTIVE,
    EstimateOutcome,
    greedy_from_summary,
    mle_from_summary,
    mv_from_summary,
    summary_from_scores,
)
from .mixtures import (
    Gaussian,
    GaussianMixture,
    MixingMeasure,
    Permutation,
    mixture_from_dict,
    mixture_to_dict,
    sample_labeled,
)

__all__ = [
    "FAMILIES",
    "DEFAULT_N_GRID",
    "ExperimentSpec",
    "CurvePoint",
    "RecoveryCurve",
    "generate_true_mixture",
    "perturb_mixture",
    "resolve_model",
    "run_recovery_experiment",
]

FAMILIES = (
    "gaussian_grid",
    "gaussian_grid_perturbed",
    "mixture_of_mixtures",
    "mixture_of_mixtures_perturbed",
    "custom",
)
DEFAULT_N_GRID = tuple(range(3, 100, 3))

# Grid geometry: unit spacing before the separation factor scales the means.
# The covariance ceiling keeps neighbouring atoms nearly disjoint (pairwise
# total variation above 0.9 at separation 1).
GRID_TARGET_STD = 0.25
SUBS_PER_CLASS = 3
SUB_OFFSET_STD = 0.15
SUB_TARGET_STD = 0.12

MEAN_SHIFT_STD = math.sqrt(0.1)
COV_FACTORS = (0.5, 2.0)
WEIGHT_JITTER = (0.8, 1.25)

_PERTURB_STREAM = 2**32 - 1
_ESTIMATORS: tuple[tuple[str, Callable], ...] = (
    ("mle", mle_from_summary),
    ("mv", mv_from_summary),
    ("greedy", greedy_from_summary),
)

CSV_COLUMNS = (
    "family,K,dim,eta,perturbed,estimator,n,trials,recovered,"
    "fail_empty,fail_tie,fail_nonbij,mean_loglik,seed"
).split(",")


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one recovery experiment.

    For the synthetic families, (family, k, dim, eta, seed) pin the truth;
    the 'custom' family carries explicit true/model measures instead and
    takes k and dim from them.
    """

    family: str
    k: int = 4
    dim: int = 2
    eta: float = 1.0
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    trials: int = 50
    label_noise: float = 0.0
    seed: int = 0
    true_mixture: MixingMeasure | None = None
    model_mixture: MixingMeasure | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(n < 1 for n in grid):
            raise ValueError("n_grid must be nonempty positive sample sizes")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError("label_noise must lie in [0, 1)")
        if self.family == "custom":
            if self.true_mixture is None or self.model_mixture is None:
                raise ValueError("custom experiments need true and model measures")
            if self.true_mixture.n_atoms != self.model_mixture.n_atoms:
                raise ValueError("true and model measures must share atom count")
            if self.true_mixture.dim != self.model_mixture.dim:
                raise ValueError("true and model measures must share dimension")
            object.__setattr__(self, "k", self.true_mixture.n_atoms)
            object.__setattr__(self, "dim", self.true_mixture.dim)
        else:
            if self.true_mixture is not None or self.model_mixture is not None:
                raise ValueError("explicit measures are only valid with family 'custom'")
            if self.k < 2:
                raise ValueError("synthetic families need k >= 2")
            if self.dim < 2:
                raise ValueError("grid families need dim >= 2")
            if not self.eta > 0.0:
                raise ValueError("separation eta must be > 0")
        if self.k == 1 and self.label_noise > 0.0:
            raise ValueError("label noise is meaningless with a single class")

    @property
    def perturbed(self) -> bool:
        return self.family.endswith("_perturbed")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "k": self.k,
            "dim": self.dim,
            "eta": self.eta,
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "label_noise": self.label_noise,
            "seed": self.seed,
            "true_mixture": (
                None if self.true_mixture is None else mixture_to_dict(self.true_mixture)
            ),
            "model_mixture": (
                None if self.model_mixture is None else mixture_to_dict(self.model_mixture)
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if "family" not in d:
            raise ValueError("experiment dict needs a 'family' key")
        kwargs = {}
        for key in ("k", "dim", "trials", "seed"):
            if key in d and d[key] is not None:
                kwargs[key] = int(d[key])
        for key in ("eta", "label_noise"):
            if key in d and d[key] is not None:
                kwargs[key] = float(d[key])
        if d.get("n_grid") is not None:
            kwargs["n_grid"] = tuple(int(n) for n in d["n_grid"])
        for key in ("true_mixture", "model_mixture"):
            if d.get(key) is not None:
                kwargs[key] = mixture_from_dict(d[key])
        return cls(family=str(d["family"]), **kwargs)


def _grid_means(k: int, dim: int) -> np.ndarray:
    """First k sites of the smallest square lattice, centered, unit spacing."""
    side = math.isqrt(k - 1) + 1
    sites = [(float(c), float(-r)) for r in range(side) for c in range(side)][:k]
    means = np.zeros((k, dim))
    means[:, :2] = np.asarray(sites) - np.asarray(sites).mean(axis=0)
    return means


def _random_spd(rng: np.random.Generator, dim: int, target_std: float) -> np.ndarray:
    a = rng.normal(0.0, 0.15, (dim, dim))
    s = a @ a.T + 0.1 * np.eye(dim)
    top = float(np.linalg.eigvalsh(s)[-1])
    return s * (target_std**2 / top)


def generate_true_mixture(
    spec: ExperimentSpec, seed: int | None = None
) -> tuple[MixingMeasure, Permutation]:
    """Draw the ground-truth measure for a spec; the true assignment is identity.

    Atom means sit on a centered square lattice with spacing ``eta``;
    covariances (and, for the nested family, the sub-component offsets) do not
    scale with ``eta``, so smaller separations genuinely overlap more. Draw
    order from one stream: atom weights first, then per-atom shape draws.
    """
    if spec.family == "custom":
        return spec.true_mixture, Permutation.identity(spec.k)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    k, dim = spec.k, spec.dim
    raw = rng.uniform(size=k)
    weights = raw / raw.sum()
    centers = spec.eta * _grid_means(k, dim)
    components = []
    if spec.family.startswith("gaussian_grid"):
        for b in range(k):
            components.append(Gaussian(centers[b], _random_spd(rng, dim, GRID_TARGET_STD)))
    else:
        for b in range(k):
            offsets = rng.normal(0.0, SUB_OFFSET_STD, (SUBS_PER_CLASS, dim))
            sub_raw = rng.uniform(size=SUBS_PER_CLASS)
            parts = [
                Gaussian(centers[b] + offsets[j], _random_spd(rng, dim, SUB_TARGET_STD))
                for j in range(SUBS_PER_CLASS)
            ]
            components.append(GaussianMixture(sub_raw / sub_raw.sum(), parts))
    return MixingMeasure(weights, components), Permutation.identity(k)


def _perturb_gaussian(
    g: Gaussian, rng: np.random.Generator, mean_shift_scale: float, scale_cov: bool
) -> Gaussian:
    shift = rng.normal(0.0, MEAN_SHIFT_STD, g.dim)
    factor = float(rng.choice(COV_FACTORS))
    return Gaussian(
        g.mean + mean_shift_scale * shift, g.cov * (factor if scale_cov else 1.0)
    )


def perturb_mixture(
    measure: MixingMeasure,
    seed: int | np.random.Generator,
    mean_shift_scale: float = 1.0,
    scale_covariances: bool = True,
    jitter_weights: bool = True,
) -> MixingMeasure:
    """Misspecify a measure: shift means, rescale covariances, jitter weights.

    All random draws are consumed regardless of the flags, so the same seed
    yields the same shift directions at every ``mean_shift_scale`` — scaling
    the argument moves the model along one fixed misspecification path.
    """
    if mean_shift_scale < 0.0:
        raise ValueError("mean_shift_scale must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    components = []
    for comp in measure.components:
        if isinstance(comp, Gaussian):
            components.append(
                _perturb_gaussian(comp, rng, mean_shift_scale, scale_covariances)
            )
        elif isinstance(comp, GaussianMixture):
            parts = [
                _perturb_gaussian(p, rng, mean_shift_scale, scale_covariances)
                for p in comp.parts
            ]
            components.append(GaussianMixture(comp.weights, parts))
        else:
            raise ValueError("only Gaussian-based atoms can be perturbed")
    jitter = rng.uniform(*WEIGHT_JITTER, measure.n_atoms)
    weights = measure.weights * jitter if jitter_weights else measure.weights
    weights = weights / weights.sum()
    return MixingMeasure(weights, components, labels=measure.labels)


@dataclass(frozen=True)
class CurvePoint:
    """Aggregated outcomes of one (estimator, sample size) cell."""

    estimator: str
    n: int
    trials: int
    recovered: int
    fail_empty: int
    fail_tie: int
    fail_nonbij: int
    mean_loglik: float | None


@dataclass(frozen=True)
class RecoveryCurve:
    """All cells of one experiment plus the ExperimentSpec that produced them."""

    spec: ExperimentSpec
    points: tuple[CurvePoint, ...]
    wall_time_s: float

    def recovery_fraction(self, estimator: str) -> np.ndarray:
        """Recovery frequency per n_grid entry for one estimator."""
        by_n = {p.n: p for p in self.points if p.estimator == estimator}
        if len(by_n) != len(self.spec.n_grid):
            raise ValueError(f"unknown estimator {estimator!r}")
        return np.array(
            [by_n[n].recovered / by_n[n].trials for n in self.spec.n_grid]
        )

    def csv_rows(self) -> list[list[str]]:
        s = self.spec
        rows = [list(CSV_COLUMNS)]
        for p in self.points:
            rows.append(
                [
                    s.family,
                    str(s.k),
                    str(s.dim),
                    repr(float(s.eta)),
                    str(int(s.perturbed)),
                    p.estimator,
                    str(p.n),
                    str(p.trials),
                    str(p.recovered),
                    str(p.fail_empty),
                    str(p.fail_tie),
                    str(p.fail_nonbij),
                    "" if p.mean_loglik is None else repr(p.mean_loglik),
                    str(s.seed),
                ]
            )
        return rows

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.csv_rows())

    def sidecar_dict(self) -> dict:
        """Spec echo written next to the CSV; excludes timing by design."""
        return {"spec": self.spec.to_dict(), "version": __version__}


def _run_trial(
    spec: ExperimentSpec,
    truth: MixingMeasure,
    true_perm: Permutation,
    model: MixingMeasure,
    trial: int,
) -> list[tuple[str, int, EstimateOutcome]]:
    rng = np.random.default_rng([spec.seed, trial])
    n_max = spec.n_grid[-1]
    data = sample_labeled(truth, true_perm, n_max, rng)
    y = data.y
    k = spec.k
    if k > 1:
        # Draw the noise variables unconditionally so curves at different
        # noise levels share the same underlying samples.
        flip = rng.random(n_max) < spec.label_noise
        wrong = rng.integers(1, k, size=n_max)
        if spec.label_noise > 0.0:
            y = np.where(flip, (y - 1 + wrong) % k + 1, y)
    scores = model.log_scores(data.x)
    out = []
    for n in spec.n_grid:
        summary = summary_from_scores(scores[:n], y[:n], k)
        for name, estimate in _ESTIMATORS:
            out.append((name, n, estimate(summary)))
    return out


def resolve_model(spec: ExperimentSpec) -> tuple[MixingMeasure, Permutation, MixingMeasure]:
    """Truth, true assignment, and the (possibly misspecified) fitted model."""
    truth, true_perm = generate_true_mixture(spec)
    if spec.family == "custom":
        model = spec.model_mixture
    elif spec.perturbed:
        model = perturb_mixture(truth, np.random.default_rng([spec.seed, _PERTURB_STREAM]))
    else:
        model = truth
    return truth, true_perm, model


def run_recovery_experiment(spec: ExperimentSpec, threads: int = 1) -> RecoveryCurve:
    """Run every estimator over the sample-size grid for spec.trials draws.

    Each trial draws once at the largest grid size and evaluates prefixes,
    scoring the samples against the model a single time. ``threads`` only
    parallelizes trials; results are identical at any thread count.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    start = time.perf_counter()
    truth, true_perm, model = resolve_model(spec)

    if threads == 1:
        per_trial = [
            _run_trial(spec, truth, true_perm, model, t) for t in range(spec.trials)
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(
                pool.map(
                    lambda t: _run_trial(spec, truth, true_perm, model, t),
                    range(spec.trials),
                )
            )

    tally: dict[tuple[str, int], dict] = {
        (name, n): {"recovered": 0, "empty": 0, "tie": 0, "nonbij": 0, "logliks": []}
        for name, _ in _ESTIMATORS
        for n in spec.n_grid
    }
    for outcomes in per_trial:
        for name, n, outcome in outcomes:
            cell = tally[(name, n)]
            if outcome.ok and outcome.permutation == true_perm:
                cell["recovered"] += 1
            if outcome.failure == FAIL_EMPTY_REGION:
                cell["empty"] += 1
            elif outcome.failure == FAIL_MAJORITY_TIE:
                cell["tie"] += 1
            elif outcome.failure == FAIL_NON_BIJECTIVE:
                cell["nonbij"] += 1
            if outcome.log_likelihood is not None:
                cell["logliks"].append(outcome.log_likelihood)

    points = []
    for name, _ in _ESTIMATORS:
        for n in spec.n_grid:
            cell = tally[(name, n)]
            points.append(
                CurvePoint(
                    estimator=name,
                    n=n,
                    trials=spec.trials,
                    recovered=cell["recovered"],
                    fail_empty=cell["empty"],
                    fail_tie=cell["tie"],
                    fail_nonbij=cell["nonbij"],
                    mean_loglik=(
                        float(np.mean(cell["logliks"])) if cell["logliks"] else None
                    ),
                )
            )
    return RecoveryCurve(spec, tuple(points), time.perf_counter() - start)
