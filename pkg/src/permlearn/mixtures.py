"""Mixing measures on R^d: component densities, decision regions, classifiers.

A mixing measure is a finite weighted collection of probability densities
(atoms). It induces a mixture density, a partition of R^d into decision
regions (one region per atom, by largest weighted density) and, combined with
an assignment of class labels to regions, a classifier.

Class labels and region indices are 1-based everywhere in the public API;
0-based indices appear only in private numpy internals. All density math runs
in the log domain with log-sum-exp to survive high dimensions.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

__all__ = [
    "ComponentDensity",
    "Gaussian",
    "GaussianMixture",
    "KernelDensity",
    "MixingMeasure",
    "Permutation",
    "LabeledSample",
    "LabeledData",
    "mixture_density",
    "mixture_log_density",
    "region_of",
    "classify",
    "sample_labeled",
    "mixture_to_dict",
    "mixture_from_dict",
    "save_mixture",
    "load_mixture",
]

_LOG_2PI = math.log(2.0 * math.pi)

# Half-width of the 1-d integration envelope, in standard deviations. Mass
# beyond it is ~1e-23 and irrelevant at the tolerances used anywhere here.
ENVELOPE_SIGMAS = 10.0

WEIGHT_SUM_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_points(x: ArrayLike, dim: int) -> tuple[NDArray[np.float64], bool]:
    """Coerce a single point or a batch to (n, dim); flag whether to squeeze."""
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0 and dim == 1:
        return pts.reshape(1, 1), True
    if pts.ndim == 1:
        if pts.shape[0] != dim:
            raise ValueError(f"point has dimension {pts.shape[0]}, expected {dim}")
        return pts.reshape(1, dim), True
    if pts.ndim == 2:
        if pts.shape[1] != dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {dim}")
        return pts, False
    raise ValueError("expected a point (d,) or a batch of points (n, d)")


class ComponentDensity:
    """A strictly positive, sampleable probability density on R^d.

    Concrete variants: :class:`Gaussian`, :class:`GaussianMixture`,
    :class:`KernelDensity`. All are immutable after construction and safe to
    share across threads; sampling takes an explicit generator.
    """

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def log_density(self, x: ArrayLike) -> NDArray[np.float64] | float:
        """Log density at a point (d,) or batch (n, d); returns float or (n,)."""
        raise NotImplementedError

    def density(self, x: ArrayLike) -> NDArray[np.float64] | float:
        return np.exp(self.log_density(x))

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        """Draw n points, shape (n, dim)."""
        raise NotImplementedError

    def envelope_1d(self) -> tuple[float, float]:
        """Interval holding all but negligible mass (1-d densities only)."""
        raise NotImplementedError


class Gaussian(ComponentDensity):
    """Multivariate normal with full covariance.

    The covariance is Cholesky-factorized once at construction, so
    non-positive-definite input fails immediately instead of at first use.
    """

    def __init__(self, mean: ArrayLike, cov: ArrayLike):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if mean.ndim != 1 or mean.size == 0:
            raise ValueError("mean must be a nonempty vector")
        cov = np.asarray(cov, dtype=float)
        if cov.ndim == 0:
            cov = cov.reshape(1, 1)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"covariance shape {cov.shape} does not match mean of size {mean.size}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance is not positive definite") from None
        self._mean = _frozen(mean.copy())
        self._cov = _frozen(cov.copy())
        self._chol = _frozen(chol)
        self._log_norm = float(
            -0.5 * mean.size * _LOG_2PI - np.log(np.diag(chol)).sum()
        )

    @property
    def dim(self) -> int:
        return self._mean.size

    @property
    def mean(self) -> NDArray[np.float64]:
        return self._mean

    @property
    def cov(self) -> NDArray[np.float64]:
        return self._cov

    def log_density(self, x: ArrayLike):
        pts, squeeze = _as_points(x, self.dim)
        z = solve_triangular(self._chol, (pts - self._mean).T, lower=True)
        out = self._log_norm - 0.5 * np.einsum("dn,dn->n", z, z)
        return float(out[0]) if squeeze else out

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        z = rng.standard_normal((n, self.dim))
        return self._mean + z @ self._chol.T

    def envelope_1d(self) -> tuple[float, float]:
        if self.dim != 1:
            raise ValueError("envelope_1d is only defined for 1-d densities")
        m = float(self._mean[0])
        half = ENVELOPE_SIGMAS * math.sqrt(float(self._cov[0, 0]))
        return m - half, m + half

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gaussian):
            return NotImplemented
        return np.array_equal(self._mean, other._mean) and np.array_equal(
            self._cov, other._cov
        )

    def __repr__(self) -> str:
        return f"Gaussian(mean={self._mean.tolist()}, cov={self._cov.tolist()})"


class GaussianMixture(ComponentDensity):
    """A single density that is itself a finite mixture of Gaussians.

    Used as one atom of a mixing measure (nothing stops an atom from being a
    mixture). Nested weights may be zero but must sum to 1.
    """

    def __init__(self, weights: ArrayLike, parts: Sequence[Gaussian]):
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        parts = tuple(parts)
        if weights.ndim != 1 or len(parts) != weights.size or not parts:
            raise ValueError("need one weight per Gaussian part, at least one part")
        if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
            raise ValueError("nested weights must be nonnegative and finite")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("nested weights must sum to 1 within 1e-12")
        if not all(isinstance(p, Gaussian) for p in parts):
            raise ValueError("parts must be Gaussian densities")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise ValueError("all parts must share one dimension")
        self._weights = _frozen(weights.copy())
        self._parts = parts

    @property
    def dim(self) -> int:
        return self._parts[0].dim

    @property
    def weights(self) -> NDArray[np.float64]:
        return self._weights

    @property
    def parts(self) -> tuple[Gaussian, ...]:
        return self._parts

    def log_density(self, x: ArrayLike):
        pts, squeeze = _as_points(x, self.dim)
        per_part = np.stack([p.log_density(pts) for p in self._parts], axis=1)
        out = logsumexp(per_part, axis=1, b=self._weights[np.newaxis, :])
        return float(out[0]) if squeeze else out

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        out = np.empty((n, self.dim))
        which = rng.choice(len(self._parts), size=n, p=self._weights)
        for j, part in enumerate(self._parts):
            mask = which == j
            cnt = int(mask.sum())
            if cnt:
                out[mask] = part.sample(rng, cnt)
        return out

    def envelope_1d(self) -> tuple[float, float]:
        if self.dim != 1:
            raise ValueError("envelope_1d is only defined for 1-d densities")
        bounds = [p.envelope_1d() for p in self._parts]
        return min(lo for lo, _ in bounds), max(hi for _, hi in bounds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianMixture):
            return NotImplemented
        return (
            np.array_equal(self._weights, other._weights)
            and self._parts == other._parts
        )

    def __repr__(self) -> str:
        return f"GaussianMixture({len(self._parts)} parts, dim={self.dim})"


class KernelDensity(ComponentDensity):
    """Equal-weight isotropic Gaussian kernels centered on stored points.

    Bandwidth is caller-supplied; there is deliberately no automatic rule.
    """

    def __init__(self, points: ArrayLike, bandwidth: float):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("points must be a nonempty (m, d) array")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        bandwidth = float(bandwidth)
        if not (bandwidth > 0.0 and math.isfinite(bandwidth)):
            raise ValueError("bandwidth must be a positive finite scalar")
        self._points = _frozen(points.copy())
        self._bandwidth = bandwidth

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    @property
    def points(self) -> NDArray[np.float64]:
        return self._points

    @property
    def bandwidth(self) -> float:
        return self._bandwidth

    def log_density(self, x: ArrayLike):
        pts, squeeze = _as_points(x, self.dim)
        sq = cdist(pts, self._points, "sqeuclidean")
        h = self._bandwidth
        out = logsumexp(-0.5 * sq / (h * h), axis=1)
        out += -math.log(self._points.shape[0]) - self.dim * (
            math.log(h) + 0.5 * _LOG_2PI
        )
        return float(out[0]) if squeeze else out

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        idx = rng.integers(0, self._points.shape[0], size=n)
        noise = rng.standard_normal((n, self.dim))
        return self._points[idx] + self._bandwidth * noise

    def envelope_1d(self) -> tuple[float, float]:
        if self.dim != 1:
            raise ValueError("envelope_1d is only defined for 1-d densities")
        half = ENVELOPE_SIGMAS * self._bandwidth
        return float(self._points.min()) - half, float(self._points.max()) + half

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KernelDensity):
            return NotImplemented
        return (
            self._bandwidth == other._bandwidth
            and np.array_equal(self._points, other._points)
        )

    def __repr__(self) -> str:
        return (
            f"KernelDensity({self._points.shape[0]} points, dim={self.dim}, "
            f"bandwidth={self._bandwidth})"
        )


class MixingMeasure:
    """K weighted density atoms: the statistical parameter of the model.

    ``weights[b-1]`` and ``components[b-1]`` belong to region index b. Atom
    weights must be strictly positive and sum to 1. ``labels`` is an optional
    display-name table for classes 1..K; it never affects computation.
    """

    def __init__(
        self,
        weights: ArrayLike,
        components: Sequence[ComponentDensity],
        labels: Sequence[str] | None = None,
    ):
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        components = tuple(components)
        if weights.ndim != 1 or not components or weights.size != len(components):
            raise ValueError("need one weight per component, at least one atom")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise ValueError("weights must be finite and strictly positive")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        if not all(isinstance(c, ComponentDensity) for c in components):
            raise ValueError("components must be ComponentDensity instances")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise ValueError("components must all share one dimension")
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != len(components):
                raise ValueError("labels must name each of the K classes")
        self._weights = _frozen(weights.copy())
        self._components = components
        self._labels = labels
        self._log_weights = _frozen(np.log(weights))

    @property
    def n_atoms(self) -> int:
        return len(self._components)

    @property
    def dim(self) -> int:
        return self._components[0].dim

    @property
    def weights(self) -> NDArray[np.float64]:
        return self._weights

    @property
    def components(self) -> tuple[ComponentDensity, ...]:
        return self._components

    @property
    def labels(self) -> tuple[str, ...] | None:
        return self._labels

    def log_scores(self, x: ArrayLike) -> NDArray[np.float64]:
        """log(weight_b) + log f_b(x) for every atom b.

        Returns shape (K,) for a single point, (n, K) for a batch. This is
        the shared primitive behind densities, regions and likelihoods.
        """
        pts, squeeze = _as_points(x, self.dim)
        cols = [c.log_density(pts) for c in self._components]
        scores = np.stack(cols, axis=1) + self._log_weights[np.newaxis, :]
        return scores[0] if squeeze else scores

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixingMeasure):
            return NotImplemented
        return (
            np.array_equal(self._weights, other._weights)
            and self._components == other._components
            and self._labels == other._labels
        )

    def __repr__(self) -> str:
        return f"MixingMeasure(K={self.n_atoms}, dim={self.dim})"


@dataclass(frozen=True)
class Permutation:
    """A bijection assigning class labels 1..K to region indices 1..K.

    ``to_region[k-1]`` is the region index of class k.
    """

    to_region: tuple[int, ...]

    def __post_init__(self):
        k = len(self.to_region)
        normalized = tuple(int(v) for v in self.to_region)
        object.__setattr__(self, "to_region", normalized)
        if k == 0 or sorted(normalized) != list(range(1, k + 1)):
            raise ValueError(f"not a permutation of 1..{k}: {self.to_region}")

    @staticmethod
    def identity(k: int) -> "Permutation":
        return Permutation(tuple(range(1, k + 1)))

    @property
    def size(self) -> int:
        return len(self.to_region)

    @cached_property
    def _from_region(self) -> tuple[int, ...]:
        inv = [0] * self.size
        for k, b in enumerate(self.to_region, start=1):
            inv[b - 1] = k
        return tuple(inv)

    @property
    def is_identity(self) -> bool:
        return self.to_region == tuple(range(1, self.size + 1))

    def region_of_label(self, label: int) -> int:
        return self.to_region[label - 1]

    def label_of_region(self, region: int) -> int:
        return self._from_region[region - 1]

    def map_labels(self, labels: ArrayLike) -> NDArray[np.int64]:
        """Vectorized label -> region lookup (both 1-based)."""
        arr = np.asarray(self.to_region, dtype=np.int64)
        return arr[np.asarray(labels, dtype=np.int64) - 1]

    def map_regions(self, regions: ArrayLike) -> NDArray[np.int64]:
        """Vectorized region -> label lookup (both 1-based)."""
        arr = np.asarray(self._from_region, dtype=np.int64)
        return arr[np.asarray(regions, dtype=np.int64) - 1]

    def inverse(self) -> "Permutation":
        return Permutation(self._from_region)


@dataclass(frozen=True)
class LabeledSample:
    """One observation: a point x in R^d with its class label in 1..K."""

    x: tuple[float, ...]
    y: int

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(np.asarray(self.x, dtype=float)))
        if not all(math.isfinite(v) for v in x):
            raise ValueError("sample point must be finite")
        y = int(self.y)
        if y < 1:
            raise ValueError("class label must be a positive integer")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


class LabeledData:
    """A column-store dataset of labeled samples: x (n, d), y (n,) in 1..K."""

    def __init__(self, x: ArrayLike, y: ArrayLike):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise ValueError("x must be an (n, d) array")
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValueError("y must be a vector aligned with x")
        if y.size and (not np.issubdtype(y.dtype, np.number) or np.any(y % 1 != 0)):
            raise ValueError("labels must be integers")
        y = y.astype(np.int64)
        if np.any(y < 1):
            raise ValueError("labels must be in 1..K")
        if not np.all(np.isfinite(x)):
            raise ValueError("sample points must be finite")
        self._x = _frozen(x.copy())
        self._y = _frozen(y.copy())

    @classmethod
    def from_samples(
        cls, samples: Iterable[LabeledSample | tuple[ArrayLike, int]]
    ) -> "LabeledData":
        xs, ys = [], []
        for s in samples:
            if isinstance(s, LabeledSample):
                xs.append(s.x)
                ys.append(s.y)
            else:
                point, label = s
                xs.append(np.atleast_1d(np.asarray(point, dtype=float)))
                ys.append(int(label))
        if not xs:
            raise ValueError("empty dataset")
        return cls(np.vstack([np.reshape(p, (1, -1)) for p in xs]), np.array(ys))

    @property
    def x(self) -> NDArray[np.float64]:
        return self._x

    @property
    def y(self) -> NDArray[np.int64]:
        return self._y

    @property
    def n(self) -> int:
        return self._x.shape[0]

    @property
    def dim(self) -> int:
        return self._x.shape[1]

    def prefix(self, n: int) -> "LabeledData":
        """The first n samples, preserving order (sample-size sweeps)."""
        if not 0 <= n <= self.n:
            raise ValueError(f"prefix length {n} out of range 0..{self.n}")
        return LabeledData(self._x[:n], self._y[:n])

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        for i in range(self.n):
            yield LabeledSample(tuple(self._x[i]), int(self._y[i]))

    def save_csv(self, path: str | os.PathLike) -> None:
        """Write as CSV with header x_1,...,x_d,y (labels 1-based)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"x_{j + 1}" for j in range(self.dim)] + ["y"])
            for i in range(self.n):
                writer.writerow([repr(float(v)) for v in self._x[i]] + [int(self._y[i])])

    @classmethod
    def load_csv(cls, path: str | os.PathLike) -> "LabeledData":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty file") from None
            dim = len(header) - 1
            expected = [f"x_{j + 1}" for j in range(dim)] + ["y"]
            if dim < 1 or header != expected:
                raise ValueError(
                    f"{path}: header must be x_1,...,x_d,y; got {header}"
                )
            xs, ys = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != dim + 1:
                    raise ValueError(f"{path}:{lineno}: expected {dim + 1} fields")
                try:
                    point = [float(v) for v in row[:dim]]
                    label = int(row[dim])
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: malformed row") from None
                if not all(math.isfinite(v) for v in point):
                    raise ValueError(f"{path}:{lineno}: non-finite coordinate")
                if label < 1:
                    raise ValueError(f"{path}:{lineno}: label must be >= 1")
                xs.append(point)
                ys.append(label)
        if not xs:
            raise ValueError(f"{path}: no data rows")
        return cls(np.array(xs), np.array(ys))


def mixture_log_density(measure: MixingMeasure, x: ArrayLike):
    """log m(x) where m = sum_b weight_b f_b, via log-sum-exp."""
    scores = measure.log_scores(x)
    return logsumexp(scores, axis=-1)


def mixture_density(measure: MixingMeasure, x: ArrayLike):
    """Mixture density sum_b weight_b f_b(x)."""
    return np.exp(mixture_log_density(measure, x))


def region_of(measure: MixingMeasure, x: ArrayLike):
    """Index of the decision region containing x (1-based).

    Region b is where weight_b f_b dominates every other atom; exact ties go
    to the lowest index so the map is total.
    """
    scores = measure.log_scores(x)
    idx = np.argmax(scores, axis=-1) + 1
    if np.ndim(idx) == 0:
        return int(idx)
    return idx.astype(np.int64)


def classify(measure: MixingMeasure, perm: Permutation, x: ArrayLike):
    """Class label assigned to x: the inverse permutation of its region."""
    if perm.size != measure.n_atoms:
        raise ValueError("permutation size does not match the measure")
    region = region_of(measure, x)
    if np.ndim(region) == 0:
        return perm.label_of_region(int(region))
    return perm.map_regions(region)


def sample_labeled(
    measure: MixingMeasure,
    perm: Permutation,
    n: int,
    seed: int | np.random.Generator | np.random.SeedSequence,
) -> LabeledData:
    """Draw n labeled samples: Y ~ weights, X ~ component assigned via perm.

    The draw for sample i is independent of n, so ``result.prefix(m)`` is a
    valid size-m dataset from the same model. Deterministic given the seed.
    """
    if perm.size != measure.n_atoms:
        raise ValueError("permutation size does not match the measure")
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    k = measure.n_atoms
    y0 = rng.choice(k, size=n, p=measure.weights)
    x = np.empty((n, measure.dim))
    for k0 in range(k):
        mask = y0 == k0
        cnt = int(mask.sum())
        if cnt:
            comp = measure.components[perm.region_of_label(k0 + 1) - 1]
            x[mask] = comp.sample(rng, cnt)
    return LabeledData(x, y0 + 1)


# --- JSON mixture format ----------------------------------------------------
#
# {"dim": d,
#  "atoms": [{"weight": w, "density": {...}}, ...],
#  "labels": ["name1", ...]}           # optional
#
# density objects:
#   {"type": "gaussian", "mean": [...], "cov": [[...], ...]}
#   {"type": "gaussian_mixture",
#    "components": [{"weight": w, "mean": [...], "cov": [[...]]}, ...]}
#   {"type": "kde", "points": [[...], ...], "bandwidth": h}


def _density_to_dict(density: ComponentDensity) -> dict:
    if isinstance(density, Gaussian):
        return {
            "type": "gaussian",
            "mean": density.mean.tolist(),
            "cov": density.cov.tolist(),
        }
    if isinstance(density, GaussianMixture):
        return {
            "type": "gaussian_mixture",
            "components": [
                {"weight": float(w), "mean": p.mean.tolist(), "cov": p.cov.tolist()}
                for w, p in zip(density.weights, density.parts)
            ],
        }
    if isinstance(density, KernelDensity):
        return {
            "type": "kde",
            "points": density.points.tolist(),
            "bandwidth": density.bandwidth,
        }
    raise ValueError(f"unsupported density type {type(density).__name__}")


def _density_from_dict(obj: dict, where: str) -> ComponentDensity:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError(f"{where}: density must be an object with a 'type' key")
    kind = obj["type"]
    try:
        if kind == "gaussian":
            return Gaussian(obj["mean"], obj["cov"])
        if kind == "gaussian_mixture":
            comps = obj["components"]
            if not isinstance(comps, list) or not comps:
                raise ValueError("'components' must be a nonempty list")
            weights = [c["weight"] for c in comps]
            parts = [Gaussian(c["mean"], c["cov"]) for c in comps]
            return GaussianMixture(weights, parts)
        if kind == "kde":
            return KernelDensity(obj["points"], obj["bandwidth"])
    except KeyError as exc:
        raise ValueError(f"{where}: missing density field {exc}") from None
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from None
    raise ValueError(f"{where}: unknown density type {kind!r}")


def mixture_to_dict(measure: MixingMeasure) -> dict:
    out = {
        "dim": measure.dim,
        "atoms": [
            {"weight": float(w), "density": _density_to_dict(c)}
            for w, c in zip(measure.weights, measure.components)
        ],
    }
    if measure.labels is not None:
        out["labels"] = list(measure.labels)
    return out


def mixture_from_dict(obj: dict) -> MixingMeasure:
    if not isinstance(obj, dict):
        raise ValueError("mixture spec must be a JSON object")
    atoms = obj.get("atoms")
    if not isinstance(atoms, list) or not atoms:
        raise ValueError("mixture spec needs a nonempty 'atoms' list")
    weights, components = [], []
    for i, atom in enumerate(atoms):
        where = f"atoms[{i}]"
        if not isinstance(atom, dict) or "weight" not in atom or "density" not in atom:
            raise ValueError(f"{where}: each atom needs 'weight' and 'density'")
        weights.append(atom["weight"])
        components.append(_density_from_dict(atom["density"], where + ".density"))
    measure = MixingMeasure(weights, components, labels=obj.get("labels"))
    declared = obj.get("dim")
    if declared is not None and int(declared) != measure.dim:
        raise ValueError(
            f"declared dim {declared} does not match components (dim {measure.dim})"
        )
    return measure


def save_mixture(measure: MixingMeasure, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(mixture_to_dict(measure), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_mixture(path: str | os.PathLike) -> MixingMeasure:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
    return mixture_from_dict(obj)
