import json

import numpy as np
import pytest

from permlearn import (
    ExperimentSpec,
    Gaussian,
    GaussianMixture,
    MixingMeasure,
    Permutation,
    generate_true_mixture,
    perturb_mixture,
    run_recovery_experiment,
    tv_distance,
)
from permlearn.harness import (
    CSV_COLUMNS,
    DEFAULT_N_GRID,
    _grid_means,
    resolve_model,
)


def small_spec(**kw):
    base = dict(
        family="gaussian_grid", k=4, dim=2, eta=1.0,
        n_grid=(3, 9, 15), trials=8, seed=7,
    )
    base.update(kw)
    return ExperimentSpec(**base)


class TestSpecValidation:
    def test_defaults(self):
        s = ExperimentSpec("gaussian_grid")
        assert s.n_grid == DEFAULT_N_GRID
        assert s.n_grid[0] == 3 and s.n_grid[-1] == 99 and len(s.n_grid) == 33
        assert s.trials == 50
        assert s.label_noise == 0.0

    @pytest.mark.parametrize(
        "kw",
        [
            dict(family="unknown_family"),
            dict(family="gaussian_grid", k=1),
            dict(family="gaussian_grid", dim=1),
            dict(family="gaussian_grid", eta=0.0),
            dict(family="gaussian_grid", n_grid=()),
            dict(family="gaussian_grid", n_grid=(9, 3)),
            dict(family="gaussian_grid", n_grid=(3, 3)),
            dict(family="gaussian_grid", trials=0),
            dict(family="gaussian_grid", label_noise=1.0),
            dict(family="custom"),
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            ExperimentSpec(**kw)

    def test_custom_takes_shape_from_measures(self):
        m = MixingMeasure(
            [0.5, 0.5], [Gaussian([0.0], [[1.0]]), Gaussian([3.0], [[1.0]])]
        )
        s = ExperimentSpec("custom", true_mixture=m, model_mixture=m, n_grid=(5,))
        assert s.k == 2 and s.dim == 1

    def test_custom_shape_mismatch(self):
        a = MixingMeasure([1.0], [Gaussian([0.0], [[1.0]])])
        b = MixingMeasure(
            [0.5, 0.5], [Gaussian([0.0], [[1.0]]), Gaussian([3.0], [[1.0]])]
        )
        with pytest.raises(ValueError):
            ExperimentSpec("custom", true_mixture=a, model_mixture=b)

    def test_measures_rejected_for_synthetic(self):
        m = MixingMeasure([1.0], [Gaussian([0.0], [[1.0]])])
        with pytest.raises(ValueError):
            ExperimentSpec("gaussian_grid", true_mixture=m)

    def test_roundtrip(self):
        s = small_spec(label_noise=0.1)
        assert ExperimentSpec.from_dict(json.loads(json.dumps(s.to_dict()))) == s

    def test_custom_roundtrip(self):
        m = MixingMeasure(
            [0.5, 0.5], [Gaussian([0.0], [[1.0]]), Gaussian([3.0], [[1.0]])]
        )
        s = ExperimentSpec("custom", true_mixture=m, model_mixture=m, n_grid=(5, 10))
        back = ExperimentSpec.from_dict(json.loads(json.dumps(s.to_dict())))
        assert back.true_mixture.components == m.components
        assert back.k == 2


class TestGeneration:
    @pytest.mark.parametrize("k,side", [(2, 2), (4, 2), (9, 3), (16, 4)])
    def test_grid_is_centered_with_unit_spacing(self, k, side):
        means = _grid_means(k, 2)
        np.testing.assert_allclose(means.mean(axis=0), 0.0, atol=1e-12)
        # nearest-neighbour distance is exactly 1 before scaling
        dists = [
            np.linalg.norm(means[i] - means[j])
            for i in range(k)
            for j in range(i + 1, k)
        ]
        assert min(dists) == pytest.approx(1.0)
        assert means[:, 0].max() - means[:, 0].min() == side - 1

    def test_eta_scales_means_not_covariances(self):
        wide, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=4, seed=3, eta=1.0))
        tight, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=4, seed=3, eta=0.5))
        np.testing.assert_allclose(
            np.array([c.mean for c in tight.components]),
            0.5 * np.array([c.mean for c in wide.components]),
            atol=1e-12,
        )
        for a, b in zip(wide.components, tight.components):
            np.testing.assert_array_equal(a.cov, b.cov)

    def test_true_assignment_is_identity(self):
        _, perm = generate_true_mixture(ExperimentSpec("gaussian_grid", k=9, seed=0))
        assert perm == Permutation.identity(9)

    def test_same_seed_same_measure(self):
        spec = ExperimentSpec("gaussian_grid", k=4, seed=5)
        a, _ = generate_true_mixture(spec)
        b, _ = generate_true_mixture(spec)
        assert a.components == b.components
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_neighbouring_atoms_nearly_disjoint(self):
        # the covariance ceiling keeps pairwise overlap small at eta = 1
        truth, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=4, seed=1))
        min_tv = min(
            tv_distance(
                truth.components[i], truth.components[j], method="mc",
                mc_samples=20_000, seed=10 * i + j,
            ).value
            for i in range(4)
            for j in range(i + 1, 4)
        )
        assert min_tv > 0.9

    def test_nested_family_atoms_are_mixtures(self):
        truth, _ = generate_true_mixture(
            ExperimentSpec("mixture_of_mixtures", k=4, seed=2)
        )
        assert all(isinstance(c, GaussianMixture) for c in truth.components)
        assert all(len(c.parts) == 3 for c in truth.components)

    def test_dim_padding(self):
        truth, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=4, dim=10, seed=0))
        means = np.array([c.mean for c in truth.components])
        assert means.shape == (4, 10)
        np.testing.assert_array_equal(means[:, 2:], 0.0)
        assert truth.components[0].cov.shape == (10, 10)


class TestPerturbation:
    def test_zero_scale_without_flags_is_identity(self):
        base, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=4, seed=5))
        p = perturb_mixture(
            base, 42, mean_shift_scale=0.0, scale_covariances=False, jitter_weights=False
        )
        assert p.components == base.components
        np.testing.assert_array_equal(p.weights, base.weights)

    def test_shift_path_is_linear_in_scale(self):
        base, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=4, seed=5))
        p1 = perturb_mixture(base, 42, mean_shift_scale=0.1, scale_covariances=False, jitter_weights=False)
        p3 = perturb_mixture(base, 42, mean_shift_scale=0.3, scale_covariances=False, jitter_weights=False)
        for b, a1, a3 in zip(base.components, p1.components, p3.components):
            np.testing.assert_allclose(
                a3.mean - b.mean, 3.0 * (a1.mean - b.mean), rtol=1e-12
            )

    def test_covariance_factors(self):
        base, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=8, seed=1))
        p = perturb_mixture(base, 0, mean_shift_scale=0.0, jitter_weights=False)
        factors = {
            round(float(a.cov[0, 0] / b.cov[0, 0]), 6)
            for a, b in zip(p.components, base.components)
        }
        assert factors <= {0.5, 2.0}
        assert len(factors) == 2  # both halving and doubling occur across 8 atoms

    def test_weight_jitter_stays_normalized(self):
        base, _ = generate_true_mixture(ExperimentSpec("gaussian_grid", k=4, seed=9))
        p = perturb_mixture(base, 3)
        assert p.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert not np.allclose(p.weights, base.weights)

    def test_nested_atoms_supported(self):
        base, _ = generate_true_mixture(ExperimentSpec("mixture_of_mixtures", k=4, seed=2))
        p = perturb_mixture(base, 1)
        assert all(isinstance(c, GaussianMixture) for c in p.components)

    def test_kde_atom_rejected(self):
        from permlearn import KernelDensity

        m = MixingMeasure([1.0], [KernelDensity([[0.0]], bandwidth=1.0)])
        with pytest.raises(ValueError, match="Gaussian"):
            perturb_mixture(m, 0)


class TestRunExperiment:
    def test_reruns_are_identical(self):
        spec = small_spec()
        a = run_recovery_experiment(spec)
        b = run_recovery_experiment(spec)
        assert a.points == b.points

    def test_thread_count_does_not_change_results(self):
        spec = small_spec(trials=12)
        a = run_recovery_experiment(spec, threads=1)
        b = run_recovery_experiment(spec, threads=4)
        assert a.points == b.points

    def test_easy_problem_recovers(self):
        curve = run_recovery_experiment(small_spec(n_grid=(24,), trials=10))
        assert curve.recovery_fraction("mle")[0] == 1.0

    def test_label_noise_hurts(self):
        clean = run_recovery_experiment(small_spec(n_grid=(6,), trials=40))
        noisy = run_recovery_experiment(
            small_spec(n_grid=(6,), trials=40, label_noise=0.6)
        )
        assert noisy.recovery_fraction("mle")[0] < clean.recovery_fraction("mle")[0]

    def test_perturbed_family_uses_misspecified_model(self):
        spec = small_spec(family="gaussian_grid_perturbed")
        truth, _, model = resolve_model(spec)
        assert model.components != truth.components
        curve = run_recovery_experiment(spec)
        assert len(curve.points) == 3 * len(spec.n_grid)

    def test_curve_shape_and_counts(self):
        spec = small_spec(trials=6)
        curve = run_recovery_experiment(spec)
        assert {p.estimator for p in curve.points} == {"mle", "mv", "greedy"}
        for p in curve.points:
            assert p.trials == 6
            assert 0 <= p.recovered <= 6
            assert p.fail_empty + p.fail_tie + p.fail_nonbij <= 6
        mle_points = [p for p in curve.points if p.estimator == "mle"]
        assert [p.n for p in mle_points] == list(spec.n_grid)
        # the matching estimator never reports a failure
        assert all(
            p.fail_empty == p.fail_tie == p.fail_nonbij == 0 for p in mle_points
        )

    def test_mean_loglik_blank_when_all_fail(self):
        # a single sample cannot populate every region for majority vote
        curve = run_recovery_experiment(small_spec(n_grid=(1, 9), trials=5))
        mv1 = next(p for p in curve.points if p.estimator == "mv" and p.n == 1)
        assert mv1.fail_empty == 5
        assert mv1.mean_loglik is None

    def test_custom_family(self):
        truth = MixingMeasure(
            [0.5, 0.5], [Gaussian([-3.0], [[1.0]]), Gaussian([3.0], [[1.0]])]
        )
        spec = ExperimentSpec(
            "custom", true_mixture=truth, model_mixture=truth, n_grid=(10,), trials=5
        )
        curve = run_recovery_experiment(spec)
        assert curve.recovery_fraction("mle")[0] == 1.0


class TestCsvFormat:
    def test_columns_and_rows(self, tmp_path):
        spec = small_spec(trials=4)
        curve = run_recovery_experiment(spec)
        rows = curve.csv_rows()
        assert rows[0] == CSV_COLUMNS
        assert len(rows) == 1 + 3 * len(spec.n_grid)
        first = dict(zip(rows[0], rows[1]))
        assert first["family"] == "gaussian_grid"
        assert first["K"] == "4"
        assert first["eta"] == "1.0"
        assert first["perturbed"] == "0"
        assert first["seed"] == "7"

    def test_file_bytes_stable(self, tmp_path):
        curve = run_recovery_experiment(small_spec(trials=4))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        curve.to_csv(p1)
        run_recovery_experiment(small_spec(trials=4), threads=3).to_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_sidecar_has_no_timing(self):
        curve = run_recovery_experiment(small_spec(trials=2))
        side = curve.sidecar_dict()
        assert set(side) == {"spec", "version"}
        assert curve.wall_time_s > 0.0
