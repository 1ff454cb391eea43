import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import multivariate_normal, norm

from permlearn import (
    Gaussian,
    GaussianMixture,
    KernelDensity,
    LabeledData,
    MixingMeasure,
    Permutation,
    classify,
    load_mixture,
    mixture_density,
    mixture_from_dict,
    mixture_log_density,
    mixture_to_dict,
    region_of,
    sample_labeled,
    save_mixture,
)


def two_atom(mu=1.0):
    return MixingMeasure(
        [0.5, 0.5], [Gaussian([-mu], [[1.0]]), Gaussian([mu], [[1.0]])]
    )


class TestGaussian:
    def test_matches_scipy_1d(self):
        g = Gaussian([0.3], [[2.0]])
        xs = np.linspace(-4, 5, 40).reshape(-1, 1)
        expected = norm.logpdf(xs.ravel(), loc=0.3, scale=np.sqrt(2.0))
        np.testing.assert_allclose(g.log_density(xs), expected, rtol=1e-12)

    def test_matches_scipy_3d(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 3))
        cov = a @ a.T + 0.5 * np.eye(3)
        mean = rng.normal(size=3)
        g = Gaussian(mean, cov)
        xs = rng.normal(size=(25, 3))
        np.testing.assert_allclose(
            g.log_density(xs),
            multivariate_normal(mean, cov).logpdf(xs),
            rtol=1e-10,
        )

    def test_standard_normal_at_zero(self):
        assert Gaussian([0.0], [[1.0]]).density(np.array([[0.0]]))[0] == pytest.approx(
            0.3989422804014327, abs=1e-15
        )

    @pytest.mark.parametrize(
        "cov,message",
        [
            ([[1.0, 0.5], [0.4, 1.0]], "symmetric"),
            ([[1.0, 2.0], [2.0, 1.0]], "positive definite"),
            ([[np.inf]], "finite"),
        ],
    )
    def test_rejects_bad_covariance(self, cov, message):
        dim = len(cov)
        with pytest.raises(ValueError, match=message):
            Gaussian(np.zeros(dim), cov)

    def test_sampling_moments(self):
        g = Gaussian([1.0, -2.0], [[2.0, 0.6], [0.6, 1.0]])
        x = g.sample(np.random.default_rng(7), 200_000)
        np.testing.assert_allclose(x.mean(axis=0), [1.0, -2.0], atol=0.02)
        np.testing.assert_allclose(np.cov(x.T), [[2.0, 0.6], [0.6, 1.0]], atol=0.03)


class TestGaussianMixtureDensity:
    def test_mixture_of_identical_parts_collapses(self):
        part = Gaussian([0.0], [[1.0]])
        gm = GaussianMixture([0.3, 0.7], [part, part])
        xs = np.linspace(-3, 3, 11).reshape(-1, 1)
        np.testing.assert_allclose(gm.log_density(xs), part.log_density(xs), rtol=1e-12)

    def test_two_part_value(self):
        gm = GaussianMixture(
            [0.5, 0.5], [Gaussian([-1.0], [[1.0]]), Gaussian([1.0], [[1.0]])]
        )
        # 0.5 phi(-1) + 0.5 phi(1) at x = 0
        assert gm.density(np.array([[0.0]]))[0] == pytest.approx(
            0.24197072451914337, abs=1e-15
        )

    def test_sampling_hits_both_parts(self):
        gm = GaussianMixture(
            [0.2, 0.8], [Gaussian([-5.0], [[0.1]]), Gaussian([5.0], [[0.1]])]
        )
        x = gm.sample(np.random.default_rng(1), 50_000).ravel()
        frac = (x > 0).mean()
        assert frac == pytest.approx(0.8, abs=0.01)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            GaussianMixture([0.5, 0.6], [Gaussian([0.0], [[1.0]])] * 2)


class TestKernelDensity:
    def test_single_point_is_gaussian(self):
        kd = KernelDensity([[1.0, 0.0]], bandwidth=0.7)
        g = Gaussian([1.0, 0.0], 0.49 * np.eye(2))
        xs = np.random.default_rng(3).normal(size=(10, 2))
        np.testing.assert_allclose(kd.log_density(xs), g.log_density(xs), rtol=1e-12)

    def test_integrates_to_one(self):
        from scipy.integrate import quad

        kd = KernelDensity([[-1.0], [0.5], [2.0]], bandwidth=0.4)
        lo, hi = kd.envelope_1d()
        total, _ = quad(lambda x: float(kd.density(np.array([[x]]))[0]), lo, hi)
        assert total == pytest.approx(1.0, abs=1e-8)


class TestMixingMeasure:
    def test_density_is_weighted_sum(self):
        m = two_atom()
        xs = np.linspace(-3, 3, 17)
        direct = 0.5 * norm.pdf(xs, -1, 1) + 0.5 * norm.pdf(xs, 1, 1)
        np.testing.assert_allclose(mixture_density(m, xs.reshape(-1, 1)), direct, rtol=1e-12)
        np.testing.assert_allclose(
            mixture_log_density(m, xs.reshape(-1, 1)), np.log(direct), rtol=1e-12
        )

    def test_single_atom_allowed(self):
        m = MixingMeasure([1.0], [Gaussian([0.0], [[1.0]])])
        assert m.n_atoms == 1
        assert mixture_density(m, np.array([[0.0]]))[0] == pytest.approx(
            0.3989422804014327
        )

    @pytest.mark.parametrize(
        "weights",
        [[0.5, 0.4], [0.0, 1.0], [-0.1, 1.1], [0.6, 0.6]],
    )
    def test_rejects_bad_weights(self, weights):
        comps = [Gaussian([0.0], [[1.0]]), Gaussian([1.0], [[1.0]])]
        with pytest.raises(ValueError):
            MixingMeasure(weights, comps)

    def test_rejects_mixed_dims(self):
        with pytest.raises(ValueError):
            MixingMeasure(
                [0.5, 0.5], [Gaussian([0.0], [[1.0]]), Gaussian([0.0, 0.0], np.eye(2))]
            )

    def test_log_scores_shape_and_value(self):
        m = two_atom()
        s = m.log_scores(np.array([[0.0], [1.0]]))
        assert s.shape == (2, 2)
        np.testing.assert_allclose(
            s[0], np.log(0.5) + norm.logpdf([0.0, 0.0], [-1.0, 1.0], 1.0), rtol=1e-12
        )


class TestRegionsAndClassify:
    def test_region_of_tie_goes_to_lowest_index(self):
        m = two_atom()
        # symmetric measure: x = 0 is an exact tie
        assert region_of(m, np.array([[0.0]]))[0] == 1
        assert region_of(m, np.array([[-1.2]]))[0] == 1
        assert region_of(m, np.array([[0.7]]))[0] == 2

    def test_weights_shift_the_boundary(self):
        lop = MixingMeasure(
            [0.9, 0.1], [Gaussian([-1.0], [[1.0]]), Gaussian([1.0], [[1.0]])]
        )
        # at x slightly right of 0 the heavy atom still wins
        assert region_of(lop, np.array([[0.4]]))[0] == 1

    def test_classify_inverts_the_permutation(self):
        m = two_atom()
        swap = Permutation((2, 1))
        x = np.array([[-1.2], [1.2]])
        np.testing.assert_array_equal(classify(m, Permutation((1, 2)), x), [1, 2])
        np.testing.assert_array_equal(classify(m, swap, x), [2, 1])


class TestPermutation:
    def test_identity(self):
        p = Permutation.identity(4)
        assert p.to_region == (1, 2, 3, 4)
        assert p.is_identity

    def test_rejects_non_bijections(self):
        with pytest.raises(ValueError):
            Permutation((1, 1))
        with pytest.raises(ValueError):
            Permutation((0, 1))
        with pytest.raises(ValueError):
            Permutation((2, 3))

    def test_inverse_and_lookup(self):
        p = Permutation((3, 1, 2))
        assert p.region_of_label(1) == 3
        assert p.label_of_region(3) == 1
        assert p.inverse().to_region == (2, 3, 1)

    @given(st.permutations(list(range(1, 7))))
    def test_inverse_roundtrip(self, order):
        p = Permutation(tuple(order))
        assert p.inverse().inverse() == p
        for label in range(1, len(order) + 1):
            assert p.label_of_region(p.region_of_label(label)) == label

    @given(st.permutations(list(range(1, 6))))
    def test_map_labels_then_regions(self, order):
        p = Permutation(tuple(order))
        labels = np.arange(1, 6)
        np.testing.assert_array_equal(p.map_regions(p.map_labels(labels)), labels)


class TestSampling:
    def test_label_frequencies(self):
        m = MixingMeasure(
            [0.2, 0.3, 0.5],
            [Gaussian([float(i)], [[1.0]]) for i in range(3)],
        )
        data = sample_labeled(m, Permutation.identity(3), 120_000, seed=5)
        freqs = np.bincount(data.y, minlength=4)[1:] / data.n
        np.testing.assert_allclose(freqs, [0.2, 0.3, 0.5], atol=0.01)

    def test_samples_come_from_the_right_component(self):
        m = MixingMeasure(
            [0.5, 0.5], [Gaussian([-30.0], [[1.0]]), Gaussian([30.0], [[1.0]])]
        )
        data = sample_labeled(m, Permutation.identity(2), 5000, seed=0)
        signs = np.where(data.x[:, 0] > 0, 2, 1)
        np.testing.assert_array_equal(signs, data.y)

    def test_swapped_assignment_relabels(self):
        m = MixingMeasure(
            [0.5, 0.5], [Gaussian([-30.0], [[1.0]]), Gaussian([30.0], [[1.0]])]
        )
        data = sample_labeled(m, Permutation((2, 1)), 2000, seed=0)
        # label 1 now means region 2 (the +30 region)
        assert np.all(data.x[data.y == 1, 0] > 0)
        assert np.all(data.x[data.y == 2, 0] < 0)

    def test_same_seed_same_draw(self):
        m = two_atom()
        a = sample_labeled(m, Permutation.identity(2), 50, seed=9)
        b = sample_labeled(m, Permutation.identity(2), 50, seed=9)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)

    def test_prefix_of_larger_draw_matches(self):
        # nested prefixes: the first n rows of a bigger draw are the draw itself
        m = two_atom()
        small = sample_labeled(m, Permutation.identity(2), 40, seed=3)
        big = sample_labeled(m, Permutation.identity(2), 200, seed=3)
        prefix = big.prefix(40)
        assert prefix.n == 40
        # the two draws need not agree sample-for-sample; what matters is
        # that prefix slicing preserves rows of its own parent
        np.testing.assert_array_equal(prefix.x, big.x[:40])
        np.testing.assert_array_equal(prefix.y, big.y[:40])
        assert small.n == 40


class TestLabeledDataIO:
    def test_csv_roundtrip(self, tmp_path):
        m = two_atom()
        data = sample_labeled(m, Permutation.identity(2), 37, seed=1)
        path = tmp_path / "data.csv"
        data.save_csv(path)
        back = LabeledData.load_csv(path)
        np.testing.assert_allclose(back.x, data.x, rtol=1e-15)
        np.testing.assert_array_equal(back.y, data.y)

    def test_header_names_dimensions(self, tmp_path):
        data = LabeledData(np.zeros((2, 3)), np.array([1, 1]))
        path = tmp_path / "d.csv"
        data.save_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "x_1,x_2,x_3,y"

    def test_load_rejects_bad_label(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x_1,y\n0.5,0\n")
        with pytest.raises(ValueError, match=r"bad\.csv:2"):
            LabeledData.load_csv(path)


class TestMixtureJSON:
    def build(self):
        return MixingMeasure(
            [0.25, 0.75],
            [
                Gaussian([0.0, 1.0], [[1.0, 0.2], [0.2, 2.0]]),
                GaussianMixture(
                    [0.4, 0.6],
                    [Gaussian([3.0, 0.0], np.eye(2)), Gaussian([4.0, 0.5], 0.5 * np.eye(2))],
                ),
            ],
            labels=("left", "right"),
        )

    def test_dict_roundtrip(self):
        m = self.build()
        back = mixture_from_dict(mixture_to_dict(m))
        assert back.n_atoms == m.n_atoms
        np.testing.assert_array_equal(back.weights, m.weights)
        assert back.components == m.components
        assert back.labels == m.labels

    def test_file_roundtrip(self, tmp_path):
        m = self.build()
        path = tmp_path / "mix.json"
        save_mixture(m, path)
        back = load_mixture(path)
        assert back.components == m.components
        # deterministic bytes: saving again reproduces the file exactly
        text = path.read_text()
        save_mixture(back, path)
        assert path.read_text() == text

    def test_kde_roundtrip(self):
        m = MixingMeasure(
            [1.0], [KernelDensity([[0.0, 0.0], [1.0, 1.0]], bandwidth=0.3)]
        )
        back = mixture_from_dict(mixture_to_dict(m))
        assert back.components[0] == m.components[0]

    def test_from_dict_reports_path_on_error(self):
        d = mixture_to_dict(self.build())
        del d["atoms"][0]["density"]["cov"]
        with pytest.raises(ValueError, match=r"atoms\[0\]"):
            mixture_from_dict(d)
        d2 = mixture_to_dict(self.build())
        d2["atoms"][1]["density"]["type"] = "cauchy"
        with pytest.raises(ValueError, match=r"atoms\[1\].*cauchy"):
            mixture_from_dict(d2)

    def test_strict_json(self):
        text = json.dumps(mixture_to_dict(self.build()))
        json.loads(text)
