import math
import warnings

import numpy as np
import pytest

from hifdetect.dataio import ClassCode, DataMatrix, Normalizer
from hifdetect.errors import DataFormatError, IllConditionedError, InvalidInputError
from hifdetect.hifsim import ArcScenario, generate_dataset
from hifdetect.numerics import f_quantile, make_rng
from hifdetect.pca import (
    PcaModel,
    detect,
    fit_pca,
    load_pca,
    project,
    save_pca,
    t2_statistic,
    t2_threshold,
)


def toy_matrix(n=40, m=6, seed=0, labels=None):
    rng = make_rng(seed)
    x = rng.normal(size=(n, m))
    names = tuple(f"ch{k}" for k in range(m))
    return DataMatrix(x, names, labels)


@pytest.fixture(scope="module")
def synth():
    ds = generate_dataset(
        [
            (ArcScenario(), 160),
            (ArcScenario(fault_location=ClassCode.FAULT_A), 100),
        ],
        seed=2024,
    )
    x = ds.observations
    names = ds.channel_names
    train = DataMatrix(x[:60], names)
    test_normal = x[60:160]
    test_fault = x[160:]
    return train, test_normal, test_fault


@pytest.fixture(scope="module")
def model(synth):
    train, _, _ = synth
    return fit_pca(train, 0.98)


class TestFit:
    def test_rank_one_data_retains_one_component(self):
        rng = make_rng(3)
        x = np.ones((30, 5))
        x[:, 0] = rng.normal(size=30)
        dm = DataMatrix(x, tuple(f"ch{k}" for k in range(5)))
        for target in (0.2, 0.98, 1.0):
            m = fit_pca(dm, target)
            assert m.a == 1
            assert abs(abs(m.loadings[0, 0]) - 1.0) < 1e-9
            assert np.all(np.abs(m.loadings[1:, 0]) < 1e-6)

    def test_full_target_retains_rank(self):
        rng = make_rng(8)
        factors = rng.normal(size=(50, 2))
        mix = rng.normal(size=(2, 6))
        dm = DataMatrix(factors @ mix, tuple(f"ch{k}" for k in range(6)))
        assert fit_pca(dm, 1.0).a == 2
        full = toy_matrix(n=50, m=4, seed=9)
        assert fit_pca(full, 1.0).a == 4

    def test_default_synthetic_capture(self, model):
        # few components explain nearly all normal-condition variance
        assert model.variance_captured >= 0.98
        assert model.a <= 5

    def test_loadings_orthonormal(self, model):
        gram = model.loadings.T @ model.loadings
        assert np.allclose(gram, np.eye(model.a), atol=1e-10)

    def test_rejects_fault_labels(self):
        labels = np.zeros(40, dtype=np.int64)
        labels[3] = 2
        with pytest.raises(InvalidInputError):
            fit_pca(toy_matrix(labels=labels), 0.98)

    def test_rejects_tiny_sets_and_bad_targets(self):
        with pytest.raises(InvalidInputError):
            fit_pca(toy_matrix(n=1), 0.98)
        with pytest.raises(InvalidInputError):
            fit_pca(toy_matrix(), 0.0)
        with pytest.raises(InvalidInputError):
            fit_pca(toy_matrix(), 1.2)

    def test_warns_when_rows_below_channels(self):
        with pytest.warns(UserWarning):
            fit_pca(toy_matrix(n=4, m=6), 0.98)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            fit_pca(toy_matrix(n=40, m=6), 0.98)


class TestProject:
    def test_training_means_score_zero(self, model):
        score = project(model, model.normalizer.means)
        assert score.shape == (model.a,)
        assert np.all(score == 0.0)

    def test_first_direction_scales_to_sigma(self, model):
        n = model.n_train
        sigma1 = model.singular_values[0]
        z = sigma1 * math.sqrt(n - 1.0) * model.loadings[:, 0]
        x = model.normalizer.means + model.normalizer.stds * z
        score = project(model, x)
        assert abs(score[0] - sigma1 * math.sqrt(n - 1.0)) < 1e-9 * score[0]
        assert np.all(np.abs(score[1:]) < 1e-9 * abs(score[0]))

    def test_training_score_covariance_is_sigma_squared(self, synth, model):
        train, _, _ = synth
        scores = np.array([project(model, row) for row in train.observations])
        cov = np.cov(scores, rowvar=False, ddof=1)
        cov = np.atleast_2d(cov)
        expect = np.diag(model.singular_values**2)
        assert np.allclose(cov, expect, atol=1e-9 * expect[0, 0])

    def test_dimension_mismatch(self, model):
        with pytest.raises(InvalidInputError):
            project(model, np.zeros(5))


class TestT2:
    def test_zero_at_training_means(self, model):
        assert t2_statistic(model, model.normalizer.means) == 0.0

    def test_nonnegative_everywhere(self, model):
        rng = make_rng(77)
        m = model.loadings.shape[0]
        for _ in range(50):
            x = model.normalizer.means * (1.0 + 0.1 * rng.normal(size=m))
            assert t2_statistic(model, x) >= 0.0

    def test_training_mean_t2_near_retained_count(self, synth, model):
        train, _, _ = synth
        vals = [t2_statistic(model, row) for row in train.observations]
        assert abs(np.mean(vals) - model.a) < 0.1 * model.a

    def test_tiny_singular_value_rejected(self):
        bad = PcaModel(
            normalizer=Normalizer(means=np.zeros(3), stds=np.ones(3)),
            loadings=np.eye(3, 1),
            singular_values=np.array([1e-15]),
            a=1,
            n_train=10,
            variance_captured=1.0,
        )
        with pytest.raises(IllConditionedError):
            t2_statistic(bad, np.zeros(3))

    def test_invariant_to_channel_rescaling(self, synth):
        train, test_normal, test_fault = synth
        m = train.observations.shape[1]
        rng = make_rng(5)
        scale = rng.uniform(0.1, 10.0, m)
        shift = rng.uniform(-3.0, 3.0, m)
        scaled_train = DataMatrix(
            train.observations * scale + shift, train.channel_names
        )
        model_a = fit_pca(train, 0.98)
        model_b = fit_pca(scaled_train, 0.98)
        for row in np.vstack([test_normal[:10], test_fault[:10]]):
            ta = t2_statistic(model_a, row)
            tb = t2_statistic(model_b, row * scale + shift)
            assert abs(ta - tb) <= 1e-8 * max(1.0, ta)


def fake_model(a, n, m=29):
    loadings = np.zeros((m, a))
    loadings[:a, :a] = np.eye(a)
    return PcaModel(
        normalizer=Normalizer(means=np.zeros(m), stds=np.ones(m)),
        loadings=loadings,
        singular_values=np.ones(a),
        a=a,
        n_train=n,
        variance_captured=0.99,
    )


class TestThreshold:
    def test_coefficient_times_f_quantile(self):
        thr = t2_threshold(fake_model(5, 60), 0.001)
        coeff = 5.0 * 59.0 * 61.0 / (60.0 * 55.0)
        assert abs(coeff - 17995.0 / 3300.0) < 1e-12
        expect = coeff * f_quantile(0.999, 5, 55)
        assert abs(thr - expect) <= 1e-12 * expect

    def test_monotone_in_alpha(self):
        model = fake_model(5, 60)
        alphas = [0.001, 0.01, 0.05, 0.25, 0.9]
        thrs = [t2_threshold(model, al) for al in alphas]
        for lo, hi in zip(thrs[1:], thrs[:-1]):
            assert lo < hi
        assert t2_threshold(model, 1.0 - 1e-9) < 1e-2

    def test_full_dof_variant(self):
        model = fake_model(5, 60)
        thr = t2_threshold(model, 0.001, dof="full")
        coeff = 29.0 * 59.0 * 61.0 / (60.0 * 31.0)
        expect = coeff * f_quantile(0.999, 29, 31)
        assert abs(thr - expect) <= 1e-12 * expect
        with pytest.raises(InvalidInputError):
            t2_threshold(model, 0.001, dof="channels")

    def test_rejects_bad_alpha_and_small_n(self):
        model = fake_model(5, 60)
        for alpha in (0.0, 1.0, -0.5):
            with pytest.raises(InvalidInputError):
                t2_threshold(model, alpha)
        with pytest.raises(InvalidInputError):
            t2_threshold(fake_model(5, 5), 0.001)


class TestDetect:
    def test_training_means_are_normal(self, model):
        assert detect(model, model.normalizer.means, 0.001) is False

    def test_fault_row_is_detected(self, synth, model):
        _, _, test_fault = synth
        assert detect(model, test_fault[0], 0.001) is True

    def test_exact_threshold_is_normal(self):
        # strict inequality: statistic equal to the threshold stays Normal
        model = fake_model(1, 30)
        thr = t2_threshold(model, 0.1)
        hit = None
        lo = hi = math.sqrt(thr)
        for _ in range(60):
            if lo * lo == thr:
                hit = lo
                break
            if hi * hi == thr:
                hit = hi
                break
            lo = math.nextafter(lo, -math.inf)
            hi = math.nextafter(hi, math.inf)
        assert hit is not None
        x = np.zeros(29)
        x[0] = hit
        assert t2_statistic(model, x) == thr
        assert detect(model, x, 0.1) is False

    def test_rates_on_paper_shaped_test_set(self, synth, model):
        _, test_normal, test_fault = synth
        alpha = 0.001
        false_alarms = sum(detect(model, row, alpha) for row in test_normal)
        misses = sum(not detect(model, row, alpha) for row in test_fault)
        assert false_alarms / len(test_normal) <= 10.0 * alpha
        assert misses / len(test_fault) <= 0.01

    def test_score_space_separation(self, synth, model):
        train, _, test_fault = synth
        assert model.a >= 2
        s_norm = np.array([project(model, r)[:2] for r in train.observations])
        s_fault = np.array([project(model, r)[:2] for r in test_fault])
        c_n, c_f = s_norm.mean(0), s_fault.mean(0)
        inter = np.linalg.norm(c_n - c_f)
        intra = np.mean(
            [
                np.linalg.norm(s_norm - c_n, axis=1).mean(),
                np.linalg.norm(s_fault - c_f, axis=1).mean(),
            ]
        )
        assert inter > 2.0 * intra


class TestPersistence:
    def test_round_trip_bit_exact(self, model, tmp_path):
        path = tmp_path / "pca.model"
        save_pca(model, path)
        back = load_pca(path)
        assert back.a == model.a
        assert back.n_train == model.n_train
        assert back.variance_captured == model.variance_captured
        assert np.array_equal(back.loadings, model.loadings)
        assert np.array_equal(back.singular_values, model.singular_values)
        assert np.array_equal(back.normalizer.means, model.normalizer.means)
        assert np.array_equal(back.normalizer.stds, model.normalizer.stds)

    def test_round_trip_preserves_decisions(self, synth, model, tmp_path):
        _, test_normal, test_fault = synth
        path = tmp_path / "pca.model"
        save_pca(model, path)
        back = load_pca(path)
        for row in np.vstack([test_normal[:5], test_fault[:5]]):
            assert t2_statistic(back, row) == t2_statistic(model, row)

    def test_truncated_file_reports_line(self, model, tmp_path):
        path = tmp_path / "pca.model"
        save_pca(model, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(DataFormatError) as err:
            load_pca(path)
        assert err.value.line > 0

    def test_wrong_kind_rejected(self, model, tmp_path):
        path = tmp_path / "pca.model"
        save_pca(model, path)
        text = path.read_text().replace("hifdetect-model pca", "hifdetect-model fda")
        path.write_text(text)
        with pytest.raises(DataFormatError) as err:
            load_pca(path)
        assert err.value.line == 1
