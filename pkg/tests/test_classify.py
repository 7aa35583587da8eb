import json
import math

import numpy as np
import pytest

from propagator import tree as treemod
from propagator.classify import (
    KINDS,
    ModelSpec,
    TrainedModel,
    load_model,
    logistic_loss_grad,
    save_model,
    train,
)
from propagator.corpus import NON_RETWEETER, RETWEETER
from propagator.errors import CorruptModel, DimensionMismatch, SingleClass, VersionMismatch

NAMES4 = ("a", "b", "c", "d")


def blob_fixture(n=20, d=4, gap=8.0, seed=0):
    """Two well-separated Gaussian blobs; linearly separable."""
    rng = np.random.default_rng(seed)
    X0 = rng.normal(0.0, 1.0, size=(n, d))
    X1 = rng.normal(gap, 1.0, size=(n, d))
    X = np.vstack([X0, X1])
    y = np.array([0] * n + [1] * n)
    return X, y


class TestTrainBasics:
    @pytest.mark.parametrize("kind", KINDS)
    def test_separable_training_accuracy(self, kind):
        X, y = blob_fixture()
        spec = ModelSpec(kind=kind, seed=1, trees=20, rounds=10, epochs=300)
        model = train(spec, X, y, NAMES4)
        pred = (np.asarray(model.predict_proba(X)) >= 0.5).astype(int)
        assert (pred == y).mean() == 1.0

    @pytest.mark.parametrize("kind", KINDS)
    def test_deterministic_serialization(self, kind):
        X, y = blob_fixture(n=12)
        spec = ModelSpec(kind=kind, seed=5, trees=10, rounds=5, epochs=100)
        m1 = train(spec, X, y, NAMES4)
        m2 = train(spec, X, y, NAMES4)
        assert m1.to_json() == m2.to_json()

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        with pytest.raises(SingleClass):
            train(ModelSpec(kind="logistic"), X, np.zeros(10, dtype=int), ("a", "b"))

    def test_dimension_mismatch(self):
        X, y = blob_fixture()
        with pytest.raises(DimensionMismatch):
            train(ModelSpec(kind="logistic"), X, y, ("a", "b"))

    def test_selected_features_mask(self):
        X, y = blob_fixture()
        model = train(ModelSpec(kind="logistic", seed=0, epochs=50), X, y, NAMES4,
                      selected=["a", "c"])
        assert model.selected_names == ["a", "c"]
        # predict still takes full-width vectors
        p = model.predict_proba(X[0])
        assert 0.0 <= p <= 1.0

    def test_smote_imbalance_setting(self):
        rng = np.random.default_rng(3)
        X = np.vstack([rng.normal(0, 1, (6, 3)), rng.normal(5, 1, (40, 3))])
        y = np.array([1] * 6 + [0] * 40)
        model = train(ModelSpec(kind="naive_bayes", imbalance="smote", seed=2), X, y, ("a", "b", "c"))
        assert model.spec.imbalance == "smote"

    def test_weighted_imbalance_setting(self):
        X, y = blob_fixture(n=10)
        model = train(ModelSpec(kind="naive_bayes", imbalance="weighted:30"), X, y, NAMES4)
        # weighted priors: 10 instances at weight 30 vs 10 at weight 1
        priors = np.exp(model.params["log_prior"])
        assert priors[1] == pytest.approx(300 / 310)


class TestNaiveBayes:
    def test_mirrored_classes_symmetric(self):
        rng = np.random.default_rng(4)
        base = rng.normal(2.0, 1.0, size=(30, 2))
        X = np.vstack([base, -base])
        y = np.array([0] * 30 + [1] * 30)
        model = train(ModelSpec(kind="naive_bayes"), X, y, ("a", "b"))
        priors = np.exp(model.params["log_prior"])
        assert priors[0] == pytest.approx(priors[1])
        assert model.params["mean"][0] == pytest.approx(-model.params["mean"][1])

    def test_posterior_matches_closed_form_1d(self):
        X = np.array([[0.0], [1.0], [2.0], [9.0], [10.0], [11.0]])
        y = np.array([0, 0, 0, 1, 1, 1])
        model = train(ModelSpec(kind="naive_bayes"), X, y, ("a",))
        x = 4.2
        mu0, mu1 = 1.0, 10.0
        var = 2.0 / 3.0  # population variance of each class
        pdf = lambda v, mu: math.exp(-((v - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
        expected = 0.5 * pdf(x, mu1) / (0.5 * pdf(x, mu0) + 0.5 * pdf(x, mu1))
        assert model.predict_proba(np.array([x])) == pytest.approx(expected, abs=1e-9)


class TestLogistic:
    def test_zero_parameters_give_half(self):
        model = TrainedModel(
            spec=ModelSpec(kind="logistic"),
            manifest=("a", "b"),
            mask=np.array([True, True]),
            params={"weights": np.zeros(2), "bias": 0.0},
            standardization=(np.zeros(2), np.ones(2)),
        )
        assert model.predict_proba(np.array([3.0, -7.0])) == 0.5

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(40, 5))
        y = rng.integers(0, 2, size=40).astype(float)
        w = rng.uniform(0.5, 3.0, size=40)
        params = rng.normal(size=6) * 0.5
        _, grad = logistic_loss_grad(params, X, y, w, l2=1e-4)
        h = 1e-6
        for i in range(6):
            up = params.copy()
            dn = params.copy()
            up[i] += h
            dn[i] -= h
            lu, _ = logistic_loss_grad(up, X, y, w, l2=1e-4)
            ld, _ = logistic_loss_grad(dn, X, y, w, l2=1e-4)
            fd = (lu - ld) / (2 * h)
            assert abs(grad[i] - fd) / max(1e-8, abs(fd)) < 1e-5


class TestForest:
    def test_unanimous_trees_give_one(self):
        X, y = blob_fixture(n=15, gap=10.0)
        model = train(ModelSpec(kind="random_forest", trees=15, seed=2), X, y, NAMES4)
        p = model.predict_proba(np.full(4, 10.0))
        assert p == 1.0

    def test_weight_two_equals_interleaved_duplication(self):
        X, y = blob_fixture(n=10, gap=3.0, seed=6)
        n = len(y)
        X_dup = np.repeat(X, 2, axis=0)
        y_dup = np.repeat(y, 2)
        m = 2 * n
        trees_w = treemod.fit_forest(
            X, y.astype(float), np.full(n, 2.0), seed_prefix=(11,), n_trees=5,
            bootstrap_size=m,
        )
        trees_d = treemod.fit_forest(
            X_dup, y_dup.astype(float), None, seed_prefix=(11,), n_trees=5,
            bootstrap_size=m,
        )
        assert trees_w == trees_d

    def test_split_tiebreak_prefers_lowest_feature(self):
        # two identical columns: splits must always cite column 0
        col = np.array([0.0, 0.0, 1.0, 1.0])
        X = np.column_stack([col, col])
        y = np.array([0, 0, 1, 1]).astype(float)
        rng = np.random.default_rng(0)
        fitted = treemod.fit_tree(X, y, None, rng)
        assert fitted["feature"] == 0


class TestAdaBoost:
    def _ensemble_train_errors(self, model, X, y):
        ysign = 2 * y - 1
        margins = np.zeros(len(y))
        errors = []
        for alpha, learner in zip(model.params["alphas"], model.params["learners"]):
            frac = treemod.tree_predict(learner["tree"], X[:, model.mask])
            margins += alpha * np.where(frac >= 0.5, 1.0, -1.0)
            errors.append(float((np.sign(margins + 1e-12) != ysign).mean()))
        return errors

    def test_training_error_non_increasing(self):
        rng = np.random.default_rng(12)
        X = np.vstack([rng.normal(0, 1.6, (40, 3)), rng.normal(2.2, 1.6, (40, 3))])
        y = np.array([0] * 40 + [1] * 40)
        model = train(ModelSpec(kind="adaboost_m1", rounds=12, base_depth=2, seed=3),
                      X, y, ("a", "b", "c"))
        errors = self._ensemble_train_errors(model, X, y)
        assert len(errors) >= 2
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))

    def test_forest_base_learner_supported(self):
        X, y = blob_fixture(n=10)
        model = train(
            ModelSpec(kind="adaboost_m1", base_kind="random_forest", rounds=3,
                      base_trees=5, max_depth=3, seed=1),
            X, y, NAMES4,
        )
        pred = (np.asarray(model.predict_proba(X)) >= 0.5).astype(int)
        assert (pred == y).mean() == 1.0


class TestClassifyThreshold:
    def _fixed_proba_model(self, p):
        return TrainedModel(
            spec=ModelSpec(kind="logistic"),
            manifest=("a",),
            mask=np.array([True]),
            params={"weights": np.zeros(1), "bias": math.log(p / (1 - p))},
            standardization=(np.zeros(1), np.ones(1)),
        )

    def test_boundary_is_positive(self):
        model = self._fixed_proba_model(0.5)
        assert model.classify(np.array([0.0]), threshold=0.5) == RETWEETER

    def test_below_boundary(self):
        model = self._fixed_proba_model(0.49)
        assert model.classify(np.array([0.0]), threshold=0.5) == NON_RETWEETER

    def test_zero_threshold(self):
        model = self._fixed_proba_model(0.01)
        assert model.classify(np.array([0.0]), threshold=0.0) == RETWEETER


class TestSerialization:
    @pytest.mark.parametrize("kind", KINDS)
    def test_round_trip_bit_exact(self, tmp_path, kind):
        X, y = blob_fixture(n=12)
        spec = ModelSpec(kind=kind, seed=8, trees=8, rounds=4, epochs=80)
        model = train(spec, X, y, NAMES4)
        path = tmp_path / "m.json"
        save_model(model, path)
        loaded = load_model(path)
        probe = np.random.default_rng(0).normal(2.0, 3.0, size=(100, 4))
        p1 = np.asarray(model.predict_proba(probe))
        p2 = np.asarray(loaded.predict_proba(probe))
        assert np.array_equal(p1, p2)

    def test_save_twice_identical_bytes(self, tmp_path):
        X, y = blob_fixture(n=10)
        spec = ModelSpec(kind="random_forest", trees=5, seed=4)
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        save_model(train(spec, X, y, NAMES4), a)
        save_model(train(spec, X, y, NAMES4), b)
        assert a.read_bytes() == b.read_bytes()

    def test_truncated_file_is_corrupt(self, tmp_path):
        X, y = blob_fixture(n=10)
        path = tmp_path / "m.json"
        save_model(train(ModelSpec(kind="logistic", epochs=30), X, y, NAMES4), path)
        path.write_text(path.read_text()[: 60], encoding="utf-8")
        with pytest.raises(CorruptModel):
            load_model(path)

    def test_future_version_rejected(self, tmp_path):
        X, y = blob_fixture(n=10)
        path = tmp_path / "m.json"
        model = train(ModelSpec(kind="logistic", epochs=30), X, y, NAMES4)
        obj = model.to_obj()
        obj["format_version"] = 99
        path.write_text(json.dumps(obj), encoding="utf-8")
        with pytest.raises(VersionMismatch):
            load_model(path)

    def test_model_id_stable(self):
        X, y = blob_fixture(n=10)
        spec = ModelSpec(kind="naive_bayes", seed=3)
        assert train(spec, X, y, NAMES4).model_id == train(spec, X, y, NAMES4).model_id
