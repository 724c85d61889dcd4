"""Classifier stage: splitting, logistic regression numerics, the naive
Bayes baseline, and metric correctness against hand-computed oracles."""

from __future__ import annotations

import json
import math
import random

import numpy as np
import pytest

from cdrisk.classify import (
    Dataset,
    LogRegModel,
    count_feature_columns,
    evaluate,
    evaluate_scores,
    load_model_json,
    logreg_gradient,
    logreg_loss,
    midrank_auc,
    roc_points,
    save_model_json,
    split_dataset,
    train_logreg,
    train_mnb,
    tune_l2,
)


def toy_dataset(n=10, n_pos=5, seed=0, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.array([1] * n_pos + [0] * (n - n_pos))
    return Dataset(X, y, [f"f{i}" for i in range(d)])


class TestSplit:
    def test_ten_rows_split_seven_three(self):
        ds = toy_dataset(10, 5)
        train, test = split_dataset(ds, 0.7, seed=0)
        assert train.n_rows == 7
        assert test.n_rows == 3
        assert int(train.y.sum()) in (3, 4)

    def test_same_seed_identical(self):
        ds = toy_dataset(40, 13)
        a_train, a_test = split_dataset(ds, 0.7, seed=9)
        b_train, b_test = split_dataset(ds, 0.7, seed=9)
        assert np.array_equal(a_train.X, b_train.X)
        assert np.array_equal(a_test.y, b_test.y)

    def test_large_split_preserves_class_ratio(self):
        rng = np.random.default_rng(3)
        y = (rng.random(1000) < 0.3).astype(int)
        # make both classes present with the intended ratio
        ds = Dataset(rng.normal(size=(1000, 2)), y, ["a", "b"])
        _train, test = split_dataset(ds, 0.7, seed=1)
        ratio = test.y.mean()
        assert abs(ratio - y.mean()) <= 0.02

    def test_single_class_rejected(self):
        ds = Dataset(np.zeros((5, 1)), np.ones(5, dtype=int), ["a"])
        with pytest.raises(ValueError):
            split_dataset(ds)

    def test_disjoint_and_complete(self):
        ds = toy_dataset(33, 11, seed=5)
        ds.user_ids = [f"u{i}" for i in range(33)]
        train, test = split_dataset(ds, 0.7, seed=2)
        assert sorted(train.user_ids + test.user_ids) == sorted(ds.user_ids)
        assert not set(train.user_ids) & set(test.user_ids)


class TestLogReg:
    def test_separable_toy_reaches_full_training_accuracy(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 2))
        y = (X[:, 0] + 2 * X[:, 1] > 0).astype(int)
        ds = Dataset(X, y, ["a", "b"])
        model = train_logreg(ds, l2_penalty=1e-6, max_iters=3000)
        acc = np.mean((model.predict_proba(X) >= 0.5).astype(int) == y)
        assert acc == 1.0

    def test_intercept_only_closed_form(self):
        # all-zero features: optimum is w=0, b=log(p/(1-p));
        # tight gradient tolerance so the parameter error sits below 1e-6
        y = np.array([1] * 9 + [0] * 21)
        ds = Dataset(np.zeros((30, 4)), y, list("abcd"))
        model = train_logreg(ds, l2_penalty=0.01, tolerance=1e-9)
        p = 9 / 30
        assert np.allclose(model.weights, 0.0, atol=1e-6)
        assert model.intercept == pytest.approx(math.log(p / (1 - p)), abs=1e-6)

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n, d = rng.integers(5, 30), rng.integers(1, 6)
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, n).astype(np.float64)
            w = rng.normal(scale=0.5, size=d)
            b = float(rng.normal(scale=0.5))
            lam = float(rng.uniform(1e-4, 1.0))
            gw, gb = logreg_gradient(X, y, w, b, lam)
            eps = 1e-6
            for j in range(d):
                dw = np.zeros(d)
                dw[j] = eps
                fd = (logreg_loss(X, y, w + dw, b, lam) - logreg_loss(X, y, w - dw, b, lam)) / (2 * eps)
                assert abs(gw[j] - fd) <= 1e-5 * max(1.0, abs(fd))
            fd_b = (logreg_loss(X, y, w, b + eps, lam) - logreg_loss(X, y, w, b - eps, lam)) / (2 * eps)
            assert abs(gb - fd_b) <= 1e-5 * max(1.0, abs(fd_b))

    def test_loss_monotone_nonincreasing(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(80, 5))
        y = (X @ rng.normal(size=5) + rng.normal(scale=0.5, size=80) > 0).astype(int)
        ds = Dataset(X, y, [f"f{i}" for i in range(5)])
        model = train_logreg(ds, l2_penalty=0.01, track_loss=True)
        history = model.convergence.loss_history
        assert history is not None and len(history) > 2
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_huge_penalty_kills_weights(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 2, 50)
        ds = Dataset(X, y, list("abcd"))
        model = train_logreg(ds, l2_penalty=1e6)
        assert float(np.linalg.norm(model.weights)) <= 1e-3

    def test_standardization_from_training_rows_only(self):
        ds = toy_dataset(30, 10, seed=21)
        train, _test = split_dataset(ds, 0.7, seed=0)
        model = train_logreg(train, max_iters=50)
        assert np.allclose(model.mean, train.X.mean(axis=0))
        assert not np.allclose(model.mean, ds.X.mean(axis=0))

    def test_non_finite_features_rejected(self):
        X = np.array([[1.0], [np.nan]])
        ds = Dataset(X, np.array([0, 1]), ["a"])
        with pytest.raises(ValueError):
            train_logreg(ds)

    def test_non_convergence_flagged(self):
        ds = toy_dataset(40, 20, seed=2)
        model = train_logreg(ds, max_iters=1)
        assert not model.convergence.converged
        assert model.convergence.reason == "max_iters"

    def test_converged_run_reports_reason(self):
        ds = toy_dataset(40, 20, seed=3)
        model = train_logreg(ds, l2_penalty=1.0)
        assert model.convergence.converged
        assert model.convergence.reason == "gradient_tolerance"
        assert model.convergence.gradient_max <= 1e-6


class TestPredictProba:
    def zero_model(self, d=2):
        from cdrisk.classify import ConvergenceReport

        return LogRegModel(
            weights=np.zeros(d),
            intercept=0.0,
            l2_penalty=0.01,
            mean=np.zeros(d),
            std=np.ones(d),
            columns=[f"f{i}" for i in range(d)],
            convergence=ConvergenceReport(True, 0, 0.0, 0.0, "gradient_tolerance"),
        )

    def test_zero_model_gives_half(self):
        model = self.zero_model()
        assert model.predict_proba(np.array([[3.0, -1.0]]))[0] == 0.5

    def test_outputs_clamped_to_open_interval(self):
        model = self.zero_model(1)
        model.weights = np.array([1000.0])
        p_hi = model.predict_proba(np.array([[1000.0]]))[0]
        p_lo = model.predict_proba(np.array([[-1000.0]]))[0]
        assert 0.0 < p_lo <= 1e-12
        assert 1.0 - 1e-12 <= p_hi < 1.0

    def test_monotone_in_positively_weighted_feature(self):
        model = self.zero_model(2)
        model.weights = np.array([2.0, -0.5])
        xs = np.array([[v, 1.0] for v in np.linspace(-3, 3, 20)])
        probs = model.predict_proba(xs)
        assert np.all(np.diff(probs) >= 0)

    def test_dimension_mismatch_rejected(self):
        model = self.zero_model(2)
        with pytest.raises(ValueError):
            model.predict_proba(np.array([[1.0, 2.0, 3.0]]))


class TestMNB:
    def test_hand_computed_fixture(self):
        X = np.array([[1, 0], [2, 1], [0, 2], [1, 3]], dtype=float)
        y = np.array([0, 0, 1, 1])
        ds = Dataset(X, y, ["f", "g"])
        model = train_mnb(ds, alpha=1.0, columns=["f", "g"])
        # smoothed likelihoods: class0 -> (4/6, 2/6); class1 -> (2/8, 6/8)
        p = model.predict_proba(np.array([[1.0, 1.0]]))[0]
        assert p == pytest.approx(27 / 59, abs=1e-12)
        p2 = model.predict_proba(np.array([[0.0, 1.0]]))[0]
        assert p2 == pytest.approx(9 / 13, abs=1e-12)

    def test_single_row_per_class_prefers_closer_class(self):
        X = np.array([[10, 0], [0, 10]], dtype=float)
        y = np.array([0, 1])
        ds = Dataset(X, y, ["f", "g"])
        model = train_mnb(ds)
        assert model.predict_proba(np.array([[8.0, 1.0]]))[0] < 0.5
        assert model.predict_proba(np.array([[1.0, 8.0]]))[0] > 0.5

    def test_symmetric_counts_balanced_priors_give_half(self):
        X = np.array([[2, 2], [2, 2]], dtype=float)
        y = np.array([0, 1])
        ds = Dataset(X, y, ["f", "g"])
        model = train_mnb(ds)
        assert model.predict_proba(np.array([[5.0, 5.0]]))[0] == pytest.approx(0.5)

    def test_negative_features_rejected(self):
        ds = Dataset(np.array([[-1.0], [1.0]]), np.array([0, 1]), ["f"])
        with pytest.raises(ValueError):
            train_mnb(ds)

    def test_count_column_mask_excludes_diameters(self):
        cols = ["out_weekday_calls_all", "mobility_diameter_all_km",
                "mobility_diameter_weeknight_km", "degree"]
        assert count_feature_columns(cols) == ["out_weekday_calls_all", "degree"]


def brute_force_auc(y, scores):
    """Oracle: pair counting with half credit for ties."""
    pos = [s for s, label in zip(scores, y) if label == 1]
    neg = [s for s, label in zip(scores, y) if label == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestMetrics:
    def test_perfect_predictions(self):
        y = np.array([1, 1, 0, 0])
        m = evaluate_scores(y, np.array([0.9, 0.8, 0.1, 0.2]))
        assert (m.f1, m.accuracy, m.auc, m.precision, m.recall) == (1.0, 1.0, 1.0, 1.0, 1.0)

    def test_reversed_scores_zero_auc(self):
        y = np.array([1, 1, 0, 0])
        m = evaluate_scores(y, np.array([0.1, 0.2, 0.9, 0.8]))
        assert m.auc == 0.0

    def test_confusion_fixture_8_2_2_8(self):
        y = np.array([1] * 8 + [1] * 2 + [0] * 2 + [0] * 8)
        scores = np.array([0.9] * 8 + [0.1] * 2 + [0.9] * 2 + [0.1] * 8)
        m = evaluate_scores(y, scores)
        assert (m.tp, m.fp, m.fn, m.tn) == (8, 2, 2, 8)
        assert m.precision == 0.8
        assert m.recall == 0.8
        assert m.f1 == pytest.approx(0.8)
        assert m.accuracy == 0.8

    def test_no_positive_labels_yields_undefined_markers(self):
        y = np.zeros(5, dtype=int)
        m = evaluate_scores(y, np.full(5, 0.2))
        assert m.recall is None
        assert m.f1 is None
        assert m.auc is None
        assert m.precision is None  # nothing predicted positive either
        doc = json.loads(m.to_json())
        assert doc["recall"] is None and doc["auc"] is None

    def test_f1_harmonic_mean_whenever_defined(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(4, 40))
            y = rng.integers(0, 2, n)
            scores = rng.random(n)
            m = evaluate_scores(y, scores)
            if m.precision is not None and m.recall is not None and m.precision + m.recall > 0:
                assert m.f1 == pytest.approx(
                    2 * m.precision * m.recall / (m.precision + m.recall)
                )

    def test_auc_matches_pair_counting_on_random_sets(self):
        rng = random.Random(19)
        for _ in range(100):
            n = rng.randrange(4, 30)
            y = [rng.randrange(2) for _ in range(n)]
            if sum(y) in (0, n):
                y[0] = 1 - y[0]
            if sum(y) in (0, n):
                continue
            # coarse grid scores force ties
            scores = [rng.randrange(6) / 5.0 for _ in range(n)]
            assert midrank_auc(np.array(y), np.array(scores)) == pytest.approx(
                brute_force_auc(y, scores), abs=1e-12
            )

    def test_auc_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(23)
        y = rng.integers(0, 2, 50)
        y[0], y[1] = 0, 1
        scores = rng.random(50)
        base = midrank_auc(y, scores)
        assert midrank_auc(y, np.exp(3 * scores)) == pytest.approx(base, abs=1e-12)
        assert midrank_auc(y, 5 * scores - 2) == pytest.approx(base, abs=1e-12)

    def test_roc_points_shape(self):
        y = np.array([1, 0, 1, 0, 1])
        scores = np.array([0.9, 0.8, 0.7, 0.3, 0.2])
        fpr, tpr = roc_points(y, scores)
        assert fpr[0] == 0.0 and tpr[0] == 0.0
        assert fpr[-1] == 1.0 and tpr[-1] == 1.0
        assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)


class TestTuneAndPersistence:
    def test_tune_returns_grid_member_deterministically(self):
        rng = np.random.default_rng(29)
        X = rng.normal(size=(200, 4))
        y = (X[:, 0] - X[:, 2] + rng.normal(scale=0.8, size=200) > 0).astype(int)
        ds = Dataset(X, y, list("abcd"))
        lam1, losses1 = tune_l2(ds, seed=0)
        lam2, losses2 = tune_l2(ds, seed=0)
        assert lam1 == lam2
        assert losses1 == losses2
        assert lam1 in (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)

    def test_model_json_round_trip(self, tmp_path):
        ds = toy_dataset(30, 12, seed=31)
        model = train_logreg(ds, max_iters=200)
        path = tmp_path / "model.json"
        save_model_json(model, path, extra={"split": {"seed": 0, "train_fraction": 0.7}})
        loaded, doc = load_model_json(path)
        assert doc["split"]["seed"] == 0
        assert loaded.columns == model.columns
        x = np.random.default_rng(1).normal(size=(5, 3))
        assert np.allclose(loaded.predict_proba(x), model.predict_proba(x))

    def test_evaluate_uses_model_scores(self):
        ds = toy_dataset(60, 30, seed=37)
        train, test = split_dataset(ds, 0.7, seed=0)
        model = train_logreg(train, max_iters=500)
        m = evaluate(model, test)
        assert 0.0 <= m.accuracy <= 1.0
        assert m.auc is not None
