import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from propagator.errors import SingleClass
from propagator.metrics import auc, f1, render_csv, render_text


def brute_force_auc(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_ranking(self):
        scores = [0.9, 0.8, 0.2, 0.1]
        labels = [1, 1, 0, 0]
        assert auc(scores, labels) == 1.0

    def test_all_ties(self):
        assert auc([0.5] * 6, [1, 0, 1, 0, 1, 0]) == 0.5

    def test_four_pair_enumeration(self):
        # pos {0.8, 0.4}, neg {0.6, 0.2}: wins (0.8>0.6, 0.8>0.2, 0.4>0.2) = 3 of 4
        scores = [0.8, 0.4, 0.6, 0.2]
        labels = [1, 1, 0, 0]
        assert auc(scores, labels) == pytest.approx(0.75)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            auc([0.1, 0.2], [1, 1])

    def test_equals_brute_force_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 200))
            scores = rng.integers(0, 10, size=n) / 10.0  # heavy ties
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert auc(scores, labels) == pytest.approx(
                brute_force_auc(scores, labels), abs=1e-12
            )

    def test_label_flip_identity(self):
        rng = np.random.default_rng(1)
        scores = rng.random(50)
        labels = rng.integers(0, 2, size=50)
        labels[:2] = [0, 1]
        assert auc(scores, labels) + auc(scores, 1 - labels) == pytest.approx(1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_monotone_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        scores = rng.random(30)
        labels = rng.integers(0, 2, size=30)
        labels[:2] = [0, 1]
        assert auc(scores, labels) == pytest.approx(auc(np.exp(5 * scores), labels), abs=1e-12)


class TestF1:
    def test_perfect(self):
        labels = np.array([1, 0, 1, 0])
        assert f1(labels, labels, "retweeter") == 1.0
        assert f1(labels, labels, "overall_weighted") == 1.0

    def test_zero_true_positives(self):
        pred = np.zeros(10, dtype=int)
        labels = np.array([1] * 3 + [0] * 7)
        assert f1(pred, labels, "retweeter") == 0.0

    def test_hand_computed(self):
        # tp=3, fp=1, fn=2, tn=94: precision 0.75, recall 0.6
        pred = np.array([1] * 4 + [0] * 96)
        labels = np.array([1] * 3 + [0] * 1 + [1] * 2 + [0] * 94)
        assert f1(pred, labels, "retweeter") == pytest.approx(
            2 * (0.75 * 0.6) / (0.75 + 0.6)
        )

    def test_overall_weighted_is_class_frequency_mean(self):
        pred = np.array([1, 1, 0, 0, 0, 0])
        labels = np.array([1, 0, 1, 0, 0, 0])
        f_pos = f1(pred, labels, "retweeter")
        f_neg = f1(1 - pred, 1 - labels, "retweeter")
        expected = (2 * f_pos + 4 * f_neg) / 6
        assert f1(pred, labels, "overall_weighted") == pytest.approx(expected)


class TestReportRendering:
    def _report(self):
        from propagator.metrics import EvalReport

        return EvalReport(
            model_id="abc", kind="random_forest", setting="cost_sensitive(30:1)",
            auc=0.785, f1_overall=0.815, f1_retweeter=0.296,
            tp=3, fp=4, tn=90, fn=3, n_test=100,
        )

    def test_three_decimal_row(self):
        row = self._report().row()
        assert "Random Forest" in row
        assert "0.785" in row and "0.815" in row and "0.296" in row

    def test_text_table_groups_and_footer(self):
        text = render_text([self._report()])
        assert "cost_sensitive" in text
        assert "SMO (SVM): not implemented" in text

    def test_csv(self):
        text = render_csv([self._report()])
        lines = text.strip().splitlines()
        assert lines[0].startswith("setting,model,auc")
        assert "0.785" in lines[1]
