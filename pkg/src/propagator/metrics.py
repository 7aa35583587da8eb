"""Ranking and classification accuracy: AUC, F1 variants, evaluation reports.

AUC is the exact Mann-Whitney statistic (ties credit 1/2), computed from
average ranks, so it equals brute-force pair counting without any ROC binning.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .classify import TrainedModel
from .errors import SingleClass

_KIND_LABELS = {
    "random_forest": "Random Forest",
    "naive_bayes": "Naive Bayes",
    "logistic": "Logistic",
    "adaboost_m1": "AdaBoostM1",
}

_SETTING_ORDER = ("basic", "smote", "cost_sensitive")


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned their group average."""
    order = np.argsort(x, kind="stable")
    sx = x[order]
    n = len(x)
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """P(score of a random positive > score of a random negative), ties count 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = _average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _prf(tp: int, fp: int, fn: int) -> float:
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def f1(predictions: np.ndarray, labels: np.ndarray, mode: str = "retweeter") -> float:
    """F1 of the positive class, or the class-frequency-weighted mean of both
    per-class F1 scores (mode='overall_weighted')."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("empty label array")
    tp = int(((predictions == 1) & (labels == 1)).sum())
    fp = int(((predictions == 1) & (labels == 0)).sum())
    fn = int(((predictions == 0) & (labels == 1)).sum())
    tn = int(((predictions == 0) & (labels == 0)).sum())
    if mode == "retweeter":
        return _prf(tp, fp, fn)
    if mode == "overall_weighted":
        n = len(labels)
        f1_pos = _prf(tp, fp, fn)
        f1_neg = _prf(tn, fn, fp)  # negative class: swap roles
        n_pos = tp + fn
        n_neg = tn + fp
        return (n_pos * f1_pos + n_neg * f1_neg) / n
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class EvalReport:
    model_id: str
    kind: str
    setting: str
    auc: float
    f1_overall: float
    f1_retweeter: float
    tp: int
    fp: int
    tn: int
    fn: int
    n_test: int

    def row(self) -> str:
        """One aligned text row: label, AUC, F1, F1 of the positive class."""
        label = _KIND_LABELS.get(self.kind, self.kind)
        return f"{label:<16} {self.auc:.3f}  {self.f1_overall:.3f}  {self.f1_retweeter:.3f}"


def setting_label(imbalance: str) -> str:
    if imbalance == "basic":
        return "basic"
    if imbalance == "smote":
        return "smote"
    return f"cost_sensitive({imbalance.split(':', 1)[1]}:1)"


def evaluate(model: TrainedModel, X: np.ndarray, y: np.ndarray, threshold: float = 0.5) -> EvalReport:
    """Score a model on held-out data at the given classification threshold."""
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty test set")
    if len(np.unique(y)) < 2:
        raise SingleClass("evaluation needs both classes")
    proba = np.asarray(model.predict_proba(X))
    pred = (proba >= threshold).astype(np.int64)
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    tn = int(((pred == 0) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    return EvalReport(
        model_id=model.model_id,
        kind=model.spec.kind,
        setting=setting_label(model.spec.imbalance),
        auc=auc(proba, y),
        f1_overall=f1(pred, y, "overall_weighted"),
        f1_retweeter=f1(pred, y, "retweeter"),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        n_test=len(y),
    )


def _setting_group(setting: str) -> str:
    return "cost_sensitive" if setting.startswith("cost_sensitive") else setting


def render_text(reports: list[EvalReport], title: str | None = None) -> str:
    """Aligned text table, rows grouped by imbalance setting."""
    lines: list[str] = []
    if title:
        lines.append(title)
    lines.append(f"{'Classifier':<16} {'AUC':>5}  {'F1':>5}  {'F1 of Retweeter':>5}")
    for group in _SETTING_ORDER:
        rows = [r for r in reports if _setting_group(r.setting) == group]
        if not rows:
            continue
        lines.append(group)
        for r in rows:
            lines.append("  " + r.row())
    lines.append("SMO (SVM): not implemented")
    return "\n".join(lines) + "\n"


def render_csv(reports: list[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["setting", "model", "auc", "f1", "f1_retweeter", "tp", "fp", "tn", "fn", "n_test"])
    for r in reports:
        w.writerow([
            r.setting,
            _KIND_LABELS.get(r.kind, r.kind),
            f"{r.auc:.3f}",
            f"{r.f1_overall:.3f}",
            f"{r.f1_retweeter:.3f}",
            r.tp, r.fp, r.tn, r.fn, r.n_test,
        ])
    return buf.getvalue()
