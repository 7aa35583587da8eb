"""Feature scoring/selection and class-imbalance handling.

Chi-squared scores use rank-based equal-frequency binning, which makes the
statistic invariant under any strictly monotone transform of a feature.
SMOTE interpolates new minority rows between nearest minority neighbors until
the classes balance; cost-sensitive weighting scales minority instances.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .errors import EmptyMask, SingleClass, TooFewMinority, UnknownFeature

SELECTION_P_VALUE = 0.05
DEFAULT_BINS = 10
DEFAULT_SMOTE_K = 5


@dataclass(frozen=True)
class FeatureScore:
    feature: str
    chi2: float
    p_value: float
    selected: bool


def _equal_frequency_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Bin assignments by rank; ties share the bin of their first sorted slot."""
    n = len(x)
    order = np.argsort(x, kind="stable")
    sorted_x = x[order]
    # first sorted position of each value's tie group
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    new_group[1:] = sorted_x[1:] != sorted_x[:-1]
    group_starts = np.flatnonzero(new_group)
    first_pos = group_starts[np.cumsum(new_group) - 1]
    bin_of_sorted = (first_pos * bins) // n
    out = np.empty(n, dtype=np.int64)
    out[order] = bin_of_sorted
    return out


def chi_squared_scores(
    X: np.ndarray, y: np.ndarray, names: list[str] | tuple[str, ...], bins: int = DEFAULT_BINS
) -> list[FeatureScore]:
    """Chi-squared association of each binned feature with the label.

    Returns scores ranked by chi2 descending (ties broken by feature name).
    Constant features score 0 and are never selected.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClass("both classes required for chi-squared scoring")
    X = np.asarray(X, dtype=np.float64)
    n = len(y)
    class_idx = [np.flatnonzero(y == c) for c in classes]
    scores: list[FeatureScore] = []
    for j, name in enumerate(names):
        col = X[:, j]
        if np.all(col == col[0]):
            scores.append(FeatureScore(name, 0.0, 1.0, False))
            continue
        assign = _equal_frequency_bins(col, bins)
        used = np.unique(assign)
        if len(used) < 2:
            scores.append(FeatureScore(name, 0.0, 1.0, False))
            continue
        table = np.zeros((len(used), len(classes)))
        remap = {b: i for i, b in enumerate(used.tolist())}
        for ci, idx in enumerate(class_idx):
            binned, counts = np.unique(assign[idx], return_counts=True)
            for b, c in zip(binned.tolist(), counts.tolist()):
                table[remap[b], ci] = c
        expected = table.sum(axis=1, keepdims=True) @ table.sum(axis=0, keepdims=True) / n
        with np.errstate(divide="ignore", invalid="ignore"):
            cells = np.where(expected > 0, (table - expected) ** 2 / expected, 0.0)
        stat = float(cells.sum())
        df = (len(used) - 1) * (len(classes) - 1)
        p = float(chi2_dist.sf(stat, df))
        scores.append(FeatureScore(name, stat, p, p < SELECTION_P_VALUE))
    scores.sort(key=lambda s: (-s.chi2, s.feature))
    return scores


def selected_features(scores: list[FeatureScore]) -> list[str]:
    return [s.feature for s in scores if s.selected]


def apply_mask(
    X: np.ndarray, names: list[str] | tuple[str, ...], selected: list[str] | tuple[str, ...]
) -> tuple[np.ndarray, list[str]]:
    """Restrict columns to the selected features, preserving manifest order."""
    name_set = set(names)
    for s in selected:
        if s not in name_set:
            raise UnknownFeature(s)
    chosen = set(selected)
    keep = [i for i, n in enumerate(names) if n in chosen]
    if not keep:
        raise EmptyMask("no features selected")
    return np.asarray(X)[:, keep], [names[i] for i in keep]


def score_report_csv(scores: list[FeatureScore]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["feature", "chi2", "p_value", "selected"])
    for s in scores:
        w.writerow([s.feature, repr(s.chi2), repr(s.p_value), str(s.selected).lower()])
    return buf.getvalue()


def write_score_report(scores: list[FeatureScore], path: str | Path) -> None:
    Path(path).write_text(score_report_csv(scores), encoding="utf-8")


def smote(
    X: np.ndarray, y: np.ndarray, k: int = DEFAULT_SMOTE_K, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Oversample the minority class with synthetic interpolated rows until the
    class counts are equal.

    Each synthetic row is x + u * (x_nn - x) for a minority seed row x, one of
    its k nearest minority neighbors x_nn (Euclidean after min-max scaling
    fitted on the minority rows), and u ~ Uniform[0, 1]. Seeds are visited
    round-robin in row order, so the output is deterministic for a given seed.
    Majority rows are untouched; synthetic rows are appended at the end.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise SingleClass("SMOTE needs exactly two classes")
    minority = classes[np.argmin(counts)]
    n_min, n_maj = counts.min(), counts.max()
    if n_min < 2:
        raise TooFewMinority(f"minority class has {n_min} instance(s); need >= 2")
    need = int(n_maj - n_min)
    if need == 0:
        return X.copy(), y.copy()
    k = min(k, int(n_min) - 1)
    min_rows = X[y == minority]
    lo = min_rows.min(axis=0)
    span = min_rows.max(axis=0) - lo
    span[span == 0] = 1.0
    scaled = (min_rows - lo) / span
    # pairwise distances on the scaled minority block; stable argsort keeps
    # neighbor choice deterministic under distance ties
    d2 = ((scaled[:, None, :] - scaled[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
    rng = np.random.default_rng(seed)
    synth = np.empty((need, X.shape[1]))
    for j in range(need):
        i = j % int(n_min)
        nn = neighbors[i, rng.integers(0, k)]
        u = rng.random()
        synth[j] = min_rows[i] + u * (min_rows[nn] - min_rows[i])
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(need, minority, dtype=y.dtype)])
    return X_out, y_out


def class_weights(y: np.ndarray, ratio: float) -> np.ndarray:
    """Instance weights: minority-class rows get ``ratio``, majority rows 1."""
    if ratio < 1:
        raise ValueError("ratio must be >= 1")
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) == 1:
        return np.ones(len(y))
    # count ties break toward the higher label: the positive class is the
    # minority everywhere this pipeline runs
    minority = sorted(zip(counts, -classes))[0][1] * -1
    return np.where(y == minority, float(ratio), 1.0)


WEIGHT_RATIO_GRID = (10, 20, 30, 40, 50)
