"""Weighted CART-style decision trees and bootstrap forests.

Trees are plain nested dicts, the same shape they serialize to:

    {"feature": j, "threshold": t, "left": ..., "right": ...}
    {"leaf": {"counts": [w_neg, w_pos]}}

Rows with value <= threshold go left. Split ties resolve to the lowest
feature index, then the lowest threshold, so fits are reproducible.
"""

from __future__ import annotations

import math

import numpy as np


def _resolve_candidates(n_features: int, features_per_split: str | int | None) -> int:
    if features_per_split in (None, "all"):
        return n_features
    if features_per_split == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    m = int(features_per_split)
    if m < 1:
        raise ValueError("features_per_split must be >= 1")
    return min(m, n_features)


def _best_split_for_feature(
    v: np.ndarray, y: np.ndarray, w: np.ndarray, min_leaf: int
) -> tuple[float, float] | None:
    """Lowest weighted child Gini over thresholds of one feature, or None."""
    order = np.argsort(v, kind="stable")
    sv = v[order]
    sy = y[order]
    sw = w[order]
    n = len(sv)
    cut = np.flatnonzero(sv[:-1] != sv[1:])  # split after position i
    if min_leaf > 1:
        cut = cut[(cut + 1 >= min_leaf) & (n - cut - 1 >= min_leaf)]
    if len(cut) == 0:
        return None
    c1 = np.cumsum(sw * sy)
    ct = np.cumsum(sw)
    wl = ct[cut]
    wr = ct[-1] - wl
    with np.errstate(divide="ignore", invalid="ignore"):
        pl = c1[cut] / wl
        pr = (c1[-1] - c1[cut]) / wr
        gini_l = 2.0 * pl * (1.0 - pl)
        gini_r = 2.0 * pr * (1.0 - pr)
        score = (wl * gini_l + wr * gini_r) / ct[-1]
    # a side with zero total weight carries no usable signal
    score = np.where((wl > 0) & (wr > 0), score, np.inf)
    if not np.isfinite(score).any():
        return None
    best = int(np.argmin(score))  # first minimum = lowest threshold
    i = cut[best]
    thr = (sv[i] + sv[i + 1]) / 2.0
    if thr >= sv[i + 1]:  # midpoint rounded up between adjacent floats
        thr = float(sv[i])
    return float(score[best]), float(thr)


def _choose_split(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    idx: np.ndarray,
    rng: np.random.Generator,
    n_candidates: int,
    min_leaf: int,
) -> tuple[int, float] | None:
    d = X.shape[1]
    yi = y[idx]
    wi = w[idx]
    if n_candidates < d:
        candidates = np.sort(rng.choice(d, size=n_candidates, replace=False))
        passes: list[np.ndarray] = [candidates, np.arange(d)]  # fall back to all
    else:
        passes = [np.arange(d)]
    for feats in passes:
        best: tuple[float, int, float] | None = None
        for f in feats:
            res = _best_split_for_feature(X[idx, f], yi, wi, min_leaf)
            if res is None:
                continue
            score, thr = res
            if best is None or score < best[0]:
                best = (score, int(f), thr)
        if best is not None:
            return best[1], best[2]
    return None


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray | None,
    rng: np.random.Generator,
    max_depth: int | None = None,
    min_leaf: int = 1,
    features_per_split: str | int | None = None,
) -> dict:
    """Grow a binary classification tree to purity (or the depth/leaf limits)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    n_candidates = _resolve_candidates(X.shape[1], features_per_split)

    def leaf(idx: np.ndarray) -> dict:
        w1 = float((w[idx] * y[idx]).sum())
        w0 = float(w[idx].sum()) - w1
        return {"leaf": {"counts": [w0, w1]}}

    root: dict = {}
    # stack of (row indices, depth, node dict to fill)
    stack: list[tuple[np.ndarray, int, dict]] = [(np.arange(len(y)), 0, root)]
    while stack:
        idx, depth, node = stack.pop()
        yi = y[idx]
        pure = bool(np.all(yi == yi[0]))
        depth_capped = max_depth is not None and depth >= max_depth
        split = None
        if not pure and not depth_capped and len(idx) >= 2 * min_leaf:
            split = _choose_split(X, y, w, idx, rng, n_candidates, min_leaf)
        if split is None:
            node.update(leaf(idx))
            continue
        f, thr = split
        go_left = X[idx, f] <= thr
        node["feature"] = f
        node["threshold"] = thr
        node["left"] = {}
        node["right"] = {}
        # push right first so the left subtree is built first (fixed rng order)
        stack.append((idx[~go_left], depth + 1, node["right"]))
        stack.append((idx[go_left], depth + 1, node["left"]))
    return root


def flatten_tree(tree: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Array form (feature, threshold, left, right, leaf positive fraction)
    for vectorized prediction; feature == -1 marks a leaf."""
    feats: list[int] = []
    thrs: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    vals: list[float] = []
    stack: list[tuple[dict, int, str]] = [(tree, -1, "")]
    while stack:
        node, parent, side = stack.pop()
        i = len(feats)
        if parent >= 0:
            (lefts if side == "left" else rights)[parent] = i
        if "leaf" in node:
            c0, c1 = node["leaf"]["counts"]
            total = c0 + c1
            feats.append(-1)
            thrs.append(0.0)
            lefts.append(-1)
            rights.append(-1)
            vals.append(c1 / total if total > 0 else 0.5)
        else:
            feats.append(int(node["feature"]))
            thrs.append(float(node["threshold"]))
            lefts.append(-1)
            rights.append(-1)
            vals.append(0.0)
            stack.append((node["right"], i, "right"))
            stack.append((node["left"], i, "left"))
    return (
        np.array(feats, dtype=np.int64),
        np.array(thrs, dtype=np.float64),
        np.array(lefts, dtype=np.int64),
        np.array(rights, dtype=np.int64),
        np.array(vals, dtype=np.float64),
    )


def predict_flat(flat, X: np.ndarray) -> np.ndarray:
    """Leaf positive fractions for each row of X."""
    feats, thrs, lefts, rights, vals = flat
    idx = np.zeros(len(X), dtype=np.int64)
    active = feats[idx] >= 0
    while active.any():
        rows = np.flatnonzero(active)
        node = idx[rows]
        go_left = X[rows, feats[node]] <= thrs[node]
        idx[rows] = np.where(go_left, lefts[node], rights[node])
        active[rows] = feats[idx[rows]] >= 0
    return vals[idx]


def tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    return predict_flat(flatten_tree(tree), X)


def bootstrap_indices(
    weights: np.ndarray, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Weighted bootstrap by inverse-CDF sampling.

    Drawing through the cumulative weight profile means uniformly rescaled
    weights select exactly the same rows as physically duplicating instances
    (with interleaved copies), which keeps weight-vs-duplication equivalence
    testable.
    """
    cum = np.cumsum(weights, dtype=np.float64)
    cum /= cum[-1]
    u = rng.random(size)
    return np.searchsorted(cum, u, side="right")


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray | None,
    seed_prefix: tuple[int, ...],
    n_trees: int,
    max_depth: int | None = None,
    min_leaf: int = 1,
    features_per_split: str | int | None = "sqrt",
    bootstrap_size: int | None = None,
) -> list[dict]:
    """Fit a bagged forest; tree t draws from default_rng([*seed_prefix, t])."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    m = bootstrap_size if bootstrap_size is not None else len(y)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([*seed_prefix, t])
        rows = bootstrap_indices(w, m, rng)
        trees.append(
            fit_tree(
                X[rows],
                y[rows],
                None,
                rng,
                max_depth=max_depth,
                min_leaf=min_leaf,
                features_per_split=features_per_split,
            )
        )
    return trees


def forest_predict(trees: list[dict], X: np.ndarray, flats=None) -> np.ndarray:
    """Mean of per-tree leaf positive fractions."""
    if flats is None:
        flats = [flatten_tree(t) for t in trees]
    out = np.zeros(len(X))
    for flat in flats:
        out += predict_flat(flat, X)
    return out / max(1, len(flats))
