"""The prediction models: Gaussian naive Bayes, L2 logistic regression,
random forest, and AdaBoost.M1, all instance-weight aware.

Training is deterministic for a given (spec, data) pair, so identical runs
serialize to identical bytes. Model files are versioned JSON; trees use the
nested dict shape documented in the tree module.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import tree as _tree
from .corpus import NON_RETWEETER, RETWEETER
from .errors import (
    CorruptModel,
    DimensionMismatch,
    NonFiniteLoss,
    SingleClass,
    VersionMismatch,
)
from .preprocess import class_weights, smote

MODEL_FORMAT_VERSION = 1

KINDS = ("naive_bayes", "logistic", "random_forest", "adaboost_m1")
IMBALANCE_BASIC = "basic"
IMBALANCE_SMOTE = "smote"

# clamp for the zero-error boosting round
_ADA_EPS = 1e-10
_VAR_FLOOR = 1e-9


def parse_imbalance(setting: str) -> tuple[str, int | None]:
    """Split an imbalance setting into (mode, ratio): 'weighted:30' -> ('weighted', 30)."""
    if setting in (IMBALANCE_BASIC, IMBALANCE_SMOTE):
        return setting, None
    if setting.startswith("weighted:"):
        ratio = int(setting.split(":", 1)[1])
        if ratio < 1:
            raise ValueError("weight ratio must be >= 1")
        return "weighted", ratio
    raise ValueError(f"bad imbalance setting {setting!r}")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    imbalance: str = IMBALANCE_BASIC
    seed: int = 0
    trees: int = 100
    max_depth: int | None = None
    features_per_split: str | int = "sqrt"
    min_leaf: int = 1
    bootstrap_size: int | None = None
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    rounds: int = 50
    base_kind: str = "tree"
    base_depth: int = 3
    base_trees: int = 100
    smote_k: int = 5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        parse_imbalance(self.imbalance)
        if self.base_kind not in ("tree", "random_forest"):
            raise ValueError(f"unknown base learner {self.base_kind!r}")
        for attr in ("trees", "min_leaf", "epochs", "rounds", "base_depth", "base_trees", "smote_k"):
            if getattr(self, attr) < 1:
                raise ValueError(f"{attr} must be >= 1")
        if self.learning_rate <= 0 or self.l2 < 0:
            raise ValueError("learning_rate must be > 0 and l2 >= 0")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(
    params: np.ndarray, X: np.ndarray, y01: np.ndarray, w: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Weighted mean log-loss with L2 on the weights (bias excluded), plus its
    analytic gradient. params = [weights..., bias]."""
    beta, bias = params[:-1], params[-1]
    z = X @ beta + bias
    yz = np.where(y01 == 1, z, -z)
    wsum = w.sum()
    loss = float((w * np.logaddexp(0.0, -yz)).sum() / wsum + l2 * (beta @ beta))
    resid = w * (_sigmoid(z) - y01)
    grad = np.concatenate([(resid @ X) / wsum + 2.0 * l2 * beta, [resid.sum() / wsum]])
    return loss, grad


def _fit_logistic(X, y, w, spec: ModelSpec):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < _VAR_FLOOR] = 1.0
    Xs = (X - mean) / std
    params = np.zeros(X.shape[1] + 1)
    for epoch in range(spec.epochs):
        loss, grad = logistic_loss_grad(params, Xs, y, w, spec.l2)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss diverged at epoch {epoch}")
        params = params - spec.learning_rate * grad
    if not np.all(np.isfinite(params)):
        raise NonFiniteLoss("parameters diverged")
    return {"weights": params[:-1], "bias": float(params[-1])}, (mean, std)


def _fit_naive_bayes(X, y, w, spec: ModelSpec):
    log_prior = np.empty(2)
    means = np.empty((2, X.shape[1]))
    variances = np.empty((2, X.shape[1]))
    wsum = w.sum()
    for c in (0, 1):
        mask = y == c
        wc = w[mask]
        Xc = X[mask]
        log_prior[c] = np.log(wc.sum() / wsum)
        mu = (wc[:, None] * Xc).sum(axis=0) / wc.sum()
        var = (wc[:, None] * (Xc - mu) ** 2).sum(axis=0) / wc.sum()
        means[c] = mu
        variances[c] = np.maximum(var, _VAR_FLOOR)
    return {"log_prior": log_prior, "mean": means, "var": variances}


def _fit_adaboost(X, y, w, spec: ModelSpec):
    dist = w / w.sum()
    ysign = 2.0 * y - 1.0
    alphas: list[float] = []
    learners: list[dict] = []
    for t in range(spec.rounds):
        if spec.base_kind == "tree":
            rng = np.random.default_rng([spec.seed, t])
            fitted = _tree.fit_tree(
                X, y, dist, rng, max_depth=spec.base_depth, min_leaf=spec.min_leaf
            )
            learner = {"kind": "tree", "tree": fitted}
            frac = _tree.tree_predict(fitted, X)
        else:
            trees = _tree.fit_forest(
                X, y, dist,
                seed_prefix=(spec.seed, t),
                n_trees=spec.base_trees,
                max_depth=spec.max_depth,
                min_leaf=spec.min_leaf,
                features_per_split=spec.features_per_split,
                bootstrap_size=spec.bootstrap_size,
            )
            learner = {"kind": "random_forest", "trees": trees}
            frac = _tree.forest_predict(trees, X)
        pred = np.where(frac >= 0.5, 1.0, -1.0)
        err = float(dist[pred != ysign].sum())
        if err >= 0.5:
            break
        if err == 0.0:
            alphas.append(0.5 * np.log((1.0 - _ADA_EPS) / _ADA_EPS))
            learners.append(learner)
            break
        alpha = 0.5 * np.log((1.0 - err) / err)
        alphas.append(alpha)
        learners.append(learner)
        dist = dist * np.exp(-alpha * ysign * pred)
        dist = dist / dist.sum()
    prior = float((w * y).sum() / w.sum())
    return {"alphas": alphas, "learners": learners, "prior": prior}


@dataclass
class TrainedModel:
    spec: ModelSpec
    manifest: tuple[str, ...]
    mask: np.ndarray  # bool, aligned with manifest
    params: dict
    standardization: tuple[np.ndarray, np.ndarray] | None = None
    metadata: dict = field(default_factory=dict)
    _flat_cache: list | None = field(default=None, repr=False, compare=False)

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def selected_names(self) -> list[str]:
        return [n for n, keep in zip(self.manifest, self.mask) if keep]

    def to_obj(self) -> dict:
        std = None
        if self.standardization is not None:
            std = {
                "mean": self.standardization[0].tolist(),
                "std": self.standardization[1].tolist(),
            }
        params = dict(self.params)
        for key in ("log_prior", "mean", "var", "weights"):
            if key in params and isinstance(params[key], np.ndarray):
                params[key] = params[key].tolist()
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "spec": asdict(self.spec),
            "manifest": list(self.manifest),
            "mask": self.selected_names,
            "standardization": std,
            "params": params,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, separators=(",", ":"))

    @property
    def model_id(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]

    # -- prediction ----------------------------------------------------

    def _masked(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.manifest):
            raise DimensionMismatch(
                f"expected {len(self.manifest)} features, got {X.shape[1]}"
            )
        return X[:, self.mask]

    def _flats(self, trees: list[dict]) -> list:
        if self._flat_cache is None:
            self._flat_cache = [_tree.flatten_tree(t) for t in trees]
        return self._flat_cache

    def predict_proba(self, X: np.ndarray) -> np.ndarray | float:
        """Probability of the positive (reposter) class; scalar for 1-D input."""
        single = np.asarray(X).ndim == 1
        Xm = self._masked(X)
        kind = self.spec.kind
        if kind == "logistic":
            mean, std = self.standardization
            z = ((Xm - mean) / std) @ self.params["weights"] + self.params["bias"]
            p = _sigmoid(z)
        elif kind == "naive_bayes":
            logp = np.empty((len(Xm), 2))
            for c in (0, 1):
                mu = self.params["mean"][c]
                var = self.params["var"][c]
                ll = -0.5 * (np.log(2.0 * np.pi * var) + (Xm - mu) ** 2 / var)
                logp[:, c] = self.params["log_prior"][c] + ll.sum(axis=1)
            m = logp.max(axis=1, keepdims=True)
            expd = np.exp(logp - m)
            p = expd[:, 1] / expd.sum(axis=1)
        elif kind == "random_forest":
            p = _tree.forest_predict(self.params["trees"], Xm, self._flats(self.params["trees"]))
        elif kind == "adaboost_m1":
            p = self._adaboost_proba(Xm)
        else:  # pragma: no cover - spec validation forbids this
            raise ValueError(f"unknown kind {kind!r}")
        p = np.clip(p, 0.0, 1.0)
        return float(p[0]) if single else p

    def _adaboost_proba(self, Xm: np.ndarray) -> np.ndarray:
        alphas = self.params["alphas"]
        learners = self.params["learners"]
        if not learners:
            return np.full(len(Xm), self.params.get("prior", 0.5))
        margin = np.zeros(len(Xm))
        for alpha, learner in zip(alphas, learners):
            if learner["kind"] == "tree":
                frac = _tree.tree_predict(learner["tree"], Xm)
            else:
                frac = _tree.forest_predict(learner["trees"], Xm)
            margin += alpha * np.where(frac >= 0.5, 1.0, -1.0)
        return _sigmoid(2.0 * margin)

    def classify(self, X: np.ndarray, threshold: float = 0.5):
        """Label(s) at the given probability cutoff (>= threshold is positive)."""
        p = self.predict_proba(X)
        if np.isscalar(p):
            return RETWEETER if p >= threshold else NON_RETWEETER
        return [RETWEETER if v >= threshold else NON_RETWEETER for v in p]


def train(
    spec: ModelSpec,
    X: np.ndarray,
    y: np.ndarray,
    feature_names: list[str] | tuple[str, ...],
    selected: list[str] | None = None,
    dataset_name: str | None = None,
    sample_weight: np.ndarray | None = None,
) -> TrainedModel:
    """Fit a model per the spec, applying its imbalance setting.

    ``selected`` restricts training and prediction to those features (the
    model keeps the full manifest and applies the mask itself). An explicit
    ``sample_weight`` multiplies whatever the imbalance setting produces.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatch("X rows must match y length")
    if X.shape[1] != len(feature_names):
        raise DimensionMismatch(
            f"X has {X.shape[1]} columns but {len(feature_names)} names given"
        )
    counts = np.bincount(y, minlength=2)
    if counts.min() < 2:
        raise SingleClass("need at least 2 instances of each class")

    manifest = tuple(feature_names)
    if selected is None:
        mask = np.ones(len(manifest), dtype=bool)
    else:
        chosen = set(selected)
        unknown = chosen - set(manifest)
        if unknown:
            raise DimensionMismatch(f"selected features not in manifest: {sorted(unknown)}")
        mask = np.array([n in chosen for n in manifest], dtype=bool)
    Xm = X[:, mask]

    mode, ratio = parse_imbalance(spec.imbalance)
    if mode == "smote":
        Xm, y = smote(Xm, y, k=spec.smote_k, seed=spec.seed)
        w = np.ones(len(y))
    elif mode == "weighted":
        w = class_weights(y, ratio)
    else:
        w = np.ones(len(y))
    if sample_weight is not None:
        if len(sample_weight) != len(w):
            raise DimensionMismatch("sample_weight length mismatch")
        w = w * np.asarray(sample_weight, dtype=np.float64)

    yf = y.astype(np.float64)
    standardization = None
    if spec.kind == "logistic":
        params, standardization = _fit_logistic(Xm, yf, w, spec)
    elif spec.kind == "naive_bayes":
        params = _fit_naive_bayes(Xm, yf, w, spec)
    elif spec.kind == "random_forest":
        params = {
            "trees": _tree.fit_forest(
                Xm, yf, w,
                seed_prefix=(spec.seed,),
                n_trees=spec.trees,
                max_depth=spec.max_depth,
                min_leaf=spec.min_leaf,
                features_per_split=spec.features_per_split,
                bootstrap_size=spec.bootstrap_size,
            )
        }
    else:
        params = _fit_adaboost(Xm, yf, w, spec)

    metadata = {"dataset": dataset_name, "trained_at": None}
    return TrainedModel(
        spec=spec,
        manifest=manifest,
        mask=mask,
        params=params,
        standardization=standardization,
        metadata=metadata,
    )


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(model.to_json() + "\n", encoding="utf-8")


def _require(obj: dict, key: str):
    try:
        return obj[key]
    except (KeyError, TypeError) as exc:
        raise CorruptModel(f"missing field {key!r}") from exc


def load_model(path: str | Path) -> TrainedModel:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptModel(str(exc)) from exc
    return model_from_obj(obj)


def model_from_obj(obj: dict) -> TrainedModel:
    """Reconstruct a model from its decoded JSON form, validating as load_model does."""
    if not isinstance(obj, dict):
        raise CorruptModel("model file is not a JSON object")
    version = _require(obj, "format_version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"format_version {version} (supported: {MODEL_FORMAT_VERSION})")
    try:
        spec = ModelSpec(**_require(obj, "spec"))
    except (TypeError, ValueError) as exc:
        raise CorruptModel(f"bad spec: {exc}") from exc
    manifest = tuple(_require(obj, "manifest"))
    chosen = set(_require(obj, "mask"))
    mask = np.array([n in chosen for n in manifest], dtype=bool)
    params = dict(_require(obj, "params"))
    for key in ("log_prior", "mean", "var", "weights"):
        if key in params:
            params[key] = np.asarray(params[key], dtype=np.float64)
            if not np.all(np.isfinite(params[key])):
                raise CorruptModel(f"non-finite values in params[{key!r}]")
    std = obj.get("standardization")
    standardization = None
    if std is not None:
        standardization = (
            np.asarray(_require(std, "mean"), dtype=np.float64),
            np.asarray(_require(std, "std"), dtype=np.float64),
        )
    model = TrainedModel(
        spec=spec,
        manifest=manifest,
        mask=mask,
        params=params,
        standardization=standardization,
        metadata=obj.get("metadata", {}),
    )
    if int(mask.sum()) == 0:
        raise CorruptModel("empty feature mask")
    _validate_dimensions(model)
    return model


def _validate_dimensions(model: TrainedModel) -> None:
    d = int(model.mask.sum())
    kind = model.spec.kind
    ok = True
    if kind == "logistic":
        ok = len(model.params.get("weights", ())) == d and model.standardization is not None
    elif kind == "naive_bayes":
        ok = model.params.get("mean", np.empty((0, 0))).shape == (2, d)
    elif kind == "random_forest":
        ok = isinstance(model.params.get("trees"), list) and len(model.params["trees"]) > 0
    elif kind == "adaboost_m1":
        ok = isinstance(model.params.get("learners"), list)
    if not ok:
        raise CorruptModel(f"parameters inconsistent with manifest for kind {kind!r}")


def grid_specs(kind: str, ratios=(10, 20, 30, 40, 50), **kwargs) -> list[ModelSpec]:
    """Cost-sensitive specs for one model kind over the weight-ratio grid."""
    return [ModelSpec(kind=kind, imbalance=f"weighted:{r}", **kwargs) for r in ratios]


def clone_with_seed(spec: ModelSpec, seed: int) -> ModelSpec:
    return replace(spec, seed=seed)
