"""Scorers audited by the pipeline.

* L2-penalised logistic regression fitted by damped Newton steps on
  standardised features.
* Bipartite RankBoost over single-feature threshold stumps, optionally
  followed by Platt scaling so the output is a probability.

A fitted model is a :class:`Scorer`, which round-trips through JSON.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from xauc.errors import ConvergenceWarning, DimensionMismatch, SingleClassData

__all__ = [
    "TabularDataset",
    "Scorer",
    "PlattCalibrator",
    "sigmoid",
    "train_logistic",
    "train_rankboost",
    "platt_scale",
    "score",
    "SCORER_FORMAT_VERSION",
]

SCORER_FORMAT_VERSION = 1
KINDS = ("logistic", "rankboost", "rankboost_calibrated")


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-np.logaddexp(0.0, -z))


@dataclass
class TabularDataset:
    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim == 1:
            self.features = self.features[:, None]
        self.labels = np.asarray(self.labels).astype(int)
        self.groups = np.asarray(self.groups, dtype=object)
        n = self.features.shape[0]
        if not (len(self.labels) == len(self.groups) == n):
            raise DimensionMismatch(
                f"row counts differ: features {n}, labels {len(self.labels)}, groups {len(self.groups)}"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")
        if not self.feature_names:
            self.feature_names = [f"x{j}" for j in range(self.features.shape[1])]

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "TabularDataset":
        return TabularDataset(self.features[idx], self.labels[idx], self.groups[idx], list(self.feature_names))

    def group_counts(self) -> dict:
        values, counts = np.unique(self.groups.astype(str), return_counts=True)
        return dict(zip(values.tolist(), counts.tolist()))


@dataclass
class Scorer:
    """A fitted risk score.

    ``params`` holds plain lists/floats so the scorer serialises as-is:

    * logistic: ``mean``, ``scale``, ``coef``, ``intercept``
    * rankboost: ``stumps`` as ``[feature, threshold, direction, alpha]`` rows
    * rankboost_calibrated: the rankboost entries plus ``platt_a``, ``platt_b``
    """

    kind: str
    n_features: int
    params: dict
    feature_names: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scorer kind {self.kind!r}")

    @property
    def probabilistic(self) -> bool:
        return self.kind in ("logistic", "rankboost_calibrated")

    def raw_margin(self, X) -> np.ndarray:
        X = _check_width(X, self.n_features)
        if self.kind == "logistic":
            Z = (X - np.asarray(self.params["mean"])) / np.asarray(self.params["scale"])
            return Z @ np.asarray(self.params["coef"]) + self.params["intercept"]
        return _stump_margin(X, self.params["stumps"])

    def __call__(self, X) -> np.ndarray:
        return score(self, X)

    def to_dict(self) -> dict:
        return {
            "format": "xauc.scorer",
            "version": SCORER_FORMAT_VERSION,
            "kind": self.kind,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Scorer":
        if d.get("format") != "xauc.scorer":
            raise ValueError("not a serialised scorer")
        if d.get("version") != SCORER_FORMAT_VERSION:
            raise ValueError(f"unsupported scorer format version {d.get('version')!r}")
        return cls(d["kind"], int(d["n_features"]), d["params"], list(d.get("feature_names", [])))

    @classmethod
    def from_json(cls, text: str) -> "Scorer":
        return cls.from_dict(json.loads(text))


def _check_width(X, width: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != width:
        raise DimensionMismatch(f"expected {width} features, got {X.shape[1]}")
    return X


def _stump_margin(X, stumps) -> np.ndarray:
    out = np.zeros(X.shape[0])
    for feature, threshold, direction, alpha in stumps:
        above = X[:, int(feature)] > threshold
        out += alpha * (above if direction > 0 else ~above)
    return out


def score(model: Scorer, X) -> np.ndarray:
    """Risk scores for the rows of ``X``; probabilities for probabilistic kinds."""
    margin = model.raw_margin(X)
    if model.kind == "logistic":
        return sigmoid(margin)
    if model.kind == "rankboost_calibrated":
        return sigmoid(model.params["platt_a"] * margin + model.params["platt_b"])
    return margin


def _require_both_classes(labels) -> None:
    labels = np.asarray(labels)
    if labels.size == 0 or np.all(labels == labels.flat[0]):
        raise SingleClassData("training data must contain both outcomes")


# -- logistic regression ----------------------------------------------------


def _logistic_loss(Z, y, w, b, reg) -> float:
    margin = Z @ w + b
    # log(1 + exp(-m)) for y=1, log(1 + exp(m)) for y=0
    nll = np.logaddexp(0.0, np.where(y == 1, -margin, margin)).sum()
    return float(nll + 0.5 * reg * (w @ w))


def train_logistic(
    data: TabularDataset,
    reg_strength: float = 1.0,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> Scorer:
    """Fit ``sum(logloss) + reg_strength/2 * |w|^2`` (intercept unpenalised).

    Features are standardised first; the transform is stored in the scorer.
    Each Newton step is halved until the objective stops increasing, so the
    loss history is nonincreasing.  Hitting ``max_iter`` emits a
    :class:`ConvergenceWarning`.
    """
    if reg_strength <= 0:
        raise ValueError("reg_strength must be positive")
    _require_both_classes(data.labels)
    X = data.features
    y = data.labels.astype(float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    n, p = Z.shape

    theta = np.zeros(p + 1)  # weights then intercept
    Zb = np.hstack([Z, np.ones((n, 1))])
    penalty = np.full(p + 1, reg_strength)
    penalty[-1] = 0.0
    loss = _logistic_loss(Z, y, theta[:-1], theta[-1], reg_strength)
    history = [loss]
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        prob = sigmoid(Zb @ theta)
        grad = Zb.T @ (prob - y) + penalty * theta
        if np.max(np.abs(grad)) < tol:
            converged = True
            n_iter -= 1
            break
        weights = prob * (1.0 - prob)
        hess = (Zb * weights[:, None]).T @ Zb + np.diag(penalty)
        hess[-1, -1] += 1e-12
        step = np.linalg.solve(hess, grad)
        t = 1.0
        while True:
            candidate = theta - t * step
            new_loss = _logistic_loss(Z, y, candidate[:-1], candidate[-1], reg_strength)
            if new_loss <= loss or t < 1e-10:
                break
            t *= 0.5
        if new_loss > loss:
            break
        theta, loss = candidate, new_loss
        history.append(loss)
    else:
        prob = sigmoid(Zb @ theta)
        grad = Zb.T @ (prob - y) + penalty * theta
        converged = bool(np.max(np.abs(grad)) < tol)
    if not converged:
        warnings.warn(f"logistic regression stopped after {n_iter} iterations", ConvergenceWarning, stacklevel=2)

    return Scorer(
        "logistic",
        p,
        {
            "mean": mean.tolist(),
            "scale": scale.tolist(),
            "coef": theta[:-1].tolist(),
            "intercept": float(theta[-1]),
            "reg_strength": reg_strength,
        },
        list(data.feature_names),
        info={"n_iter": n_iter, "converged": converged, "loss_history": history},
    )


# -- RankBoost --------------------------------------------------------------

_MAX_EDGE = 1.0 - 1e-8


def train_rankboost(data: TabularDataset, rounds: int = 100, calibrate: bool = False) -> Scorer:
    """Bipartite RankBoost with {0, 1} threshold stumps.

    Positives and negatives carry separate weight vectors (each summing to
    one).  A stump ``h`` has edge ``r = sum_pos v1*h - sum_neg v0*h``; each
    round takes the stump with the largest ``|r|`` (flipping its direction so
    ``r >= 0``), ties going to the lowest feature index and then the lowest
    threshold, and weights it by ``alpha = 0.5 * log((1 + r) / (1 - r))``.
    Edges of exactly one are capped so a separating stump gets a large but
    finite weight.

    With ``calibrate=True`` the ensemble margin is passed through a Platt
    sigmoid fitted on the training margins.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    _require_both_classes(data.labels)
    X = data.features
    is_pos = data.labels == 1
    n = X.shape[0]

    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    valid = Xs[1:] > Xs[:-1]  # a cut between sorted rows k and k+1 exists
    cuts = (Xs[1:] + Xs[:-1]) / 2.0

    v1 = np.where(is_pos, 1.0 / is_pos.sum(), 0.0)
    v0 = np.where(~is_pos, 1.0 / (~is_pos).sum(), 0.0)
    stumps = []
    edges = []
    log_loss = 0.0
    loss_history = [1.0]
    for _ in range(rounds):
        signed = v1 - v0
        # edge of "x > cut_k" is the signed mass strictly above row k
        # (total signed mass is zero, so this is minus the running sum)
        edge = -np.cumsum(signed[order], axis=0)[:-1]
        edge = np.where(valid, edge, 0.0)
        best = int(np.argmax(np.abs(edge).T.ravel()))
        feature, k = divmod(best, n - 1)
        r = float(edge[k, feature])
        if abs(r) <= 1e-12:
            break
        direction = 1 if r > 0 else -1
        r = min(abs(r), _MAX_EDGE)
        alpha = 0.5 * math.log((1.0 + r) / (1.0 - r))
        threshold = float(cuts[k, feature])
        h = X[:, feature] > threshold
        if direction < 0:
            h = ~h
        v1 = v1 * np.exp(-alpha * h)
        v0 = v0 * np.exp(alpha * h)
        z1, z0 = v1.sum(), v0.sum()
        v1, v0 = v1 / z1, v0 / z0
        log_loss += math.log(z1) + math.log(z0)
        loss_history.append(math.exp(log_loss))
        stumps.append([int(feature), threshold, direction, alpha])
        edges.append(r)

    params = {"stumps": stumps}
    info = {"edges": edges, "loss_history": loss_history, "rounds": len(stumps)}
    scorer = Scorer("rankboost", X.shape[1], params, list(data.feature_names), info=info)
    if calibrate:
        cal = platt_scale(scorer.raw_margin(X), data.labels)
        params.update({"platt_a": cal.a, "platt_b": cal.b})
        info["platt_fallback"] = cal.fallback
        scorer = Scorer("rankboost_calibrated", X.shape[1], params, list(data.feature_names), info=info)
    return scorer


# -- Platt scaling ----------------------------------------------------------


@dataclass(frozen=True)
class PlattCalibrator:
    """``p = sigmoid(a * s + b)``; ``fallback`` marks the constant fit."""

    a: float
    b: float
    fallback: bool = False
    n_iter: int = 0

    def __call__(self, raw):
        return sigmoid(self.a * np.asarray(raw, dtype=float) + self.b)


def _soft_nll(s, t, a, b) -> float:
    m = a * s + b
    return float(np.sum(t * np.logaddexp(0.0, -m) + (1.0 - t) * np.logaddexp(0.0, m)))


def platt_scale(raw_scores, labels, max_iter: int = 100, tol: float = 1e-10) -> PlattCalibrator:
    """Fit a sigmoid to raw scores by maximum likelihood on smoothed targets.

    Targets are ``(n_pos + 1) / (n_pos + 2)`` for positives and
    ``1 / (n_neg + 2)`` for negatives.  A fitted slope ``a <= 0`` would not
    preserve the ranking, so the fit then falls back to the best constant
    (``a = 0``) with ``fallback=True``.
    """
    s = np.asarray(raw_scores, dtype=float).ravel()
    y = np.asarray(labels).ravel().astype(int)
    if s.shape != y.shape:
        raise DimensionMismatch("raw_scores and labels differ in length")
    _require_both_classes(y)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    # work on standardised scores for conditioning, map back at the end
    center = float(s.mean())
    spread = float(s.std()) or 1.0
    u = (s - center) / spread
    a, b = 0.0, math.log((n_pos + 1.0) / (n_neg + 1.0))
    loss = _soft_nll(u, t, a, b)
    it = 0
    for it in range(1, max_iter + 1):
        p = sigmoid(a * u + b)
        d1 = p - t
        g = np.array([np.dot(u, d1), d1.sum()])
        if np.max(np.abs(g)) < tol * max(1, s.size):
            break
        w = p * (1.0 - p)
        H = np.array([[np.dot(u * u, w), np.dot(u, w)], [np.dot(u, w), w.sum()]])
        H += 1e-12 * np.eye(2)
        step = np.linalg.solve(H, g)
        lr = 1.0
        while lr > 1e-10:
            na, nb = a - lr * step[0], b - lr * step[1]
            new_loss = _soft_nll(u, t, na, nb)
            if new_loss <= loss:
                break
            lr *= 0.5
        else:
            break
        a, b, loss = na, nb, new_loss

    if a <= 0:
        return PlattCalibrator(0.0, math.log(t.mean() / (1.0 - t.mean())), fallback=True, n_iter=it)
    return PlattCalibrator(a / spread, b - a * center / spread, fallback=False, n_iter=it)
