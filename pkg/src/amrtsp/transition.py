"""Binary maximum-entropy model for AGTSP transitions.

The two-class maxent over ("yes", "no") with a feature function that fires
only for "yes" is exactly logistic regression, so ``p(yes | n_i, n_j)`` is
``sigmoid(w . f_scaled + b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from .amr import AmrGraph, undirected_distance
from .lm import BOS, EOS, NgramLm, score_continuation

if TYPE_CHECKING:
    from .agtsp import AgtspNode

FEATURE_NAMES = ("lm_score", "word_count", "path_length")
MODEL_HEADER = "amrtsp-transition-model 1"
# p is clamped to [EPS, 1 - EPS] before taking -ln so costs stay finite and > 0
EPS = 1e-12


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    lm_score: float
    word_count: int
    path_length: int

    def as_array(self) -> np.ndarray:
        return np.array([self.lm_score, self.word_count, self.path_length], dtype=float)


@dataclass(frozen=True)
class TransitionExample:
    features: FeatureVector
    label: bool


def _tokens(tokens: Sequence[str], lowercase: bool) -> List[str]:
    return [t.lower() for t in tokens] if lowercase else list(tokens)


def extract_features(
    src: "AgtspNode", dst: "AgtspNode", graph: AmrGraph, lm: NgramLm, lowercase: bool = True
) -> FeatureVector:
    """Features for moving from ``src`` to ``dst``.

    The LM feature scores the destination translation after the source
    translation, so summed over a tour it equals the sentence log10 score.
    Word count is that of the destination translation only.
    """
    context = [BOS] if src.is_start else _tokens(src.rule.translation, lowercase)
    if dst.is_end:
        continuation, words = [EOS], 0
    else:
        continuation = _tokens(dst.rule.translation, lowercase)
        words = len(continuation)
    lm_score = score_continuation(lm, context, continuation)
    if src.is_start or src.is_end or dst.is_start or dst.is_end:
        path = 0
    else:
        path = undirected_distance(graph, src.rule.root, dst.rule.root)
    return FeatureVector(lm_score, words, path)


def sigmoid(z):
    # stable for large |z|; saturates instead of overflowing
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class TransitionModel:
    weights: np.ndarray = field(default_factory=lambda: np.zeros(4))
    mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    std: np.ndarray = field(default_factory=lambda: np.ones(3))
    losses: Tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(4)
        self.mean = np.asarray(self.mean, dtype=float).reshape(3)
        self.std = np.asarray(self.std, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if not np.all(self.std > 0):
            raise ValueError("feature stdevs must be positive")

    def design(self, X: np.ndarray) -> np.ndarray:
        """Scaled features with a trailing bias column."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Xs = (X - self.mean) / self.std
        return np.hstack([Xs, np.ones((Xs.shape[0], 1))])

    def logit(self, f: FeatureVector) -> float:
        return float((self.design(f.as_array()) @ self.weights)[0])

    def probability(self, f: FeatureVector) -> float:
        return float(sigmoid(self.logit(f)))

    def cost(self, f: FeatureVector) -> float:
        """-ln p(yes), the traveling cost of a legal inter-rule move."""
        p = min(max(self.probability(f), EPS), 1.0 - EPS)
        return -math.log(p)

    def unscaled(self) -> Tuple[np.ndarray, float]:
        """Equivalent (weights, bias) acting on raw, unscaled features."""
        w = self.weights[:3] / self.std
        b = self.weights[3] - float(np.sum(self.weights[:3] * self.mean / self.std))
        return w, b

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(MODEL_HEADER + "\n")
            for i, name in enumerate(FEATURE_NAMES):
                fh.write(f"{name} {float(self.weights[i])!r} {float(self.mean[i])!r} {float(self.std[i])!r}\n")
            fh.write(f"bias {float(self.weights[3])!r} 0.0 1.0\n")

    @classmethod
    def load(cls, path) -> "TransitionModel":
        with open(path, encoding="utf-8") as fh:
            lines = [ln.split() for ln in fh if ln.strip()]
        if not lines or " ".join(lines[0]) != MODEL_HEADER:
            raise ValueError(f"{path}: not a transition model file (expected {MODEL_HEADER!r})")
        rows = {}
        for parts in lines[1:]:
            if len(parts) != 4:
                raise ValueError(f"{path}: bad line {' '.join(parts)!r}")
            rows[parts[0]] = [float(x) for x in parts[1:]]
        missing = [n for n in FEATURE_NAMES + ("bias",) if n not in rows]
        if missing:
            raise ValueError(f"{path}: missing rows {missing}")
        weights = [rows[n][0] for n in FEATURE_NAMES] + [rows["bias"][0]]
        return cls(
            np.array(weights),
            np.array([rows[n][1] for n in FEATURE_NAMES]),
            np.array([rows[n][2] for n in FEATURE_NAMES]),
        )


def probability(model: TransitionModel, f: FeatureVector) -> float:
    return model.probability(f)


def loss_and_grad(weights: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> Tuple[float, np.ndarray]:
    """Mean negative log-likelihood plus ``l2/2 * |w|^2`` (bias unpenalised).

    ``X`` already carries the bias column.
    """
    z = X @ weights
    nll = np.mean(np.logaddexp(0.0, z) - y * z)
    reg = weights.copy()
    reg[-1] = 0.0
    loss = float(nll + 0.5 * l2 * reg @ reg)
    grad = X.T @ (sigmoid(z) - y) / len(y) + l2 * reg
    return loss, grad


def feature_matrix(examples: Sequence[TransitionExample]) -> Tuple[np.ndarray, np.ndarray]:
    X = np.array([e.features.as_array() for e in examples], dtype=float).reshape(-1, 3)
    y = np.array([1.0 if e.label else 0.0 for e in examples])
    return X, y


def train(
    examples: Sequence[TransitionExample],
    l2: float = 1e-3,
    epochs: int = 500,
    learning_rate: float = 0.5,
    seed: int = 0,
    batch_size: Optional[int] = None,
    tol: float = 1e-10,
    scale: bool = True,
) -> TransitionModel:
    """Fit the maxent weights by gradient descent.

    Full-batch by default.  With ``batch_size`` set, mini-batches follow a
    permutation drawn from ``seed`` each epoch.  The full training loss is
    checked after every epoch and a :class:`TrainingError` is raised if it
    goes up or stops being finite.
    """
    if l2 < 0:
        raise ValueError("l2 must be >= 0")
    X, y = feature_matrix(examples)
    if len(y) == 0 or y.min() == y.max():
        raise TrainingError("training examples must contain both labels")
    if scale:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0] = 1.0
    else:
        mean, std = np.zeros(3), np.ones(3)
    model = TransitionModel(np.zeros(4), mean, std)
    D = model.design(X)
    w = np.zeros(4)
    rng = np.random.default_rng(seed)
    prev, _ = loss_and_grad(w, D, y, l2)
    losses = [prev]
    for epoch in range(epochs):
        if batch_size is None:
            _, g = loss_and_grad(w, D, y, l2)
            w = w - learning_rate * g
        else:
            perm = rng.permutation(len(y))
            for s in range(0, len(y), batch_size):
                idx = perm[s:s + batch_size]
                _, g = loss_and_grad(w, D[idx], y[idx], l2)
                w = w - learning_rate * g
        loss, _ = loss_and_grad(w, D, y, l2)
        if not math.isfinite(loss) or not np.all(np.isfinite(w)):
            raise TrainingError(f"non-finite loss at epoch {epoch + 1}")
        if loss > prev + 1e-12 * max(1.0, abs(prev)):
            raise TrainingError(
                f"training loss increased at epoch {epoch + 1}: {prev:.6g} -> {loss:.6g}; "
                f"lower the learning rate (now {learning_rate})")
        losses.append(loss)
        if prev - loss < tol:
            break
        prev = loss
    return TransitionModel(w, mean, std, tuple(losses))


def accuracy(model: TransitionModel, examples: Sequence[TransitionExample]) -> float:
    X, y = feature_matrix(examples)
    pred = (model.design(X) @ model.weights) > 0
    return float(np.mean(pred == (y > 0.5)))
