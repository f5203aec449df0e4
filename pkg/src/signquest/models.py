"""Differentiable toy victims: linear and quadratic scoring rules, a
concave tuning testbed, and a small trainable MLP classifier, plus IDX
dataset loading and gradient diagnostics."""

from __future__ import annotations

import abc
import struct
from dataclasses import dataclass, field

import numpy as np


class ToyModel(abc.ABC):
    """White-box victim interface.

    loss and gradient take a single input x and integer label y. predict
    returns the asserted class and is free for attackers to call; only
    loss evaluations count as queries (see oracles.LossOracle).
    """

    input_range: tuple[float, float] = (-np.inf, np.inf)

    @abc.abstractmethod
    def loss(self, x: np.ndarray, y: int) -> float:
        ...

    @abc.abstractmethod
    def gradient(self, x: np.ndarray, y: int) -> np.ndarray:
        ...

    @abc.abstractmethod
    def predict(self, x: np.ndarray) -> int:
        ...


class LinearModel(ToyModel):
    """Binary margin model with score c.x + b.

    predict is 1 when the score is positive. The loss is the signed
    margin (1 - 2y) * (c.x + b), so it grows as the input crosses the
    boundary away from the true label and its gradient is constant.
    """

    def __init__(self, c, bias: float = 0.0,
                 input_range=(-np.inf, np.inf)):
        self.c = np.asarray(c, dtype=np.float64)
        if self.c.ndim != 1:
            raise ValueError("c must be 1-D")
        self.bias = float(bias)
        self.input_range = (float(input_range[0]), float(input_range[1]))

    def score(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=np.float64) + self.bias)

    def loss(self, x, y):
        return (1.0 - 2.0 * y) * self.score(x)

    def gradient(self, x, y):
        return (1.0 - 2.0 * y) * self.c

    def predict(self, x):
        return int(self.score(x) > 0)


class QuadraticModel(ToyModel):
    """Quadratic form loss x.Q.x with a symmetric Q; labels are ignored."""

    def __init__(self, Q, input_range=(-np.inf, np.inf)):
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        self.Q = Q
        self.input_range = (float(input_range[0]), float(input_range[1]))

    def loss(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        return float(x @ self.Q @ x)

    def gradient(self, x, y):
        return 2.0 * (self.Q @ np.asarray(x, dtype=np.float64))

    def predict(self, x):
        return int(self.loss(x, 0) > 0)


class SyntheticConcaveLoss(ToyModel):
    """Concave testbed -(x - x*)^2 with the optimum at the box center.

    predict never changes, so attacks on this model cannot succeed; it
    exists to compare optimizer progress under a known landscape where
    the best value inside any off-center box sits on the boundary.
    """

    def __init__(self, n: int, input_range=(0.0, 1.0)):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.input_range = (float(input_range[0]), float(input_range[1]))
        self.x_star = np.full(n, (self.input_range[0] + self.input_range[1]) / 2.0)

    def loss(self, x, y):
        d = np.asarray(x, dtype=np.float64) - self.x_star
        return float(-(d @ d))

    def gradient(self, x, y):
        return -2.0 * (np.asarray(x, dtype=np.float64) - self.x_star)

    def predict(self, x):
        return 0


def softmax(z: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class MlpClassifier(ToyModel):
    """One-hidden-layer ReLU network with softmax cross-entropy loss.

    Forward and backward passes are written out explicitly so that the
    input gradient is available in closed form for white-box baselines.
    """

    def __init__(self, w1, b1, w2, b2, input_range=(0.0, 1.0)):
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        self.input_range = (float(input_range[0]), float(input_range[1]))
        self.train_accuracy: float | None = None

    @property
    def num_features(self) -> int:
        return self.w1.shape[0]

    @property
    def num_classes(self) -> int:
        return self.w2.shape[1]

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        hidden = np.maximum(x @ self.w1 + self.b1, 0.0)
        return hidden @ self.w2 + self.b2

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def loss(self, x, y):
        z = self.logits(x)
        # -log softmax_y without forming the exponentials twice
        shifted = z - z.max()
        return float(np.log(np.exp(shifted).sum()) - shifted[int(y)])

    def gradient(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        z1 = x @ self.w1 + self.b1
        a1 = np.maximum(z1, 0.0)
        p = softmax(a1 @ self.w2 + self.b2)
        dz2 = p.copy()
        dz2[int(y)] -= 1.0
        dz1 = (self.w2 @ dz2) * (z1 > 0)
        return self.w1 @ dz1

    def predict(self, x):
        return int(np.argmax(self.logits(x)))

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(np.atleast_2d(X)), axis=1)

    def accuracy(self, X: np.ndarray, labels: np.ndarray) -> float:
        return float(np.mean(self.predict_batch(X) == np.asarray(labels)))


@dataclass
class IdxDataset:
    """Flattened images scaled to [0, 1] with integer labels."""

    images: np.ndarray
    labels: np.ndarray
    image_shape: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return self.images.shape[0]


def _read_idx_header(raw: bytes, path: str, expect_magic: int, dims: int):
    header = 4 * (1 + dims)
    if len(raw) < header:
        raise ValueError(f"{path}: truncated IDX header")
    fields = struct.unpack(f">{1 + dims}I", raw[:header])
    if fields[0] != expect_magic:
        raise ValueError(
            f"{path}: bad magic 0x{fields[0]:08x}, expected 0x{expect_magic:08x}")
    return fields[1:], raw[header:]


def load_idx(images_path: str, labels_path: str) -> IdxDataset:
    """Load an IDX image/label file pair (the classic big-endian layout).

    Pixels are scaled to [0, 1] and flattened per image. Raises
    ValueError on a wrong magic number, truncated payload, or mismatched
    image and label counts.
    """
    with open(images_path, "rb") as fh:
        raw = fh.read()
    (count, rows, cols), body = _read_idx_header(raw, images_path, 0x00000803, 3)
    expected = count * rows * cols
    if len(body) < expected:
        raise ValueError(f"{images_path}: truncated image payload")
    pixels = np.frombuffer(body[:expected], dtype=np.uint8)
    images = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0

    with open(labels_path, "rb") as fh:
        raw = fh.read()
    (label_count,), body = _read_idx_header(raw, labels_path, 0x00000801, 1)
    if len(body) < label_count:
        raise ValueError(f"{labels_path}: truncated label payload")
    labels = np.frombuffer(body[:label_count], dtype=np.uint8).astype(np.int64)

    if label_count != count:
        raise ValueError(
            f"image count {count} does not match label count {label_count}")
    return IdxDataset(images=images, labels=labels, image_shape=(rows, cols))


def make_blobs(num_samples: int, num_features: int, num_classes: int,
               spread: float = 3.0, cluster_std: float = 0.6,
               rng: np.random.Generator | int | None = None):
    """Seeded Gaussian blob dataset: one isotropic cluster per class.

    Returns (X, y) with X of shape (num_samples, num_features).
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    centers = rng.uniform(-spread, spread, size=(num_classes, num_features))
    y = rng.integers(0, num_classes, size=num_samples)
    X = centers[y] + cluster_std * rng.standard_normal((num_samples, num_features))
    return X, y


def _unpack_dataset(dataset):
    if isinstance(dataset, IdxDataset):
        return dataset.images, dataset.labels
    X, y = dataset
    return np.asarray(X, dtype=np.float64), np.asarray(y)


def train_mlp(dataset, epochs: int, learning_rate: float = 0.05,
              seed: int = 0, hidden_dim: int = 32, batch_size: int = 32,
              input_range=None) -> MlpClassifier:
    """Train an MlpClassifier with plain minibatch SGD.

    Deterministic for a fixed seed: initialization, shuffling, and
    batching all draw from one seeded generator. With epochs=0 the
    returned network is the raw random initialization. input_range
    defaults to the bounding box of the training features.
    """
    X, y = _unpack_dataset(dataset)
    n_samples, n_features = X.shape
    n_classes = int(np.max(y)) + 1
    rng = np.random.default_rng(seed)

    w1 = rng.standard_normal((n_features, hidden_dim)) * np.sqrt(2.0 / n_features)
    b1 = np.zeros(hidden_dim)
    w2 = rng.standard_normal((hidden_dim, n_classes)) * np.sqrt(2.0 / hidden_dim)
    b2 = np.zeros(n_classes)

    if input_range is None:
        input_range = (float(np.floor(X.min())), float(np.ceil(X.max())))

    onehot = np.eye(n_classes)[y]
    for _ in range(epochs):
        order = rng.permutation(n_samples)
        for start in range(0, n_samples, batch_size):
            idx = order[start:start + batch_size]
            xb, tb = X[idx], onehot[idx]
            z1 = xb @ w1 + b1
            a1 = np.maximum(z1, 0.0)
            p = softmax(a1 @ w2 + b2)
            m = len(idx)
            dz2 = (p - tb) / m
            dw2 = a1.T @ dz2
            db2 = dz2.sum(axis=0)
            dz1 = (dz2 @ w2.T) * (z1 > 0)
            dw1 = xb.T @ dz1
            db1 = dz1.sum(axis=0)
            w1 -= learning_rate * dw1
            b1 -= learning_rate * db1
            w2 -= learning_rate * dw2
            b2 -= learning_rate * db2

    model = MlpClassifier(w1, b1, w2, b2, input_range=input_range)
    model.train_accuracy = model.accuracy(X, y)
    return model


def gradient_relative_error(model: ToyModel, x: np.ndarray, y: int,
                            step: float = 1e-6) -> float:
    """Relative gap between the analytic gradient and central differences."""
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(model.gradient(x, y), dtype=np.float64)
    fd = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        fd[i] = (model.loss(x + e, y) - model.loss(x - e, y)) / (2.0 * step)
    scale = np.linalg.norm(analytic) + np.linalg.norm(fd)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(analytic - fd) / scale)


def gradient_check(model: ToyModel, x: np.ndarray, y: int,
                   tolerance: float = 1e-4, step: float = 1e-6) -> bool:
    """True when central differences reproduce the analytic gradient."""
    return gradient_relative_error(model, x, y, step=step) <= tolerance


@dataclass
class MagnitudeHistogram:
    image_id: int
    counts: np.ndarray
    bin_edges: np.ndarray
    concentration: float


def magnitude_histogram(model: ToyModel, X: np.ndarray, labels,
                        num_images: int | None = None, bins: int = 20,
                        epsilon: float = 0.0,
                        rng: np.random.Generator | int | None = None
                        ) -> list[MagnitudeHistogram]:
    """Histogram the absolute gradient coordinates per image.

    concentration is the interquartile range divided by the median of the
    magnitudes; small values mean the mass sits in a narrow band, which
    is the regime where a sign-only description of the gradient loses
    little information. With epsilon > 0 each input is displaced by a
    uniform box perturbation (clipped to the model range) first.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels))
    if num_images is None:
        num_images = X.shape[0]
    lo, hi = model.input_range
    out = []
    for i in range(min(num_images, X.shape[0])):
        x = X[i]
        if epsilon > 0:
            x = np.clip(x + rng.uniform(-epsilon, epsilon, size=x.shape), lo, hi)
        mags = np.abs(np.asarray(model.gradient(x, int(labels[i])), dtype=np.float64))
        counts, edges = np.histogram(mags, bins=bins)
        q1, med, q3 = np.percentile(mags, [25, 50, 75])
        conc = float((q3 - q1) / med) if med > 0 else float("inf")
        out.append(MagnitudeHistogram(i, counts, edges, conc))
    return out
