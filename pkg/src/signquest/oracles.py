"""Query-counted loss oracles, finite-difference directional derivatives,
and the Hamming-distance oracles (exact and derivative-backed noisy)."""

from __future__ import annotations

import abc

import numpy as np

from .core import SignVector, as_sign_array, hamming_from_dot


class LossOracle(abc.ABC):
    """Black-box loss with a monotone query counter.

    Every evaluate() call increments query_count by exactly one; there is
    no other way to observe the loss through this interface.
    """

    def __init__(self):
        self.query_count = 0

    def evaluate(self, x: np.ndarray, y: int) -> float:
        self.query_count += 1
        return float(self._evaluate(x, y))

    @abc.abstractmethod
    def _evaluate(self, x: np.ndarray, y: int) -> float:
        ...


class ModelOracle(LossOracle):
    """Wraps a toy model's loss as a counted black box."""

    def __init__(self, model):
        super().__init__()
        self.model = model

    def _evaluate(self, x, y):
        return self.model.loss(x, y)


class FunctionOracle(LossOracle):
    """Wraps a plain callable f(x, y) as a counted black box."""

    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def _evaluate(self, x, y):
        return self.fn(x, y)


class DirectionalDerivativeOracle:
    """Finite-difference directional derivative along sign vectors.

    Caches the base loss at (x, y) on construction, which costs one query
    on the wrapped oracle. Each call then costs exactly one more query:

        g(q) = (loss(project(x + delta * q), y) - loss(x, y)) / delta

    The optional projector maps the probe point back into a feasible set
    before evaluation; the base point is used as-is.
    """

    def __init__(self, oracle: LossOracle, x: np.ndarray, y: int,
                 delta: float, projector=None):
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.oracle = oracle
        self.x = np.asarray(x, dtype=np.float64)
        self.y = y
        self.delta = float(delta)
        self.projector = projector
        self.base = oracle.evaluate(self.x, y)

    def evaluate(self, q) -> float:
        bits = as_sign_array(q)
        point = self.x + self.delta * bits
        if self.projector is not None:
            point = self.projector(point)
        return (self.oracle.evaluate(point, self.y) - self.base) / self.delta

    def recenter(self, x: np.ndarray) -> None:
        """Move the base point and refresh the cached loss (one query)."""
        self.x = np.asarray(x, dtype=np.float64)
        self.base = self.oracle.evaluate(self.x, self.y)


class NoiselessHammingOracle:
    """Answers with the exact Hamming distance to a hidden sign vector."""

    def __init__(self, hidden):
        self.hidden = SignVector(hidden)
        self.query_count = 0

    @property
    def n(self) -> int:
        return self.hidden.n

    def respond(self, q) -> int:
        self.query_count += 1
        return hamming_from_dot(q, self.hidden)


class NoisyHammingOracle:
    """Hamming-distance estimator driven by directional-derivative queries.

    Works against an unknown linear-ish objective whose directional
    derivative along q is approximately sum_i c_i q_i. A dictionary D of
    recovered coordinates (index, magnitude, sign) calibrates the estimate

        ham(q) ~= (n * mean_plus - g(q)) / (mean_plus + mean_minus)

    where mean_plus averages dictionary magnitudes whose recovered sign
    agrees with q and mean_minus those that disagree. If either side of
    the split is empty, both means fall back to the mean over the whole
    dictionary. With a single magnitude level the estimate is exact.
    """

    def __init__(self, dd_oracle: DirectionalDerivativeOracle, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.dd = dd_oracle
        self.n = n
        self.entries: list[tuple[int, float, int]] = []

    def recover_coordinate(self, i: int) -> tuple[float, int]:
        """Probe coordinate i with two queries that differ only there.

        Both probes are all +1 except that the second sets bit i to -1.
        The magnitude is half the response gap and the recovered sign is
        the bit value of whichever probe scored higher (ties go to -1).
        Appends (i, magnitude, sign) to the dictionary.
        """
        if not 0 <= i < self.n:
            raise ValueError(f"coordinate {i} out of range")
        u = np.ones(self.n, dtype=np.int8)
        v = u.copy()
        v[i] = -1
        du = self.dd.evaluate(u)
        dv = self.dd.evaluate(v)
        magnitude = abs(du - dv) / 2.0
        recovered = 1 if du > dv else -1
        self.entries.append((i, magnitude, recovered))
        return magnitude, recovered

    def sample_coordinates(self, rng: np.random.Generator,
                           count: int | None = None) -> list[int]:
        """Recover a random subset of coordinates (default floor(n/4),
        at least one) and return their indices."""
        if count is None:
            count = max(1, self.n // 4)
        if not 1 <= count <= self.n:
            raise ValueError("count must be in [1, n]")
        idx = rng.choice(self.n, size=count, replace=False)
        for i in idx:
            self.recover_coordinate(int(i))
        return [int(i) for i in idx]

    def estimate(self, q) -> float:
        """Estimated Hamming distance from q to the hidden sign vector.

        Costs one derivative query. Raises RuntimeError if no coordinate
        has been recovered yet.
        """
        if not self.entries:
            raise RuntimeError("recover at least one coordinate first")
        bits = as_sign_array(q)
        if bits.size != self.n:
            raise ValueError("length mismatch")
        response = self.dd.evaluate(bits)
        mags = np.array([m for _, m, _ in self.entries])
        agree = np.array([s == bits[i] for i, _, s in self.entries])
        if agree.all() or not agree.any():
            mean_plus = mean_minus = float(mags.mean())
        else:
            mean_plus = float(mags[agree].mean())
            mean_minus = float(mags[~agree].mean())
        denom = mean_plus + mean_minus
        if denom == 0:
            return float("nan")
        return (self.n * mean_plus - response) / denom
