"""Black-box and white-box adversarial attacks on the toy models, built
around counted loss oracles and norm-ball projections."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import sign
from .oracles import DirectionalDerivativeOracle, LossOracle, ModelOracle
from .signsearch import SignHunter


class PerturbationBall:
    """Feasible set for perturbations: a p-norm ball intersected with the
    data range box. p is 2 or infinity."""

    def __init__(self, center: np.ndarray, epsilon: float, p: float,
                 lo: float = -np.inf, hi: float = np.inf):
        if p not in (2, 2.0, np.inf):
            raise ValueError("p must be 2 or inf")
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        self.center = np.asarray(center, dtype=np.float64).copy()
        self.epsilon = float(epsilon)
        self.p = float(p)
        self.lo = float(lo)
        self.hi = float(hi)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Nearest point of the ball, then clipped into the data range.

        The range clip never re-inflates the p-distance because the
        center itself is a valid data point.
        """
        x = np.asarray(x, dtype=np.float64)
        d = x - self.center
        if self.p == np.inf:
            d = np.clip(d, -self.epsilon, self.epsilon)
        else:
            norm = float(np.linalg.norm(d))
            if norm > self.epsilon:
                d = d * (self.epsilon / norm)
        return np.clip(self.center + d, self.lo, self.hi)

    def contains(self, x: np.ndarray, rtol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=np.float64)
        slack = self.epsilon * rtol + 1e-12
        if np.any(x < self.lo - slack) or np.any(x > self.hi + slack):
            return False
        d = x - self.center
        if self.p == np.inf:
            return bool(np.all(np.abs(d) <= self.epsilon + slack))
        return bool(np.linalg.norm(d) <= self.epsilon + slack)


@dataclass
class AttackConfig:
    """Shared attack hyperparameters.

    delta is the finite-difference probe, eta the step size, num_samples
    the estimator draw count per iteration (where applicable). The
    chunk-flip attack always probes at the perturbation bound, so its
    delta is pinned to epsilon.
    """

    epsilon: float
    p: float = np.inf
    budget: int = 10000
    delta: float | None = None
    eta: float | None = None
    num_samples: int = 10
    seed: int | None = None

    def __post_init__(self):
        if isinstance(self.p, str):
            self.p = np.inf if self.p.lower() in ("inf", "linf") else float(self.p)
        self.p = float(self.p)
        if self.p not in (2.0, np.inf):
            raise ValueError("p must be 2 or inf")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")


@dataclass
class AttackRecord:
    """Outcome of one attacked input.

    queries counts every loss-oracle evaluation, base_queries the subset
    spent refreshing finite-difference base points (report either total
    or total minus base, depending on the accounting you want). The
    similarity traces are filled only when the caller supplies the true
    gradient, and have exactly one entry per query.
    """

    success: bool
    status: str
    queries: int
    final_x: np.ndarray
    final_loss: float
    loss_trace: list[float] = field(default_factory=list)
    hamming_trace: list[float] | None = None
    cosine_trace: list[float] | None = None
    base_queries: int = 0


def hamming_similarity(estimate, reference) -> float:
    """1 - normalized Hamming distance between the sign patterns."""
    est = sign(estimate)
    ref = sign(reference)
    return 1.0 - float(np.count_nonzero(est != ref)) / est.size


def cosine_similarity(estimate, reference) -> float:
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    ne = float(np.linalg.norm(est))
    nr = float(np.linalg.norm(ref))
    if ne == 0.0 or nr == 0.0:
        return 0.0
    return float(est @ ref) / (ne * nr)


class _Recorder:
    """Per-query bookkeeping shared by the attack drivers."""

    def __init__(self, budget: int, true_gradient=None):
        self.budget = budget
        self.count = 0
        self.base_queries = 0
        self.loss_trace: list[float] = []
        self.true_gradient = None
        self.hamming_trace: list[float] | None = None
        self.cosine_trace: list[float] | None = None
        if true_gradient is not None:
            self.true_gradient = np.asarray(true_gradient, dtype=np.float64)
            self.hamming_trace = []
            self.cosine_trace = []

    @property
    def exhausted(self) -> bool:
        return self.count >= self.budget

    def observe(self, loss_value: float, estimate) -> None:
        """Record one oracle query and the estimator state at that time."""
        self.count += 1
        self.loss_trace.append(float(loss_value))
        if self.true_gradient is not None:
            self.hamming_trace.append(
                hamming_similarity(estimate, self.true_gradient))
            self.cosine_trace.append(
                cosine_similarity(estimate, self.true_gradient))


def _finish(model, y, rec: _Recorder, success: bool, status: str,
            final_x: np.ndarray) -> AttackRecord:
    # final_loss is reporting only, computed white-box outside the budget
    return AttackRecord(
        success=success,
        status=status,
        queries=rec.count,
        final_x=np.asarray(final_x, dtype=np.float64),
        final_loss=float(model.loss(final_x, y)),
        loss_trace=rec.loss_trace,
        hamming_trace=rec.hamming_trace,
        cosine_trace=rec.cosine_trace,
        base_queries=rec.base_queries,
    )


def _rejected(model, x_init, y) -> AttackRecord:
    return AttackRecord(
        success=False, status="rejected_misclassified", queries=0,
        final_x=np.asarray(x_init, dtype=np.float64),
        final_loss=float(model.loss(x_init, y)))


def _probe_scale(epsilon: float, p: float, n: int) -> float:
    """Per-coordinate magnitude that exhausts the perturbation bound."""
    if p == np.inf:
        return epsilon
    return epsilon / math.sqrt(n)


def signhunter_attack(model, x_init, y: int, config: AttackConfig,
                      oracle: LossOracle | None = None,
                      true_gradient=None) -> AttackRecord:
    """Black-box attack that estimates the gradient sign by chunk flipping
    and always probes vertices of the perturbation ball.

    Every sign-search step costs one query. When a pass finishes, the
    driver adopts the current candidate as the new center, refreshes the
    finite-difference base there (one query), and restarts the search
    with a fresh random sign vector so progress accumulates. Exits as
    soon as any probed candidate is misclassified.
    """
    x_init = np.asarray(x_init, dtype=np.float64)
    if model.predict(x_init) != y:
        return _rejected(model, x_init, y)
    if oracle is None:
        oracle = ModelOracle(model)
    rng = np.random.default_rng(config.seed)
    n = x_init.size
    lo, hi = model.input_range
    ball = PerturbationBall(x_init, config.epsilon, config.p, lo, hi)
    coef = _probe_scale(config.epsilon, config.p, n)
    rec = _Recorder(config.budget, true_gradient)
    if coef <= 0:
        # a zero-radius ball cannot move the input at all
        return _finish(model, y, rec, False, "budget_exhausted", x_init)

    hunter = SignHunter(n, rng=rng)
    center = x_init
    dd = DirectionalDerivativeOracle(oracle, center, y, coef,
                                     projector=ball.project)
    rec.base_queries += 1
    rec.observe(dd.base, hunter.s.bits)
    candidate = center

    while not rec.exhausted:
        if hunter.done:
            center = candidate
            dd.recenter(center)
            rec.base_queries += 1
            rec.observe(dd.base, hunter.s.bits)
            hunter = SignHunter(n, rng=rng)
            continue
        value = hunter.step(dd.evaluate)
        rec.observe(value * dd.delta + dd.base, hunter.s.bits)
        candidate = ball.project(center + coef * hunter.s.bits)
        if model.predict(candidate) != y:
            return _finish(model, y, rec, True, "success", candidate)

    return _finish(model, y, rec, False, "budget_exhausted", candidate)


def _gaussian_estimate_attack(model, x_init, y, config, oracle,
                              true_gradient, step_fn) -> AttackRecord:
    """Shared driver for the Gaussian finite-difference attacks.

    Each iteration draws num_samples directions, probes the loss at the
    projected antithetic pair of each, and averages the symmetric
    difference quotients into a gradient estimate. Iterations cut short
    by the budget are discarded (their queries still count). step_fn maps
    (x, estimate) to the next iterate; the caller projects inside it.
    """
    x_init = np.asarray(x_init, dtype=np.float64)
    if model.predict(x_init) != y:
        return _rejected(model, x_init, y)
    if oracle is None:
        oracle = ModelOracle(model)
    if config.delta is None or config.eta is None:
        raise ValueError("delta and eta must be set for this attack")
    rng = np.random.default_rng(config.seed)
    n = x_init.size
    lo, hi = model.input_range
    ball = PerturbationBall(x_init, config.epsilon, config.p, lo, hi)
    rec = _Recorder(config.budget, true_gradient)
    delta = config.delta
    x = x_init.copy()
    estimate = np.zeros(n)

    while not rec.exhausted:
        contribs = np.zeros(n)
        complete = True
        for _ in range(config.num_samples):
            u = rng.standard_normal(n)
            if rec.exhausted:
                complete = False
                break
            plus = oracle.evaluate(ball.project(x + delta * u), y)
            rec.observe(plus, estimate)
            if rec.exhausted:
                complete = False
                break
            minus = oracle.evaluate(ball.project(x - delta * u), y)
            rec.observe(minus, estimate)
            contribs += (plus - minus) / (2.0 * delta) * u
        if not complete:
            break
        estimate = contribs / config.num_samples
        x = step_fn(x, estimate)
        if model.predict(x) != y:
            return _finish(model, y, rec, True, "success", x)

    return _finish(model, y, rec, False, "budget_exhausted", x)


def nes_attack(model, x_init, y: int, config: AttackConfig,
               oracle: LossOracle | None = None,
               true_gradient=None) -> AttackRecord:
    """Gaussian search-gradient attack with antithetic sampling.

    Steps by the sign of the estimate under the infinity norm and by the
    normalized estimate under the 2-norm.
    """
    x_init_arr = np.asarray(x_init, dtype=np.float64)
    lo, hi = model.input_range
    ball = PerturbationBall(x_init_arr, config.epsilon, config.p, lo, hi)
    eta = config.eta

    def step(x, estimate):
        if config.p == np.inf:
            return ball.project(x + eta * sign(estimate))
        norm = float(np.linalg.norm(estimate))
        if norm == 0.0:
            return x
        return ball.project(x + eta * estimate / norm)

    return _gaussian_estimate_attack(model, x_init, y, config, oracle,
                                     true_gradient, step)


def zosignsgd_attack(model, x_init, y: int, config: AttackConfig,
                     oracle: LossOracle | None = None,
                     true_gradient=None) -> AttackRecord:
    """Sign-of-estimate variant of the Gaussian attack: steps opposite the
    sign of the negated estimate, under either norm."""
    x_init_arr = np.asarray(x_init, dtype=np.float64)
    lo, hi = model.input_range
    ball = PerturbationBall(x_init_arr, config.epsilon, config.p, lo, hi)
    eta = config.eta

    def step(x, estimate):
        return ball.project(x - eta * sign(-estimate))

    return _gaussian_estimate_attack(model, x_init, y, config, oracle,
                                     true_gradient, step)


def fgsm(model, x_init, y: int, epsilon: float, p: float = np.inf) -> np.ndarray:
    """White-box single-step perturbation along the gradient sign."""
    x_init = np.asarray(x_init, dtype=np.float64)
    g = np.asarray(model.gradient(x_init, y), dtype=np.float64)
    coef = _probe_scale(epsilon, p, x_init.size)
    lo, hi = model.input_range
    return np.clip(x_init + coef * sign(g), lo, hi)


def noisy_fgsm(model, x_init, y: int, epsilon: float, k: float,
               mode: str = "top", p: float = np.inf,
               rng: np.random.Generator | int | None = None,
               noise=None) -> np.ndarray:
    """Single-step perturbation with only k percent of sign bits correct.

    mode "top" keeps the coordinates with the largest gradient magnitude,
    mode "random" keeps a random subset. The rest take uniform random
    signs; pass noise (a +1/-1 vector) to pin them, which makes curves
    over k paired samples of the same randomness.
    """
    if mode not in ("top", "random"):
        raise ValueError("mode must be 'top' or 'random'")
    if not 0 <= k <= 100:
        raise ValueError("k must be in [0, 100]")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    x_init = np.asarray(x_init, dtype=np.float64)
    n = x_init.size
    g = np.asarray(model.gradient(x_init, y), dtype=np.float64)
    keep = int(round(k / 100.0 * n))
    if noise is None:
        noise = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    s = np.asarray(noise, dtype=np.int8).copy()
    if keep > 0:
        if mode == "top":
            chosen = np.argsort(-np.abs(g), kind="stable")[:keep]
        else:
            chosen = rng.choice(n, size=keep, replace=False)
        s[chosen] = sign(g[chosen])
    coef = _probe_scale(epsilon, p, n)
    lo, hi = model.input_range
    return np.clip(x_init + coef * s, lo, hi)


def pgd_whitebox(model, x_init, y: int, epsilon: float, steps: int,
                 step_size: float, restarts: int = 1, p: float = np.inf,
                 seed: int | None = None) -> np.ndarray:
    """Projected sign-gradient ascent on the loss, with random restarts.

    The first restart starts at the unperturbed input (one step of size
    epsilon from there is exactly the single-step white-box attack);
    later restarts start at a random point of the ball. Returns the
    first misclassified iterate, or the candidate with the highest loss.
    """
    if steps < 1 or restarts < 1:
        raise ValueError("steps and restarts must be >= 1")
    x_init = np.asarray(x_init, dtype=np.float64)
    n = x_init.size
    rng = np.random.default_rng(seed)
    lo, hi = model.input_range
    ball = PerturbationBall(x_init, epsilon, p, lo, hi)
    coef = _probe_scale(step_size, p, n)
    best_x = x_init
    best_loss = -math.inf
    for restart in range(restarts):
        if restart == 0:
            x = x_init.copy()
        elif p == np.inf:
            x = ball.project(x_init + rng.uniform(-epsilon, epsilon, size=n))
        else:
            direction = rng.standard_normal(n)
            direction /= max(np.linalg.norm(direction), 1e-12)
            radius = epsilon * rng.uniform() ** (1.0 / n)
            x = ball.project(x_init + radius * direction)
        for _ in range(steps):
            g = np.asarray(model.gradient(x, y), dtype=np.float64)
            x = ball.project(x + coef * sign(g))
            if model.predict(x) != y:
                return x
        loss = model.loss(x, y)
        if loss > best_loss:
            best_loss = loss
            best_x = x
    return best_x


BLACK_BOX_ATTACKS = {
    "signhunter": signhunter_attack,
    "nes": nes_attack,
    "zosignsgd": zosignsgd_attack,
}
