"""Derivative-free minimization on continuous test functions, comparing
the chunk-flip sign search against Gaussian finite-difference baselines
under a shared evaluation budget."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import sign
from .signsearch import SignHunter


@dataclass
class ContOptProblem:
    """Minimization target. f accepts a single point or a batch whose
    last axis is the coordinate axis and reduces over that axis."""

    f: Callable[[np.ndarray], np.ndarray]
    n: int
    x0: np.ndarray
    x_star: np.ndarray | None = None


def quadratic_problem(n: int, rng: np.random.Generator | int | None = None
                      ) -> ContOptProblem:
    """Squared distance to a uniform random target in [0, 1]^n, started
    from the all-ones point."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    x_star = rng.uniform(0.0, 1.0, size=n)

    def f(x):
        d = np.asarray(x, dtype=np.float64) - x_star
        return np.einsum("...i,...i->...", d, d)

    return ContOptProblem(f=f, n=n, x0=np.ones(n), x_star=x_star)


class _TraceRecorder:
    """Best-so-far trace with one entry per function evaluation."""

    def __init__(self, budget: int):
        self.budget = budget
        self.best = math.inf
        self.values: list[float] = []

    @property
    def spent(self) -> int:
        return len(self.values)

    @property
    def exhausted(self) -> bool:
        return self.spent >= self.budget

    def record(self, value: float) -> float:
        if value < self.best:
            self.best = float(value)
        self.values.append(self.best)
        return float(value)

    def trace(self) -> np.ndarray:
        return np.array(self.values)


def signhunter_minimize(problem: ContOptProblem, step_size: float = 0.01,
                        fd_probe: float = 0.001, eval_budget: int = 3000,
                        seed: int | np.random.Generator | None = None
                        ) -> np.ndarray:
    """Minimize by repeated sign-search passes on the descent objective.

    Each pass evaluates the base point once, then runs the chunk-flip
    search on the negated forward-difference quotient, so the retained
    sign vector points down the steepest finite-difference slope. A
    finished pass moves the iterate by step_size along that vector and
    the next pass starts fresh. Returns the best-value trace, one entry
    per evaluation, exactly eval_budget long.
    """
    if eval_budget < 1:
        raise ValueError("eval_budget must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rec = _TraceRecorder(eval_budget)
    x = problem.x0.astype(np.float64).copy()
    n = problem.n

    while not rec.exhausted:
        base = rec.record(float(problem.f(x)))
        if rec.exhausted:
            break
        hunter = SignHunter(n, rng=rng)

        def descent_gain(bits):
            value = rec.record(float(problem.f(x + fd_probe * bits)))
            return -(value - base) / fd_probe

        while not hunter.done and not rec.exhausted:
            hunter.step(descent_gain)
        if hunter.done:
            # s maximizes the decrease rate, so move along it
            x = x + step_size * hunter.s.bits

    return rec.trace()


def baseline_minimize(problem: ContOptProblem, algorithm: str,
                      step_size: float = 0.01, fd_probe: float = 0.001,
                      eval_budget: int = 3000,
                      seed: int | np.random.Generator | None = None,
                      num_samples: int = 10) -> np.ndarray:
    """Gaussian finite-difference baselines under the same budget.

    algorithm "nes" steps along the normalized estimate, "zosignsgd"
    along its sign. Each iteration draws num_samples directions and
    probes both antithetic points of each; an iteration cut short by the
    budget is discarded but its evaluations still count, so the returned
    trace is always exactly eval_budget long.
    """
    if algorithm not in ("nes", "zosignsgd"):
        raise ValueError("algorithm must be 'nes' or 'zosignsgd'")
    if eval_budget < 1:
        raise ValueError("eval_budget must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rec = _TraceRecorder(eval_budget)
    x = problem.x0.astype(np.float64).copy()
    n = problem.n

    while not rec.exhausted:
        U = rng.standard_normal((num_samples, n))
        plus_vals = problem.f(x + fd_probe * U)
        minus_vals = problem.f(x - fd_probe * U)
        # consume the batch pair by pair against the budget
        complete = True
        quotients = np.zeros(num_samples)
        for k in range(num_samples):
            if rec.exhausted:
                complete = False
                break
            rec.record(float(plus_vals[k]))
            if rec.exhausted:
                complete = False
                break
            rec.record(float(minus_vals[k]))
            quotients[k] = (plus_vals[k] - minus_vals[k]) / (2.0 * fd_probe)
        if not complete:
            break
        estimate = quotients @ U / num_samples
        if algorithm == "nes":
            norm = float(np.linalg.norm(estimate))
            if norm > 0:
                x = x - step_size * estimate / norm
        else:
            x = x - step_size * sign(estimate)

    return rec.trace()


@dataclass
class ContOptResult:
    """Full trial-level traces plus per-method mean summaries."""

    ns: tuple[int, ...]
    trials: int
    eval_budget: int
    traces: dict = field(default_factory=dict)

    def mean_trace(self, method: str, n: int) -> np.ndarray:
        return np.mean(self.traces[(method, n)], axis=0)

    def mean_final(self, method: str, n: int) -> float:
        return float(np.mean([t[-1] for t in self.traces[(method, n)]]))

    def rows(self, stride: int = 1):
        """Yield (method, n, trial, eval_index, best_loss) tuples.

        The final evaluation is always included so the last row of every
        trial carries its final loss whatever the stride.
        """
        for (method, n), trial_traces in self.traces.items():
            for trial, trace in enumerate(trial_traces):
                indices = list(range(0, len(trace), stride))
                if indices[-1] != len(trace) - 1:
                    indices.append(len(trace) - 1)
                for idx in indices:
                    yield method, n, trial, idx, float(trace[idx])


CONTOPT_METHODS = ("signhunter", "nes", "zosignsgd")


def run_contopt_experiment(ns=(1000, 100000), trials: int = 30,
                           eval_budget: int = 3000, step_size: float = 0.01,
                           fd_probe: float = 0.001, num_samples: int = 10,
                           seed: int = 0) -> ContOptResult:
    """Paired comparison of the three methods on random quadratics.

    Every (n, trial) pair shares one problem instance across methods;
    method randomness is seeded independently so traces are reproducible
    regardless of execution order.
    """
    result = ContOptResult(ns=tuple(ns), trials=trials, eval_budget=eval_budget)
    for n in ns:
        per_method = {m: [] for m in CONTOPT_METHODS}
        for trial in range(trials):
            ss = np.random.SeedSequence([seed, n, trial])
            prob_rng, sh_rng, nes_rng, zo_rng = [
                np.random.default_rng(c) for c in ss.spawn(4)]
            problem = quadratic_problem(n, prob_rng)
            per_method["signhunter"].append(signhunter_minimize(
                problem, step_size, fd_probe, eval_budget, sh_rng))
            per_method["nes"].append(baseline_minimize(
                problem, "nes", step_size, fd_probe, eval_budget, nes_rng,
                num_samples))
            per_method["zosignsgd"].append(baseline_minimize(
                problem, "zosignsgd", step_size, fd_probe, eval_budget,
                zo_rng, num_samples))
        for m in CONTOPT_METHODS:
            result.traces[(m, n)] = per_method[m]
    return result
