"""Sign-recovery search strategies: divide-and-conquer flipping, optimistic
tree search over Gray-ordered cells, elimination against Hamming oracles,
exact linear-system retrieval, and a query-ratio benchmark."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .core import (PartitionNode, SignVector, as_sign_array, expand_node,
                   gray_code_at, gray_code_table, hamming_distance, sign)
from .oracles import NoiselessHammingOracle


class TraceEntry(NamedTuple):
    query_index: int
    hamming_to_truth: int | None
    value: float


@dataclass
class SearchResult:
    estimate: SignVector
    queries_spent: int
    trace: list[TraceEntry] = field(default_factory=list)
    flagged: bool = False


def _trace_row(trace, idx, bits, truth, value):
    ham = hamming_distance(bits, truth) if truth is not None else None
    trace.append(TraceEntry(idx, ham, float(value)))


class SignHunter:
    """Chunk-flipping sign search.

    Maintains a sign vector s and walks a halving schedule: level h splits
    the coordinates into 2^h contiguous chunks of ceil(n / 2^h) each. One
    step flips the current chunk, evaluates the objective at the flipped
    vector, and keeps the flip unless the value dropped below the best
    seen. The search is done after the level of single-coordinate chunks,
    which takes 2^(ceil(log2 n) + 1) - 1 steps in total.
    """

    def __init__(self, n: int, rng: np.random.Generator | None = None,
                 init=None):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        if init is not None:
            self.s = SignVector(init)
            if self.s.n != n:
                raise ValueError("init length mismatch")
        else:
            if rng is None:
                rng = np.random.default_rng()
            self.s = SignVector.random(n, rng)
        self.levels = (n - 1).bit_length() + 1
        self.node_index = 0
        self.level = 0
        self.best_value = -math.inf
        self.done = False
        self.steps_taken = 0
        self.last_query: np.ndarray | None = None
        self.last_value: float | None = None

    @property
    def total_steps(self) -> int:
        """Steps needed to finish every level: 2^levels - 1."""
        return (1 << self.levels) - 1

    @property
    def estimate(self) -> SignVector:
        return self.s.copy()

    def step(self, objective: Callable[[np.ndarray], float]) -> float:
        """Flip the next chunk, evaluate, and keep or revert the flip.

        The objective sees the flipped candidate (an int8 +1/-1 array) and
        its value is returned. Chunks past the end of the vector flip
        nothing but are still evaluated, keeping the step count schedule
        uniform across levels.
        """
        if self.done:
            raise RuntimeError("search already finished")
        chunk = -(-self.n // (1 << self.level))
        lo = self.node_index * chunk
        hi = min(lo + chunk, self.n)
        self.s.flip_range(lo, hi)
        value = float(objective(self.s.bits))
        self.last_query = self.s.bits.copy()
        self.last_value = value
        if value >= self.best_value:
            self.best_value = value
        else:
            self.s.flip_range(lo, hi)
        self.steps_taken += 1
        self.node_index += 1
        if self.node_index == (1 << self.level):
            self.node_index = 0
            self.level += 1
            if self.level == self.levels:
                self.done = True
        return value


def signhunter_run(objective, n: int, budget: int,
                   seed: int | np.random.Generator | None = None,
                   init=None, truth=None) -> SearchResult:
    """Run SignHunter until done or the evaluation budget is spent."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    hunter = SignHunter(n, rng=rng, init=init)
    trace: list[TraceEntry] = []
    while not hunter.done and hunter.steps_taken < budget:
        value = hunter.step(objective)
        _trace_row(trace, hunter.steps_taken - 1, hunter.last_query, truth, value)
    return SearchResult(hunter.estimate, hunter.steps_taken, trace)


def sequential_flip(objective, n: int,
                    seed: int | np.random.Generator | None = None,
                    init=None, truth=None) -> SearchResult:
    """Coordinate-at-a-time greedy baseline: n + 1 evaluations.

    Evaluates the starting vector once, then tries each single-coordinate
    flip in order, keeping any flip that does not decrease the value.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s = SignVector(init) if init is not None else SignVector.random(n, rng)
    trace: list[TraceEntry] = []
    best = float(objective(s.bits))
    _trace_row(trace, 0, s.bits, truth, best)
    for j in range(n):
        s.flip_range(j, j + 1)
        value = float(objective(s.bits))
        _trace_row(trace, j + 1, s.bits, truth, value)
        if value >= best:
            best = value
        else:
            s.flip_range(j, j + 1)
    return SearchResult(s, n + 1, trace)


class _BudgetExhausted(Exception):
    pass


def default_depth_cap(t: int, n: int) -> int:
    """Expansion-depth cap ceil(sqrt(t)), never beyond the singleton depth."""
    return min(math.isqrt(max(t, 1) - 1) + 1, n)


def goo_run(objective, n: int, budget: int,
            depth_cap: Callable[[int], int] | None = None,
            truth=None) -> SearchResult:
    """Optimistic tree search over the Gray-ordered hypercube.

    Cells are contiguous Gray-rank intervals; each cell is scored by its
    lower-median representative. Every sweep walks depths 0..cap and
    expands the best cell per depth whenever its score is at least the
    best score expanded earlier in the sweep. Values are memoized by
    rank, and only first-time evaluations draw from the budget. The
    all-minus code (rank 0) is scored before the tree as an anomaly
    guard. Deterministic: there is no randomness anywhere.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if depth_cap is None:
        cap = lambda t: default_depth_cap(t, n)
    else:
        cap = depth_cap

    memo: dict[int, float] = {}
    trace: list[TraceEntry] = []
    state = {"spent": 0, "best_rank": 0, "best_value": -math.inf}

    def eval_rank(rank: int) -> float:
        if rank in memo:
            return memo[rank]
        if state["spent"] >= budget:
            raise _BudgetExhausted
        bits = gray_code_at(n, rank).bits
        value = float(objective(bits))
        memo[rank] = value
        _trace_row(trace, state["spent"], bits, truth, value)
        state["spent"] += 1
        if value > state["best_value"]:
            state["best_value"] = value
            state["best_rank"] = rank
        return value

    leaves: list[PartitionNode] = []
    values: dict[tuple[int, int], float] = {}
    t = 1
    try:
        eval_rank(0)
        root = PartitionNode.root(n)
        values[(root.depth, root.index)] = eval_rank(root.representative_rank)
        leaves.append(root)
        while any(leaf.expandable for leaf in leaves):
            v_max = -math.inf
            expanded_any = False
            max_depth = max(leaf.depth for leaf in leaves)
            for h in range(0, min(max_depth, cap(t)) + 1):
                pool = [lf for lf in leaves if lf.depth == h and lf.expandable]
                if not pool:
                    continue
                best = max(pool, key=lambda lf: values[(lf.depth, lf.index)])
                best_value = values[(best.depth, best.index)]
                if best_value >= v_max:
                    left, right = expand_node(best)
                    values[(left.depth, left.index)] = eval_rank(left.representative_rank)
                    values[(right.depth, right.index)] = eval_rank(right.representative_rank)
                    pos = leaves.index(best)
                    leaves[pos:pos + 1] = [left, right]
                    v_max = best_value
                    t += 1
                    expanded_any = True
            if not expanded_any:
                break
    except _BudgetExhausted:
        pass

    estimate = gray_code_at(n, state["best_rank"])
    return SearchResult(estimate, state["spent"], trace)


def elim_run(oracle, n: int,
             rng: np.random.Generator | int | None = None,
             budget: int | None = None, truth=None) -> SearchResult:
    """Elimination search against a Hamming oracle.

    Keeps the set of codes consistent with every response so far; each
    round queries a uniformly random member of the surviving set. A noisy
    oracle (one with an estimate() method) has its responses rounded to
    the nearest integer, which can empty the surviving set; in that case
    the best-scoring code from the last non-empty set is returned with
    the flagged bit on. n is capped at 20 by the exhaustive code table.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if hasattr(oracle, "respond"):
        respond = lambda bits: float(oracle.respond(bits))
    elif hasattr(oracle, "estimate"):
        respond = lambda bits: float(oracle.estimate(bits))
    else:
        raise TypeError("oracle must expose respond() or estimate()")

    codes = gray_code_table(n)
    candidates = np.arange(codes.shape[0])
    history: list[tuple[np.ndarray, int]] = []
    trace: list[TraceEntry] = []
    queries = 0
    flagged = False
    limit = budget if budget is not None else 1 << n

    while candidates.size > 1 and queries < limit:
        q = codes[candidates[rng.integers(candidates.size)]]
        raw = respond(q)
        r = int(np.rint(raw))
        queries += 1
        _trace_row(trace, queries - 1, q, truth, raw)
        history.append((q, r))
        hams = (n - codes[candidates] @ q.astype(np.int64)) // 2
        survivors = candidates[hams == r]
        if survivors.size == 0:
            flagged = True
            break
        candidates = survivors

    if flagged:
        # score every code from the last non-empty set against the full
        # response history and keep the least inconsistent one
        pool = codes[candidates]
        score = np.zeros(candidates.size)
        for q, r in history:
            hams = (n - pool @ q.astype(np.int64)) // 2
            score += np.abs(hams - r)
        pick = pool[int(np.argmin(score))]
        return SearchResult(SignVector(pick), queries, trace, flagged=True)

    estimate = SignVector(codes[candidates[0]])
    return SearchResult(estimate, queries, trace, flagged=candidates.size > 1)


def retrieval_queries(n: int) -> np.ndarray:
    """Query matrix whose Hamming responses pin the hidden code exactly.

    Row i is +1 at coordinate i and -1 elsewhere. That matrix (2I - J)
    is singular at n=2, where two hand-picked independent rows stand in.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 2:
        return np.array([[1, -1], [1, 1]], dtype=np.int8)
    Q = -np.ones((n, n), dtype=np.int8)
    np.fill_diagonal(Q, 1)
    return Q


def linear_system_retrieve(oracle: NoiselessHammingOracle, n: int) -> SignVector:
    """Recover the hidden code exactly from n noiseless Hamming responses.

    Uses the identity q.q* = n - 2 ham(q, q*) to build a linear system
    over the fixed query matrix and solves it. Raises RuntimeError if the
    solution is not within 0.01 of +/-1 per coordinate, which would mean
    the oracle responses were inconsistent.
    """
    Q = retrieval_queries(n)
    rhs = np.empty(n)
    for i in range(n):
        rhs[i] = n - 2 * oracle.respond(Q[i])
    solution = np.linalg.solve(Q.astype(np.float64), rhs)
    if np.any(np.abs(np.abs(solution) - 1.0) > 0.01):
        raise RuntimeError("retrieval solution is not a sign vector")
    return SignVector(sign(solution))


@dataclass
class RatioRow:
    strategy: str
    n: int
    mean_ratio: float
    bound: float


def default_ratio_strategies() -> dict:
    """Strategy table for the query-ratio benchmark.

    Each entry maps an oracle and rng to (queries_spent, estimate).
    """

    def run_elim(oracle, n, rng):
        res = elim_run(oracle, n, rng=rng)
        return res.queries_spent, res.estimate

    def run_linear(oracle, n, rng):
        est = linear_system_retrieve(oracle, n)
        return n, est

    return {"elim": run_elim, "linear-system": run_linear}


def query_ratio_bench(ns, trials: int, seed: int = 0,
                      strategies: dict | None = None) -> list[RatioRow]:
    """Mean query-to-dimension ratio per strategy and n.

    Every trial hides a fresh random code, runs the strategy to exact
    recovery, and records queries / n. Strategies that fail to recover
    the hidden code raise, since the ratio is only meaningful for exact
    retrieval.
    """
    if strategies is None:
        strategies = default_ratio_strategies()
    rows = []
    for name, run in strategies.items():
        for n in ns:
            ratios = []
            for trial in range(trials):
                rng = np.random.default_rng(
                    np.random.SeedSequence([seed, n, trial]))
                hidden = SignVector.random(n, rng)
                oracle = NoiselessHammingOracle(hidden)
                queries, estimate = run(oracle, n, rng)
                if estimate != hidden:
                    raise RuntimeError(
                        f"{name} failed to recover the hidden code at n={n}")
                ratios.append(queries / n)
            bound = 1.0 / math.log2(n + 1)
            rows.append(RatioRow(name, n, float(np.mean(ratios)), bound))
    return rows
