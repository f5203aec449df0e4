"""Campaign runner and experiment benchmarks: attack sweeps over a model
and dataset with deterministic seeding, CSV/JSON reporting, similarity
traces, the keep-k curve experiment, and the noisy Hamming estimate sweep."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .attacks import BLACK_BOX_ATTACKS, AttackConfig, AttackRecord
from .core import gray_code_table, sign
from .models import LinearModel, ToyModel, load_idx, make_blobs, train_mlp
from .oracles import (DirectionalDerivativeOracle, ModelOracle,
                      NoisyHammingOracle)


class ConfigError(ValueError):
    """Campaign configuration is structurally invalid."""


def norm_label(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def parse_norm(label) -> float:
    if isinstance(label, str) and label.lower() in ("inf", "linf"):
        return np.inf
    value = float(label)
    if value not in (2.0,) and not math.isinf(value):
        raise ConfigError(f"unsupported norm {label!r}")
    return value


def pad_trace(values, length: int) -> np.ndarray:
    """Extend a per-query trace to a fixed length by repeating the final
    entry, which encodes 'the attack stopped and kept its last state'."""
    out = np.full(length, np.nan)
    if values:
        k = min(len(values), length)
        out[:k] = values[:k]
        out[k:] = values[k - 1]
    return out


def similarity_traces(record: AttackRecord, length: int | None = None):
    """Hamming and cosine similarity per query, padded to length.

    The attack must have been run with true_gradient set, otherwise the
    per-query estimates were never compared and nothing can be rebuilt.
    """
    if record.hamming_trace is None or record.cosine_trace is None:
        raise ValueError("attack was run without true_gradient; no traces")
    if length is None:
        length = len(record.hamming_trace)
    return pad_trace(record.hamming_trace, length), pad_trace(
        record.cosine_trace, length)


@dataclass
class AttackSummary:
    attack: str
    norm: str
    num_images: int
    failure_rate: float
    avg_queries: float | None
    avg_queries_excl_base: float | None
    spend: float
    success_curve: list[tuple[int, float]]
    mean_loss_trace: np.ndarray | None = None
    mean_hamming_trace: np.ndarray | None = None
    mean_cosine_trace: np.ndarray | None = None


@dataclass
class CampaignReport:
    name: str
    budget: int
    num_images: int
    scanned: int
    summaries: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "budget": self.budget,
            "num_images": self.num_images,
            "scanned_before_selection": self.scanned,
            "results": {},
        }
        for (attack, norm), s in sorted(self.summaries.items()):
            out["results"][f"{attack}_{norm}"] = {
                "failure_rate": s.failure_rate,
                "avg_queries": s.avg_queries,
                "avg_queries_excl_base": s.avg_queries_excl_base,
                "spend": s.spend,
                "num_images": s.num_images,
                "success_curve": [[int(q), float(r)] for q, r in s.success_curve],
            }
        return out

    def write_outputs(self, out_dir: str) -> str:
        """Write per-attack CSVs, optional trace CSVs, and summary.json
        under <out_dir>/<name>/. Returns the campaign directory."""
        target = os.path.join(out_dir, self.name)
        os.makedirs(target, exist_ok=True)
        by_key: dict = {}
        for row in self.rows:
            by_key.setdefault((row["attack"], row["norm"]), []).append(row)
        for (attack, norm), rows in sorted(by_key.items()):
            path = os.path.join(target, f"{attack}_{norm}.csv")
            with open(path, "w") as fh:
                fh.write("attack,image_id,success,queries,final_loss\n")
                for r in rows:
                    fh.write(f"{r['attack']},{r['image_id']},"
                             f"{int(r['success'])},{r['queries']},"
                             f"{r['final_loss']:.10g}\n")
        for (attack, norm), s in sorted(self.summaries.items()):
            if s.mean_loss_trace is None:
                continue
            path = os.path.join(target, f"trace_{attack}_{norm}.csv")
            with open(path, "w") as fh:
                fh.write("query_index,mean_loss,mean_hamming_similarity,"
                         "mean_cosine_similarity\n")
                ham = s.mean_hamming_trace
                cos = s.mean_cosine_trace
                for i in range(len(s.mean_loss_trace)):
                    h = f"{ham[i]:.10g}" if ham is not None else ""
                    c = f"{cos[i]:.10g}" if cos is not None else ""
                    fh.write(f"{i},{s.mean_loss_trace[i]:.10g},{h},{c}\n")
        with open(os.path.join(target, "summary.json"), "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return target


def _require(config: dict, key: str, kind=None):
    if key not in config:
        raise ConfigError(f"missing config key {key!r}")
    value = config[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"config key {key!r} has wrong type")
    return value


def build_model_and_data(config: dict):
    """Construct (model, X_test, y_test) from the campaign config."""
    model_cfg = _require(config, "model", dict)
    dataset_cfg = _require(config, "dataset", dict)
    seed = int(config.get("seed", 0))
    mtype = _require(model_cfg, "type", str)
    dtype = _require(dataset_cfg, "type", str)

    if mtype == "linear":
        features = int(_require(model_cfg, "features", (int,)))
        lo, hi = model_cfg.get("range", (-10.0, 10.0))
        rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
        c = rng.uniform(0.2, 1.0, size=features) * rng.choice([-1, 1], size=features)
        model = LinearModel(c, bias=0.0, input_range=(lo, hi))
        if dtype != "uniform":
            raise ConfigError("linear model expects a 'uniform' dataset")
        count = int(dataset_cfg.get("samples", 500))
        margin = float(dataset_cfg.get("margin", 1.0))
        data_rng = np.random.default_rng(np.random.SeedSequence([seed, 102]))
        X = data_rng.uniform(lo + margin, hi - margin, size=(count, features))
        y = np.array([model.predict(x) for x in X])
        return model, X, y

    if mtype != "mlp":
        raise ConfigError(f"unknown model type {mtype!r}")

    if dtype == "blobs":
        features = int(dataset_cfg.get("features", 16))
        classes = int(dataset_cfg.get("classes", 3))
        spread = float(dataset_cfg.get("spread", 3.0))
        std = float(dataset_cfg.get("cluster_std", 0.8))
        train_n = int(dataset_cfg.get("train_samples", 600))
        test_n = int(dataset_cfg.get("test_samples", 400))
        rng = np.random.default_rng(np.random.SeedSequence([seed, 103]))
        X_all, y_all = make_blobs(train_n + test_n, features, classes,
                                  spread, std, rng)
        X_train, y_train = X_all[:train_n], y_all[:train_n]
        X_test, y_test = X_all[train_n:], y_all[train_n:]
    elif dtype == "idx":
        train = load_idx(_require(dataset_cfg, "images", str),
                         _require(dataset_cfg, "labels", str))
        X_train, y_train = train.images, train.labels
        if "test_images" in dataset_cfg:
            test = load_idx(dataset_cfg["test_images"], dataset_cfg["test_labels"])
            X_test, y_test = test.images, test.labels
        else:
            X_test, y_test = X_train, y_train
    else:
        raise ConfigError(f"unknown dataset type {dtype!r}")

    model = train_mlp(
        (X_train, y_train),
        epochs=int(model_cfg.get("epochs", 100)),
        learning_rate=float(model_cfg.get("learning_rate", 0.05)),
        seed=seed,
        hidden_dim=int(model_cfg.get("hidden", 32)),
        input_range=model_cfg.get("input_range"))
    return model, X_test, y_test


def select_eval_set(model: ToyModel, X: np.ndarray, y: np.ndarray,
                    num_images: int):
    """First num_images correctly classified inputs, in dataset order.

    Returns (indices, scanned). Raises RuntimeError when the dataset does
    not contain enough correctly classified points.
    """
    chosen = []
    scanned = 0
    for i in range(X.shape[0]):
        scanned += 1
        if model.predict(X[i]) == int(y[i]):
            chosen.append(i)
            if len(chosen) == num_images:
                return np.array(chosen), scanned
    raise RuntimeError(
        f"only {len(chosen)} of the requested {num_images} inputs are "
        f"correctly classified")


def _attack_task(payload):
    (model, attack_name, x, y, cfg_kwargs, want_trace) = payload
    attack = BLACK_BOX_ATTACKS[attack_name]
    config = AttackConfig(**cfg_kwargs)
    oracle = ModelOracle(model)
    tg = model.gradient(x, y) if want_trace else None
    record = attack(model, x, y, config, oracle=oracle, true_gradient=tg)
    if record.queries != oracle.query_count:
        raise RuntimeError("query accounting mismatch")
    return record


def _summarize(attack: str, norm: str, records: list[AttackRecord],
               budget: int, want_trace: bool) -> AttackSummary:
    num = len(records)
    successes = [r for r in records if r.success]
    failure_rate = 1.0 - len(successes) / num if num else 1.0
    if successes:
        avg_q = float(np.mean([r.queries for r in successes]))
        avg_q_excl = float(np.mean(
            [r.queries - r.base_queries for r in successes]))
    else:
        avg_q = None
        avg_q_excl = None
    spend = (1.0 - failure_rate) * (avg_q or 0.0) + failure_rate * budget
    counts = sorted(r.queries for r in successes)
    curve = [(q, (i + 1) / num) for i, q in enumerate(counts)]
    mean_loss = mean_ham = mean_cos = None
    if records:
        mean_loss = np.mean(
            [pad_trace(r.loss_trace, budget) for r in records], axis=0)
        if want_trace:
            hams, coss = zip(*(similarity_traces(r, budget) for r in records))
            mean_ham = np.mean(hams, axis=0)
            mean_cos = np.mean(coss, axis=0)
    return AttackSummary(attack, norm, num, failure_rate, avg_q, avg_q_excl,
                         spend, curve, mean_loss, mean_ham, mean_cos)


def run_campaign(config: dict, jobs: int = 1) -> CampaignReport:
    """Run every configured attack under every norm over the eval set.

    Deterministic for a fixed config: per-run seeds derive from the
    campaign seed and the (attack, norm, image) position, independent of
    execution order, so jobs > 1 changes wall time and nothing else.
    """
    name = str(config.get("name", "campaign"))
    seed = int(config.get("seed", 0))
    budget = int(_require(config, "budget", int))
    num_images = int(_require(config, "num_images", int))
    attacks = _require(config, "attacks", list)
    if not attacks:
        raise ConfigError("attack list is empty")
    norms = [parse_norm(v) for v in config.get("norms", ["inf"])]
    eps_cfg = _require(config, "epsilon", (dict, int, float))
    want_trace = bool(config.get("trace", False))

    def epsilon_for(p: float) -> float:
        if isinstance(eps_cfg, dict):
            label = norm_label(p)
            if label not in eps_cfg:
                raise ConfigError(f"epsilon missing for norm {label}")
            return float(eps_cfg[label])
        return float(eps_cfg)

    model, X, y = build_model_and_data(config)
    indices, scanned = select_eval_set(model, X, y, num_images)

    payloads = []
    keys = []
    for ai, attack_cfg in enumerate(attacks):
        if not isinstance(attack_cfg, dict) or "name" not in attack_cfg:
            raise ConfigError("each attack entry needs a 'name'")
        attack_name = attack_cfg["name"]
        if attack_name not in BLACK_BOX_ATTACKS:
            raise ConfigError(f"unknown attack {attack_name!r}")
        for ni, p in enumerate(norms):
            for ii, idx in enumerate(indices):
                run_seed = int(np.random.SeedSequence(
                    [seed, ai, ni, ii]).generate_state(1)[0])
                cfg_kwargs = dict(
                    epsilon=epsilon_for(p), p=p, budget=budget,
                    delta=attack_cfg.get("delta"),
                    eta=attack_cfg.get("eta"),
                    num_samples=int(attack_cfg.get("num_samples", 10)),
                    seed=run_seed)
                payloads.append((model, attack_name, X[idx], int(y[idx]),
                                 cfg_kwargs, want_trace))
                keys.append((attack_name, norm_label(p), int(idx)))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_attack_task, payloads, chunksize=8))
    else:
        records = [_attack_task(p) for p in payloads]

    report = CampaignReport(name=name, budget=budget, num_images=num_images,
                            scanned=scanned)
    grouped: dict = {}
    for (attack_name, norm, image_id), record in zip(keys, records):
        grouped.setdefault((attack_name, norm), []).append((image_id, record))
        report.rows.append({
            "attack": attack_name, "norm": norm, "image_id": image_id,
            "success": record.success, "queries": record.queries,
            "final_loss": record.final_loss, "status": record.status,
            "base_queries": record.base_queries,
        })
    for (attack_name, norm), pairs in grouped.items():
        recs = [r for _, r in pairs]
        summary = _summarize(attack_name, norm, recs, budget, want_trace)
        n_succ = sum(1 for r in recs if r.success)
        n_fail = sum(1 for r in recs if not r.success)
        assert n_succ + n_fail == summary.num_images
        report.summaries[(attack_name, norm)] = summary
    return report


def default_mlp_setup(seed: int = 0, features: int = 16, classes: int = 3,
                      train_samples: int = 600, test_samples: int = 400,
                      spread: float = 3.0, cluster_std: float = 1.2,
                      epochs: int = 10, learning_rate: float = 0.01,
                      hidden_dim: int = 32):
    """Small trained blob classifier shared by the CLI experiments and
    the acceptance suite. Returns (model, X_test, y_test)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 103]))
    X_all, y_all = make_blobs(train_samples + test_samples, features, classes,
                              spread, cluster_std, rng)
    X_train, y_train = X_all[:train_samples], y_all[:train_samples]
    X_test, y_test = X_all[train_samples:], y_all[train_samples:]
    model = train_mlp((X_train, y_train), epochs=epochs,
                      learning_rate=learning_rate, seed=seed,
                      hidden_dim=hidden_dim)
    return model, X_test, y_test


def run_noisy_fgsm_experiment(model: ToyModel, X: np.ndarray, y: np.ndarray,
                              epsilon: float, ks=tuple(range(0, 101, 10)),
                              num_seeds: int = 30, p: float = np.inf,
                              seed: int = 0):
    """Misclassification rate of keep-k perturbations, paired across k.

    For each (seed, image) one random sign vector and one random keep
    order are drawn and shared by every k and both modes, so the curves
    over k differ only in how many coordinates are forced correct.
    Returns rows (mode, k, seed, rate).
    """
    X = np.atleast_2d(X)
    n = X.shape[1]
    rows = []
    for s in range(num_seeds):
        rng = np.random.default_rng(np.random.SeedSequence([seed, s]))
        noises = rng.choice(np.array([-1, 1], dtype=np.int8),
                            size=(X.shape[0], n))
        orders = np.array([rng.permutation(n) for _ in range(X.shape[0])])
        for mode in ("top", "random"):
            for k in ks:
                wrong = 0
                for i in range(X.shape[0]):
                    x_adv = _keep_k_point(model, X[i], int(y[i]), epsilon, k,
                                          mode, p, noises[i], orders[i])
                    if model.predict(x_adv) != int(y[i]):
                        wrong += 1
                rows.append((mode, int(k), s, wrong / X.shape[0]))
    return rows


def _keep_k_point(model, x, y, epsilon, k, mode, p, noise, order):
    """noisy_fgsm with the randomness pinned: noise gives the wrong-coord
    signs and order the nested random keep sets."""
    n = x.size
    g = np.asarray(model.gradient(x, y), dtype=np.float64)
    keep = int(round(k / 100.0 * n))
    s = np.asarray(noise, dtype=np.int8).copy()
    if keep > 0:
        if mode == "top":
            chosen = np.argsort(-np.abs(g), kind="stable")[:keep]
        else:
            chosen = order[:keep]
        s[chosen] = sign(g[chosen])
    coef = epsilon if math.isinf(p) else epsilon / math.sqrt(n)
    lo, hi = model.input_range
    return np.clip(x + coef * s, lo, hi)


def run_hamming_estimate_bench(ns=(5, 10), seed: int = 0):
    """Exhaustive error sweep of the noisy Hamming estimate.

    For each n and each magnitude-level count m in 1..n, coordinates of a
    linear objective take values from the m evenly spaced magnitudes in
    [0.1, m/n]; floor(n/4) (at least 1) coordinates are recovered into
    the dictionary and every code in {-1,+1}^n is estimated. Returns rows
    (n, m, max_abs_error).
    """
    rows = []
    for n in ns:
        codes = gray_code_table(n)
        for m in range(1, n + 1):
            rng = np.random.default_rng(np.random.SeedSequence([seed, n, m]))
            levels = np.linspace(0.1, m / n, m)
            c = rng.choice(levels, size=n)
            model = LinearModel(c)
            dd = DirectionalDerivativeOracle(ModelOracle(model),
                                             np.zeros(n), 0, delta=1.0)
            noisy = NoisyHammingOracle(dd, n)
            noisy.sample_coordinates(rng)
            qstar = np.ones(n, dtype=np.int8)
            worst = 0.0
            for q in codes:
                est = noisy.estimate(q)
                true_ham = int((n - q.astype(np.int64) @ qstar) // 2)
                worst = max(worst, abs(est - true_ham))
            rows.append((n, m, worst))
    return rows


def one_sided_sign_test(positives: int, negatives: int) -> float:
    """P[Binomial(positives+negatives, 1/2) >= positives]: the chance of
    seeing at least this many positive differences if direction were
    random. Ties are excluded by the caller."""
    total = positives + negatives
    if total == 0:
        return 1.0
    tail = sum(math.comb(total, i) for i in range(positives, total + 1))
    return tail / 2.0 ** total
