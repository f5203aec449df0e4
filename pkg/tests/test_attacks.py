from __future__ import annotations

import numpy as np
import pytest

from signquest.attacks import (
    AttackConfig,
    BLACK_BOX_ATTACKS,
    PerturbationBall,
    cosine_similarity,
    fgsm,
    hamming_similarity,
    nes_attack,
    noisy_fgsm,
    pgd_whitebox,
    signhunter_attack,
    zosignsgd_attack,
)
from signquest.bench import default_mlp_setup, select_eval_set
from signquest.models import LinearModel, SyntheticConcaveLoss
from signquest.oracles import ModelOracle


def test_ball_projection_linf_properties():
    rng = np.random.default_rng(24)
    center = rng.uniform(-1, 1, size=8)
    ball = PerturbationBall(center, 0.3, np.inf, -1.0, 1.0)
    for _ in range(50):
        x = rng.uniform(-3, 3, size=8)
        proj = ball.project(x)
        assert ball.contains(proj)
        assert np.all(proj >= -1.0) and np.all(proj <= 1.0)
        if ball.contains(x) and np.all((x >= -1) & (x <= 1)):
            assert np.allclose(proj, x)


def test_ball_projection_l2_properties():
    rng = np.random.default_rng(25)
    center = rng.uniform(-0.5, 0.5, size=6)
    ball = PerturbationBall(center, 0.8, 2, -1.0, 1.0)
    for _ in range(50):
        x = rng.uniform(-3, 3, size=6)
        proj = ball.project(x)
        assert np.linalg.norm(proj - center) <= 0.8 + 1e-9
        assert np.all(proj >= -1.0) and np.all(proj <= 1.0)


def test_ball_contains_rejects_outside():
    ball = PerturbationBall(np.zeros(3), 0.1, np.inf, -1.0, 1.0)
    assert ball.contains(np.full(3, 0.1))
    assert not ball.contains(np.full(3, 0.100001))


def test_attack_config_normalizes_norm_strings():
    assert AttackConfig(epsilon=0.1, p="inf").p == np.inf
    assert AttackConfig(epsilon=0.1, p="linf").p == np.inf
    assert AttackConfig(epsilon=0.1, p="2").p == 2
    with pytest.raises(ValueError):
        AttackConfig(epsilon=0.1, p=3)
    with pytest.raises(ValueError):
        AttackConfig(epsilon=-1.0)
    with pytest.raises(ValueError):
        AttackConfig(epsilon=0.1, budget=0)


def test_similarity_metrics():
    a = np.array([1, -1, 1, 1], dtype=np.int8)
    assert hamming_similarity(a, a) == 1.0
    assert hamming_similarity(a, -a) == 0.0
    assert hamming_similarity(a, np.array([1, -1, 1, -1])) == 0.75
    assert cosine_similarity(a, a) == pytest.approx(1.0)
    assert cosine_similarity(a, np.zeros(4)) == 0.0


def _tiny_mlp():
    model, X, y = default_mlp_setup(seed=1, train_samples=300,
                                    test_samples=120)
    idx, _ = select_eval_set(model, X, y, 12)
    return model, X[idx], y[idx]


def test_rejected_when_already_misclassified():
    model, X, y = _tiny_mlp()
    wrong_label = (int(y[0]) + 1) % 3
    cfg = AttackConfig(epsilon=0.5, budget=50)
    rec = signhunter_attack(model, X[0], wrong_label, cfg)
    assert rec.status == "rejected_misclassified"
    assert rec.queries == 0
    assert not rec.success


def test_signhunter_attack_query_accounting():
    model, X, y = _tiny_mlp()
    cfg = AttackConfig(epsilon=1.0, budget=64, seed=5)
    oracle = ModelOracle(model)
    rec = signhunter_attack(model, X[1], int(y[1]), cfg, oracle=oracle)
    assert rec.queries == oracle.query_count
    assert rec.queries <= 64
    assert len(rec.loss_trace) == rec.queries
    assert rec.base_queries >= 1


def test_signhunter_attack_zero_epsilon_cannot_succeed():
    model, X, y = _tiny_mlp()
    cfg = AttackConfig(epsilon=0.0, budget=16)
    rec = signhunter_attack(model, X[2], int(y[2]), cfg)
    assert not rec.success
    assert rec.queries == 0


def test_signhunter_attack_success_point_is_in_ball():
    model, X, y = _tiny_mlp()
    succeeded = 0
    for i in range(len(X)):
        cfg = AttackConfig(epsilon=1.5, budget=200, seed=i)
        rec = signhunter_attack(model, X[i], int(y[i]), cfg)
        if rec.success:
            succeeded += 1
            assert model.predict(rec.final_x) != int(y[i])
            assert np.max(np.abs(rec.final_x - X[i])) <= 1.5 + 1e-9
    assert succeeded > 0


def test_gaussian_attacks_require_parameters():
    model, X, y = _tiny_mlp()
    cfg = AttackConfig(epsilon=0.5, budget=40)
    with pytest.raises(ValueError):
        nes_attack(model, X[0], int(y[0]), cfg)
    with pytest.raises(ValueError):
        zosignsgd_attack(model, X[0], int(y[0]), cfg)


def test_gaussian_attack_budget_smaller_than_one_iteration():
    model, X, y = _tiny_mlp()
    cfg = AttackConfig(epsilon=0.5, budget=7, delta=0.3, eta=0.2,
                       num_samples=10, seed=0)
    oracle = ModelOracle(model)
    rec = nes_attack(model, X[3], int(y[3]), cfg, oracle=oracle)
    # 7 < 2 * num_samples: the lone partial iteration is discarded but paid for
    assert rec.queries == 7 == oracle.query_count
    assert len(rec.loss_trace) == 7


def test_gaussian_attack_probes_stay_in_ball():
    model, X, y = _tiny_mlp()
    eps = 0.8

    class Checking(ModelOracle):
        violations = 0

        def _evaluate(self, x, yy):
            if np.max(np.abs(x - X[4])) > eps + 1e-9:
                self.violations += 1
            return super()._evaluate(x, yy)

    oracle = Checking(model)
    cfg = AttackConfig(epsilon=eps, budget=60, delta=0.5, eta=0.25, seed=2)
    zosignsgd_attack(model, X[4], int(y[4]), cfg, oracle=oracle)
    assert oracle.violations == 0


def test_nes_and_zosignsgd_make_progress_on_concave_loss():
    """Both estimators should walk toward the peak of a smooth bowl."""
    model = SyntheticConcaveLoss(16, input_range=(0.0, 1.0))
    x0 = np.full(16, 0.15)
    cfg = AttackConfig(epsilon=0.6, p=2, budget=600, delta=0.05, eta=0.05,
                       seed=3)
    for attack in (nes_attack, zosignsgd_attack):
        rec = attack(model, x0, 0, cfg)
        assert model.loss(rec.final_x, 0) > model.loss(x0, 0)


def test_similarity_traces_only_with_true_gradient():
    model, X, y = _tiny_mlp()
    cfg = AttackConfig(epsilon=1.0, budget=32, seed=7)
    plain = signhunter_attack(model, X[5], int(y[5]), cfg)
    assert plain.hamming_trace is None
    g = model.gradient(X[5], int(y[5]))
    traced = signhunter_attack(model, X[5], int(y[5]), cfg, true_gradient=g)
    assert traced.hamming_trace is not None
    assert len(traced.hamming_trace) == traced.queries
    assert all(0.0 <= v <= 1.0 for v in traced.hamming_trace)


def test_attack_registry_contents():
    assert set(BLACK_BOX_ATTACKS) == {"signhunter", "nes", "zosignsgd"}


def test_fgsm_moves_to_ball_surface():
    model = LinearModel(np.array([1.0, -1.0]), input_range=(-10, 10))
    x = np.zeros(2)
    out = fgsm(model, x, 0, 0.5)
    assert np.allclose(out, [0.5, -0.5])
    out2 = fgsm(model, x, 1, 0.5)
    assert np.allclose(out2, [-0.5, 0.5])


def test_noisy_fgsm_keep_counts():
    model = LinearModel(np.arange(1.0, 9.0), input_range=(-10, 10))
    x = np.zeros(8)
    noise = -np.ones(8, dtype=np.int8)
    full = noisy_fgsm(model, x, 0, 1.0, 100, noise=noise)
    assert np.allclose(full, fgsm(model, x, 0, 1.0))
    none = noisy_fgsm(model, x, 0, 1.0, 0, noise=noise)
    assert np.allclose(none, -np.ones(8))
    half = noisy_fgsm(model, x, 0, 1.0, 50, mode="top", noise=noise)
    # top-4 magnitudes are the last four coordinates
    assert np.allclose(half[4:], 1.0) and np.allclose(half[:4], -1.0)


def test_noisy_fgsm_validates_arguments():
    model = LinearModel(np.ones(3))
    with pytest.raises(ValueError):
        noisy_fgsm(model, np.zeros(3), 0, 0.1, 50, mode="worst")
    with pytest.raises(ValueError):
        noisy_fgsm(model, np.zeros(3), 0, 0.1, 101)


def test_pgd_matches_fgsm_after_one_full_step():
    model = LinearModel(np.array([0.7, -0.3]), input_range=(-5, 5))
    x = np.array([0.1, 0.2])
    got = pgd_whitebox(model, x, 0, epsilon=0.4, steps=1, step_size=0.4)
    assert np.allclose(got, fgsm(model, x, 0, 0.4))


def test_pgd_at_least_as_strong_as_fgsm_on_mlp():
    model, X, y = _tiny_mlp()
    eps = 1.0
    fgsm_wins = pgd_wins = 0
    for i in range(len(X)):
        yi = int(y[i])
        if model.predict(fgsm(model, X[i], yi, eps)) != yi:
            fgsm_wins += 1
        out = pgd_whitebox(model, X[i], yi, eps, steps=10, step_size=0.25,
                           restarts=3, seed=i)
        if model.predict(out) != yi:
            pgd_wins += 1
    assert pgd_wins >= fgsm_wins
