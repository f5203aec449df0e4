"""Gradient-sign estimation from loss queries, Hamming-oracle retrieval,
and query-efficient black-box attacks on built-in toy models."""

from .attacks import (AttackConfig, AttackRecord, PerturbationBall,
                      cosine_similarity, fgsm, hamming_similarity, nes_attack,
                      noisy_fgsm, pgd_whitebox, signhunter_attack,
                      zosignsgd_attack)
from .bench import (CampaignReport, ConfigError, run_campaign,
                    run_hamming_estimate_bench, run_noisy_fgsm_experiment,
                    similarity_traces)
from .contopt import (ContOptProblem, baseline_minimize, quadratic_problem,
                      run_contopt_experiment, signhunter_minimize)
from .core import (PartitionNode, SignVector, expand_node, gray_code_at,
                   gray_code_table, gray_rank, hamming_distance,
                   hamming_from_dot, sign)
from .models import (IdxDataset, LinearModel, MlpClassifier, QuadraticModel,
                     SyntheticConcaveLoss, ToyModel, gradient_check,
                     load_idx, magnitude_histogram, make_blobs, train_mlp)
from .oracles import (DirectionalDerivativeOracle, LossOracle, ModelOracle,
                      NoiselessHammingOracle, NoisyHammingOracle)
from .signsearch import (SearchResult, SignHunter, elim_run, goo_run,
                         linear_system_retrieve, query_ratio_bench,
                         sequential_flip, signhunter_run)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig", "AttackRecord", "PerturbationBall", "cosine_similarity",
    "fgsm", "hamming_similarity", "nes_attack", "noisy_fgsm", "pgd_whitebox",
    "signhunter_attack", "zosignsgd_attack", "CampaignReport", "ConfigError",
    "run_campaign", "run_hamming_estimate_bench", "run_noisy_fgsm_experiment",
    "similarity_traces", "ContOptProblem", "baseline_minimize",
    "quadratic_problem", "run_contopt_experiment", "signhunter_minimize",
    "PartitionNode", "SignVector", "expand_node", "gray_code_at",
    "gray_code_table", "gray_rank", "hamming_distance", "hamming_from_dot",
    "sign", "IdxDataset", "LinearModel", "MlpClassifier", "QuadraticModel",
    "SyntheticConcaveLoss", "ToyModel", "gradient_check", "load_idx",
    "magnitude_histogram", "make_blobs", "train_mlp",
    "DirectionalDerivativeOracle", "LossOracle", "ModelOracle",
    "NoiselessHammingOracle", "NoisyHammingOracle", "SearchResult",
    "SignHunter", "elim_run", "goo_run", "linear_system_retrieve",
    "query_ratio_bench", "sequential_flip", "signhunter_run",
]
