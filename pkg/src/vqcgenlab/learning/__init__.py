"""Losses, risks and optimizers."""
from .losses import (LossSpec, LabeledPair, RiskReport, loss_eval, empirical_risk, gen_gap,
                     shot_estimator, min_prob_decode, CompilingModel, QCNNModel,
                     haar_average_fidelity_loss, phase_free_frobenius)
from .result import TrainResult, delta_distances
from .spsa import SPSAConfig, spsa_minimize
from .sweep import environment_sweep
from .vans import VansConfig, vans_optimize, compiling_risk

__all__ = [
    "LossSpec", "LabeledPair", "RiskReport", "loss_eval", "empirical_risk", "gen_gap",
    "shot_estimator", "min_prob_decode", "CompilingModel", "QCNNModel",
    "haar_average_fidelity_loss", "phase_free_frobenius", "TrainResult", "delta_distances",
    "SPSAConfig", "spsa_minimize", "environment_sweep", "VansConfig", "vans_optimize",
    "compiling_risk",
]
