"""Artness scorer, ranking losses, augmentations, optimiser and training loop."""

from .augment import geometric_augment, swap_augment
from .losses import listmle_grad, listmle_loss, mse_rank_grad, mse_rank_loss
from .metrics import cross_sequence_accuracy, mean_ndcg, ndcg, within_sequence_accuracy
from .optim import AdamWState, adamw_step
from .scorer import (
    ScorerParams,
    backward,
    forward,
    init_scorer,
    load_scorer,
    save_scorer,
    score,
    score_batch,
)
from .training import TrainConfig, TrainReport, evaluate, sequence_losses, train

__all__ = [
    "AdamWState",
    "ScorerParams",
    "TrainConfig",
    "TrainReport",
    "adamw_step",
    "backward",
    "cross_sequence_accuracy",
    "evaluate",
    "forward",
    "geometric_augment",
    "init_scorer",
    "listmle_grad",
    "listmle_loss",
    "load_scorer",
    "mean_ndcg",
    "mse_rank_grad",
    "mse_rank_loss",
    "ndcg",
    "save_scorer",
    "score",
    "score_batch",
    "sequence_losses",
    "swap_augment",
    "train",
    "within_sequence_accuracy",
]
