from .env import (
    MODEL_FORMAT,
    DifficultyMix,
    PoolSpec,
    SimHyper,
    SimModel,
    flip_sample,
    generate_pool,
    infer_sim,
    skill_from_weight,
    train_sim,
    true_class_prob,
)

__all__ = [
    "MODEL_FORMAT",
    "DifficultyMix",
    "PoolSpec",
    "SimHyper",
    "SimModel",
    "flip_sample",
    "generate_pool",
    "infer_sim",
    "skill_from_weight",
    "train_sim",
    "true_class_prob",
]
