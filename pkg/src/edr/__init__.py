"""Expected discounted reward: exact scores, estimators and a toy Improve loop."""

from .reward import (
    CostOutcome,
    DiscountSpec,
    InputModel,
    RewardFunction,
    ScoreValue,
    compare_scores,
    discount_factor,
    score_exact_finite,
)

__all__ = [
    "CostOutcome",
    "DiscountSpec",
    "InputModel",
    "RewardFunction",
    "ScoreValue",
    "compare_scores",
    "discount_factor",
    "score_exact_finite",
]
__version__ = "0.1.0"
