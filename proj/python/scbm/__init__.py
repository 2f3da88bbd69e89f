"""Concept-bottleneck sexism classifier: scoring, training and explanations."""

from ._core import (
    Lexicon,
    Model,
    ScbmError,
    macro_f1,
    mock_yes_probability,
    run,
    score_texts,
    soft_cross_entropy,
)

__all__ = [
    "Lexicon",
    "Model",
    "ScbmError",
    "macro_f1",
    "mock_yes_probability",
    "run",
    "score_texts",
    "soft_cross_entropy",
]
