"""Analysis pipeline for professional Go records: counterfactual decision
quality, opening novelty, and fixed-effects trend estimation."""

__version__ = "0.1.0"

from .record import GameDate, GameRecord, Move, NoveltyRecord, ValidationReport

__all__ = [
    "GameDate",
    "GameRecord",
    "Move",
    "NoveltyRecord",
    "ValidationReport",
    "__version__",
]
