"""Desk-scale artness scoring: generator blending, pseudo-ranked data, listwise ranking."""

from . import dataset_builder, evaluation, model_zoo, ranker
from .errors import ArtScoreError, ConfigError, DivergenceError, FormatError, IncompatibleError, ShapeError

__version__ = "0.1.0"

__all__ = [
    "ArtScoreError",
    "ConfigError",
    "DivergenceError",
    "FormatError",
    "IncompatibleError",
    "ShapeError",
    "dataset_builder",
    "evaluation",
    "model_zoo",
    "ranker",
]
