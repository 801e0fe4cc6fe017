"""Input coercion shared by the estimator front-end and the runner."""
from __future__ import annotations

import numbers
from pathlib import Path
from typing import Any, Mapping

from .config import SearchSpace, load_search_space, parse_search_space
from .exceptions import ValidationError

ALGORITHMS = ("tpe", "random")
MAX_SEED = 2**64 - 1


def check_search_space(space: Any) -> SearchSpace:
    """Accept a SearchSpace, a mapping, a JSON string, or a path to a JSON file."""
    if isinstance(space, SearchSpace):
        return space
    if isinstance(space, Mapping):
        return parse_search_space(space)
    if isinstance(space, Path):
        return load_search_space(space)
    if isinstance(space, str):
        if space.lstrip().startswith("{"):
            return parse_search_space(space)
        return load_search_space(space)
    raise ValidationError(f"cannot interpret {type(space).__name__} as a search space")


def check_seed(seed: Any) -> int:
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral) or not 0 <= seed <= MAX_SEED:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def check_algo(algo: Any) -> str:
    if algo not in ALGORITHMS:
        raise ValidationError(f"algo must be one of {ALGORITHMS}, got {algo!r}")
    return algo


def check_objective(objective: Any):
    if not callable(objective):
        raise ValidationError("objective must be callable: config -> Evaluation")
    return objective
