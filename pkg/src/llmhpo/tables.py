"""The four reference configurations used by the comparison experiments.

``table1`` is the wide, randomly initialised space; ``table2`` the literature
configuration (as a single config and as an all-fixed space); ``table3`` the
LLM-suggested space; ``table4`` the space refined from prior trial results.
"""
from __future__ import annotations

from importlib import resources

from .config import HyperparameterConfig, SearchSpace, parse_config, parse_search_space

SPACE_FILES = {
    "table1": "table1_space.json",
    "table2": "table2_space.json",
    "table3": "table3_space.json",
    "table4": "table4_space.json",
}
LITERATURE_CONFIG_FILE = "table2_config.json"


def data_text(filename: str) -> str:
    return resources.files("llmhpo.data").joinpath(filename).read_text(encoding="utf-8")


def table_space(name: str) -> SearchSpace:
    try:
        filename = SPACE_FILES[name]
    except KeyError:
        raise KeyError(f"unknown table {name!r}; expected one of {sorted(SPACE_FILES)}") from None
    return parse_search_space(data_text(filename))


def literature_config() -> HyperparameterConfig:
    return parse_config(data_text(LITERATURE_CONFIG_FILE))
