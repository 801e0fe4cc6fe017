"""LLM-assisted hyperparameter search.

Prompt an LLM for fine-tuning configurations and search spaces, measure how
much its answers vary, and compare LLM-seeded Bayesian optimization (TPE)
against wide and literature baselines.
"""
from .config import (
    ATTRIBUTES,
    Choice,
    Fixed,
    HyperparameterConfig,
    LogUniform,
    SearchSpace,
    Uniform,
    UniformInt,
    parse_config,
    parse_search_space,
    space_contains,
)
from .estimator import HyperparameterSearch
from .objectives import Evaluation, ExternalCommandObjective, SurrogateObjective, SurrogateParams
from .optimizer import OptimizationRun, TpeParams, TrialResult, random_sample, run_optimization, tpe_suggest
from .prompting import Message, PromptSpec, render_refinement_prompt, render_usecase_prompt
from .tables import literature_config, table_space

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTES",
    "Choice",
    "Evaluation",
    "ExternalCommandObjective",
    "Fixed",
    "HyperparameterConfig",
    "HyperparameterSearch",
    "LogUniform",
    "Message",
    "OptimizationRun",
    "PromptSpec",
    "SearchSpace",
    "SurrogateObjective",
    "SurrogateParams",
    "TpeParams",
    "TrialResult",
    "Uniform",
    "UniformInt",
    "literature_config",
    "parse_config",
    "parse_search_space",
    "random_sample",
    "render_refinement_prompt",
    "render_usecase_prompt",
    "run_optimization",
    "space_contains",
    "table_space",
    "tpe_suggest",
]
