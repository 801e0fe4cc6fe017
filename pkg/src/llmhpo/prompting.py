"""Chat prompt construction.

Prompts follow the imitation + instruction-following layout: a system turn
casting the model as a machine-learning expert, then one user turn with
labeled sections. Rendering is a pure function of its inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from .config import ATTRIBUTES, SearchSpace
from .exceptions import EmptyField, NoTrials, ValidationError

DEFAULT_SYSTEM_PROMPT = (
    "I want you to be a Machine Learning expert. You have the knowledge of training and "
    "finetuining various machine learning models for various tasks. I want you to use this "
    "knowledge to aid me in an experiment"
)

CONFIG_OUTPUT_FORMAT = (
    "Return only a JSON object with keys learning_rate, momentum, batch_size, num_epochs, "
    "gamma, step_size"
)

SPACE_OUTPUT_FORMAT = (
    "Return only a JSON object describing a search space for Bayesian optimisation. Use the keys "
    "learning_rate, momentum, batch_size, num_epochs, gamma, step_size, each mapped to an object "
    'with a "type" of fixed (value), uniform (lo, hi), loguniform (lo_exp, hi_exp, base 10), '
    "uniformint (lo, hi) or choice (values), plus integer keys trials and epochs_per_trial"
)

STRATEGIES = ("imitation-instruction",)

ROLES = ("system", "user", "assistant")

# (label, PromptSpec field) in rendering order
SECTIONS = (
    ("TASK", "task"),
    ("OBJECTIVE", "objective"),
    ("DATASET", "dataset_description"),
    ("MODEL", "model_description"),
    ("OUTPUT FORMAT", "output_format"),
)


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"unknown message role {self.role!r}")
        if not isinstance(self.content, str) or not self.content:
            raise EmptyField("content")

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class PromptSpec:
    """Structured description of one use case."""

    task: str
    objective: str
    dataset_description: str
    model_description: str
    output_format: str = CONFIG_OUTPUT_FORMAT
    system_prompt: str = DEFAULT_SYSTEM_PROMPT

    def validate(self) -> "PromptSpec":
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, str) or not v.strip():
                raise EmptyField(f.name)
        return self

    def to_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "PromptSpec":
        if not isinstance(d, dict):
            raise ValidationError("use-case file must hold a JSON object")
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in d.items() if k in known}
        for name in ("task", "objective", "dataset_description", "model_description"):
            if name not in kwargs:
                raise EmptyField(name)
        return cls(**kwargs).validate()


def load_prompt_spec(path: str | Path) -> PromptSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    return PromptSpec.from_dict(data)


def render_usecase_prompt(spec: PromptSpec, strategy: str = "imitation-instruction") -> list[Message]:
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown prompting strategy {strategy!r}")
    spec.validate()
    body = "\n\n".join(f"{label}:\n{getattr(spec, name)}" for label, name in SECTIONS)
    return [Message("system", spec.system_prompt), Message("user", body)]


def _trial_line(trial) -> str:
    row = {
        "trial": trial.index,
        "config": trial.config.to_dict(),
        "validation_loss": trial.loss,
        "validation_accuracy": trial.accuracy,
    }
    return json.dumps(row)


def render_refinement_prompt(
    space: SearchSpace,
    trials: Sequence,
    target_trials: int,
    system_prompt: str = DEFAULT_SYSTEM_PROMPT,
) -> list[Message]:
    """Ask for a narrower search space given a previous run's results.

    The prior space and the trial table are embedded as JSON blocks so the
    model's answer can be validated mechanically. The space comes first, so
    the first fenced block of the user message parses back to ``space``.
    """
    if not trials:
        raise NoTrials()
    if not isinstance(target_trials, int) or target_trials < 1:
        raise ValidationError(f"target_trials must be a positive integer, got {target_trials!r}")
    lines = "\n".join(_trial_line(t) for t in trials)
    user = (
        "A Bayesian optimisation run explored the search space below.\n\n"
        f"PRIOR SEARCH SPACE:\n```json\n{space.to_json()}\n```\n\n"
        f"TRIAL RESULTS ({len(trials)} trials, one JSON object per line):\n```jsonl\n{lines}\n```\n\n"
        "INSTRUCTION:\n"
        "Using these results, propose a narrower search space that reaches an equal or lower "
        f"validation loss within {target_trials} trials. Keep the attributes "
        f"{', '.join(ATTRIBUTES)} and set trials to {target_trials}. "
        "Return only a JSON object in the same schema as the prior search space."
    )
    return [Message("system", system_prompt), Message("user", user)]


def messages_to_json(messages: Iterable[Message], indent: int | None = 2) -> str:
    return json.dumps([m.to_dict() for m in messages], indent=indent)
