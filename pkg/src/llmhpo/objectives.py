"""Objective functions mapping a configuration to validation loss/accuracy.

:class:`SurrogateObjective` is an analytic stand-in for fine-tuning that runs
in microseconds; :class:`ExternalCommandObjective` hands the configuration to
a real training script over stdin/stdout.
"""
from __future__ import annotations

import hashlib
import json
import math
import shlex
import subprocess
from dataclasses import asdict, dataclass, replace
from typing import Protocol

import numpy as np

from .config import HyperparameterConfig
from .exceptions import MalformedOutput, NonZeroExit, SpawnFailure, ValidationError


@dataclass(frozen=True)
class Evaluation:
    loss: float
    accuracy: float | None = None


class Objective(Protocol):
    def __call__(self, config: HyperparameterConfig) -> Evaluation: ...


@dataclass(frozen=True)
class SurrogateParams:
    opt_lr: float = 0.02
    opt_momentum: float = 0.005
    opt_gamma: float = 3e-4
    opt_step_mean: float = 20.0
    noise_amplitude: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.opt_lr <= 0 or self.opt_gamma <= 0:
            raise ValidationError("surrogate optima for learning_rate and gamma must be positive")
        if self.noise_amplitude < 0:
            raise ValidationError("noise_amplitude must be >= 0")


def surrogate_terms(config: HyperparameterConfig, params: SurrogateParams) -> tuple[float, float, float, float]:
    """Noise-free penalty terms: learning rate, momentum, gamma, step schedule."""
    step_mean = math.fsum(config.step_size) / len(config.step_size)
    return (
        (math.log10(config.learning_rate) - math.log10(params.opt_lr)) ** 2,
        ((config.momentum - params.opt_momentum) / 0.1) ** 2,
        (math.log10(config.gamma) - math.log10(params.opt_gamma)) ** 2,
        ((step_mean - params.opt_step_mean) / 20.0) ** 2,
    )


def noise_draw(config: HyperparameterConfig, seed: int) -> float:
    """Uniform [0, 1) draw keyed by ``seed`` and the config's canonical JSON."""
    digest = hashlib.sha256(config.to_json().encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "big")
    return float(np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, key]).random())


def surrogate_eval(config: HyperparameterConfig, params: SurrogateParams | None = None) -> Evaluation:
    params = params or SurrogateParams()
    loss = math.fsum(surrogate_terms(config, params))
    if params.noise_amplitude:
        loss += params.noise_amplitude / config.num_epochs * noise_draw(config, params.seed)
    return Evaluation(loss, 1.0 / (1.0 + loss))


class SurrogateObjective:
    def __init__(self, params: SurrogateParams | None = None, **overrides):
        self.params = replace(params or SurrogateParams(), **overrides)

    def __call__(self, config: HyperparameterConfig) -> Evaluation:
        return surrogate_eval(config, self.params)

    def describe(self) -> dict:
        return {"kind": "surrogate", **asdict(self.params)}


def _parse_output(stdout: str) -> Evaluation:
    try:
        obj = json.loads(stdout)
    except json.JSONDecodeError:
        raise MalformedOutput(f"expected one JSON object on stdout, got {stdout[:200]!r}") from None
    if not isinstance(obj, dict) or "loss" not in obj:
        raise MalformedOutput(f"expected an object with a 'loss' key, got {stdout[:200]!r}")
    loss, acc = obj["loss"], obj.get("accuracy")
    if isinstance(loss, bool) or not isinstance(loss, (int, float)) or not math.isfinite(loss):
        raise MalformedOutput(f"loss must be a finite number, got {loss!r}")
    if acc is not None and (
        isinstance(acc, bool) or not isinstance(acc, (int, float)) or not 0.0 <= acc <= 1.0
    ):
        raise MalformedOutput(f"accuracy must be a number in [0, 1], got {acc!r}")
    return Evaluation(float(loss), None if acc is None else float(acc))


def external_command_eval(
    config: HyperparameterConfig, command: str | list[str], timeout: float | None = None
) -> Evaluation:
    """Run ``command`` with the config JSON on stdin; read ``{"loss", "accuracy"}``."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    if not argv:
        raise ValidationError("external objective command is empty")
    try:
        proc = subprocess.run(
            argv,
            input=config.to_json() + "\n",
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except OSError as exc:
        raise SpawnFailure(f"cannot start {argv[0]!r}: {exc}") from exc
    except subprocess.TimeoutExpired:
        raise SpawnFailure(f"{argv[0]!r} did not finish within {timeout}s") from None
    if proc.returncode != 0:
        raise NonZeroExit(proc.returncode, proc.stderr)
    return _parse_output(proc.stdout)


class ExternalCommandObjective:
    def __init__(self, command: str | list[str], timeout: float | None = None):
        self.command = command
        self.timeout = timeout

    def __call__(self, config: HyperparameterConfig) -> Evaluation:
        return external_command_eval(config, self.command, self.timeout)

    def describe(self) -> dict:
        return {"kind": "external", "command": self.command}


def make_objective(kind: str, **kwargs) -> Objective:
    """Build an objective from a selector (``surrogate`` or ``external``)."""
    if kind == "surrogate":
        return SurrogateObjective(**kwargs)
    if kind == "external":
        if "command" not in kwargs and "cmd" in kwargs:
            kwargs["command"] = kwargs.pop("cmd")
        if not kwargs.get("command"):
            raise ValidationError("external objective needs a command")
        return ExternalCommandObjective(**kwargs)
    raise ValidationError(f"unknown objective {kind!r}; expected 'surrogate' or 'external'")
