"""Hyperparameter configurations, search-space domains and their JSON forms.

Both a configuration and a search space cover the same six attributes, in a
fixed order that is also the sampler's draw order::

    learning_rate, momentum, batch_size, num_epochs, gamma, step_size

JSON is the only wire format. Serialization is canonical (attribute order is
fixed, floats print as their shortest round-trip repr), so a canonical
document survives ``parse -> serialize`` byte for byte.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Union

from .exceptions import (
    InvalidDomain,
    InvalidValue,
    MissingField,
    RangeOrderError,
    UnknownFieldWarning,
    ValidationError,
)

ATTRIBUTES = ("learning_rate", "momentum", "batch_size", "num_epochs", "gamma", "step_size")
REAL_ATTRIBUTES = ("learning_rate", "momentum", "gamma")
INT_ATTRIBUTES = ("batch_size", "num_epochs")

ALIASES = {
    "lr": "learning_rate",
    "learningRate": "learning_rate",
    "epochs": "num_epochs",
    "numEpochs": "num_epochs",
    "batchSize": "batch_size",
    "stepSize": "step_size",
}

# Slack, in decades, when checking log-uniform membership: 10**u can land a
# few ulps outside [lo_exp, hi_exp] after the round trip through log10.
LOG_TOLERANCE = 1e-9


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _real(name: str, v: Any) -> float:
    if not _is_number(v):
        raise InvalidValue(name, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise InvalidValue(name, "must be finite")
    return v


def _integer(name: str, v: Any) -> int:
    if not _is_number(v):
        raise InvalidValue(name, f"expected an integer, got {v!r}")
    if isinstance(v, float):
        if not math.isfinite(v) or not v.is_integer():
            raise InvalidValue(name, f"expected an integer, got {v!r}")
        v = int(v)
    return v


def _check_real(name: str, v: float) -> None:
    if name == "momentum":
        if not 0.0 <= v <= 1.0:
            raise InvalidValue(name, f"must lie in [0, 1], got {v!r}")
    elif v <= 0.0:
        raise InvalidValue(name, f"must be positive, got {v!r}")


def _step_tuple(v: Any) -> tuple[int, ...]:
    if _is_number(v):
        v = [v]
    if not isinstance(v, (list, tuple)) or not v:
        raise InvalidValue("step_size", "must be a positive integer or a nonempty list of them")
    steps = tuple(_integer("step_size", s) for s in v)
    if any(s < 1 for s in steps):
        raise InvalidValue("step_size", f"milestones must be >= 1, got {list(steps)}")
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise InvalidValue("step_size", f"milestones must be strictly increasing, got {list(steps)}")
    return steps


@dataclass(frozen=True)
class HyperparameterConfig:
    """One concrete fine-tuning configuration."""

    learning_rate: float
    momentum: float
    batch_size: int
    num_epochs: int
    gamma: float
    step_size: tuple[int, ...]

    def __post_init__(self):
        for name in REAL_ATTRIBUTES:
            v = _real(name, getattr(self, name))
            _check_real(name, v)
            object.__setattr__(self, name, v)
        for name in INT_ATTRIBUTES:
            v = _integer(name, getattr(self, name))
            if v < 1:
                raise InvalidValue(name, f"must be >= 1, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "step_size", _step_tuple(self.step_size))

    def to_dict(self) -> dict[str, Any]:
        d = {name: getattr(self, name) for name in ATTRIBUTES}
        d["step_size"] = list(self.step_size)
        return d

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in ATTRIBUTES)

    def replace(self, **changes) -> "HyperparameterConfig":
        d = {name: getattr(self, name) for name in ATTRIBUTES}
        d.update(changes)
        return HyperparameterConfig(**d)


def _load_object(text: str | bytes | Mapping) -> dict:
    if isinstance(text, Mapping):
        return dict(text)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"expected a JSON object, got {type(obj).__name__}")
    return obj


def _report_unknown(keys: list[str], sink: list[str] | None, where: str) -> None:
    for key in keys:
        msg = f"ignoring unknown {where} field {key!r}"
        if sink is not None:
            sink.append(msg)
        else:
            warnings.warn(msg, UnknownFieldWarning, stacklevel=3)


def parse_config(text: str | bytes | Mapping, *, unknown: list[str] | None = None) -> HyperparameterConfig:
    """Parse and validate a configuration JSON object.

    Keys in :data:`ALIASES` are mapped to their canonical names. Unrecognised
    keys are ignored; a message for each is appended to ``unknown`` when a
    list is given, otherwise emitted as an :class:`UnknownFieldWarning`.
    """
    raw = _load_object(text)
    values: dict[str, Any] = {}
    extra = []
    for key, value in raw.items():
        name = ALIASES.get(key, key)
        if name not in ATTRIBUTES:
            extra.append(key)
            continue
        if name in values:
            raise InvalidValue(name, "given more than once (check aliases)")
        values[name] = value
    for name in ATTRIBUTES:
        if name not in values:
            raise MissingField(name)
    _report_unknown(extra, unknown, "config")
    return HyperparameterConfig(**values)


def config_to_json(config: HyperparameterConfig, indent: int | None = None) -> str:
    return config.to_json(indent=indent)


# -- domains ---------------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    value: Any
    type = "fixed"

    def to_dict(self) -> dict[str, Any]:
        v = list(self.value) if isinstance(self.value, tuple) else self.value
        return {"type": self.type, "value": v}


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float
    type = "uniform"

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.type, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class LogUniform:
    """Base-10 log-uniform: values are ``10**u`` with ``u`` in [lo_exp, hi_exp]."""

    lo_exp: float
    hi_exp: float
    type = "loguniform"

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.type, "lo_exp": self.lo_exp, "hi_exp": self.hi_exp}


@dataclass(frozen=True)
class UniformInt:
    lo: int
    hi: int
    type = "uniformint"

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.type, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Choice:
    values: tuple
    type = "choice"

    def to_dict(self) -> dict[str, Any]:
        vals = [list(v) if isinstance(v, tuple) else v for v in self.values]
        return {"type": self.type, "values": vals}


Domain = Union[Fixed, Uniform, LogUniform, UniformInt, Choice]

_ALLOWED = {
    "learning_rate": (Fixed, Uniform, LogUniform, Choice),
    "momentum": (Fixed, Uniform, LogUniform, Choice),
    "gamma": (Fixed, Uniform, LogUniform, Choice),
    "batch_size": (Fixed, UniformInt, Choice),
    "num_epochs": (Fixed, UniformInt, Choice),
    "step_size": (Fixed, UniformInt, Choice),
}


def _domain_value(name: str, v: Any) -> Any:
    """Validate one admissible value of ``name``; returns it in stored form."""
    try:
        if name in REAL_ATTRIBUTES:
            _check_real(name, _real(name, v))
            return v
        if name in INT_ATTRIBUTES:
            i = _integer(name, v)
            if i < 1:
                raise InvalidValue(name, f"must be >= 1, got {i}")
            return i
        steps = _step_tuple(v)
        return steps[0] if _is_number(v) else steps
    except InvalidValue as exc:
        raise InvalidDomain(name, exc.reason) from None


def _param(name: str, spec: Mapping, key: str) -> Any:
    if key not in spec:
        raise InvalidDomain(name, f"missing {key!r}")
    v = spec[key]
    if not _is_number(v) or not math.isfinite(v):
        raise InvalidDomain(name, f"{key!r} must be a finite number, got {v!r}")
    return v


def parse_domain(name: str, spec: Any) -> Domain:
    if not isinstance(spec, Mapping):
        raise InvalidDomain(name, "expected an object with a 'type' discriminator")
    kind = spec.get("type")
    if kind == "fixed":
        if "value" not in spec:
            raise InvalidDomain(name, "missing 'value'")
        dom: Domain = Fixed(_domain_value(name, spec["value"]))
    elif kind == "uniform":
        lo, hi = _param(name, spec, "lo"), _param(name, spec, "hi")
        if lo >= hi:
            raise RangeOrderError(name, lo, hi)
        _domain_value(name, lo)
        _domain_value(name, hi)
        dom = Uniform(lo, hi)
    elif kind == "loguniform":
        lo, hi = _param(name, spec, "lo_exp"), _param(name, spec, "hi_exp")
        if lo >= hi:
            raise RangeOrderError(name, lo, hi)
        if name == "momentum" and hi > 0:
            raise InvalidDomain(name, "hi_exp must be <= 0 to stay inside [0, 1]")
        dom = LogUniform(lo, hi)
    elif kind == "uniformint":
        lo, hi = _param(name, spec, "lo"), _param(name, spec, "hi")
        if not all(isinstance(v, int) for v in (lo, hi)):
            raise InvalidDomain(name, "uniformint bounds must be integers")
        if lo > hi:
            raise RangeOrderError(name, lo, hi)
        _domain_value(name, lo)
        dom = Fixed(lo) if lo == hi else UniformInt(lo, hi)
    elif kind == "choice":
        vals = spec.get("values")
        if not isinstance(vals, list) or not vals:
            raise InvalidDomain(name, "'values' must be a nonempty list")
        stored = tuple(_domain_value(name, v) for v in vals)
        if len(set(stored)) != len(stored):
            raise InvalidDomain(name, "choice values must be pairwise distinct")
        dom = Choice(stored)
    else:
        raise InvalidDomain(name, f"unknown domain type {kind!r}")
    if not isinstance(dom, _ALLOWED[name]):
        raise InvalidDomain(name, f"domain type {dom.type!r} not supported for this attribute")
    return dom


@dataclass(frozen=True)
class SearchSpace:
    """Per-attribute domains plus the trial budget."""

    domains: Mapping[str, Domain]
    trials: int = 10
    epochs_per_trial: int = 3

    def __post_init__(self):
        missing = [a for a in ATTRIBUTES if a not in self.domains]
        if missing:
            raise MissingField(missing[0])
        extra = [k for k in self.domains if k not in ATTRIBUTES]
        if extra:
            raise InvalidDomain(extra[0], "not a known hyperparameter")
        for name in ("trials", "epochs_per_trial"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InvalidValue(name, f"must be a positive integer, got {v!r}")
        for name in ATTRIBUTES:
            if not isinstance(self.domains[name], _ALLOWED[name]):
                raise InvalidDomain(name, f"{type(self.domains[name]).__name__} not supported")
        epochs = self.domains["num_epochs"]
        if isinstance(epochs, Fixed) and epochs.value != self.epochs_per_trial:
            raise InvalidDomain(
                "num_epochs",
                f"fixed value {epochs.value} disagrees with epochs_per_trial={self.epochs_per_trial}",
            )
        object.__setattr__(self, "domains", {a: self.domains[a] for a in ATTRIBUTES})

    def __getitem__(self, name: str) -> Domain:
        return self.domains[name]

    @property
    def is_fixed(self) -> bool:
        return all(isinstance(d, Fixed) for d in self.domains.values())

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {a: self.domains[a].to_dict() for a in ATTRIBUTES}
        d["trials"] = self.trials
        d["epochs_per_trial"] = self.epochs_per_trial
        return d

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def fixed_config(self) -> HyperparameterConfig:
        """The single configuration of an all-fixed space."""
        if not self.is_fixed:
            raise ValidationError("search space has non-fixed domains")
        return HyperparameterConfig(**{a: d.value for a, d in self.domains.items()})


def parse_search_space(text: str | bytes | Mapping, *, unknown: list[str] | None = None) -> SearchSpace:
    raw = _load_object(text)
    for name in ATTRIBUTES + ("trials", "epochs_per_trial"):
        if name not in raw:
            raise MissingField(name)
    extra = [k for k in raw if k not in ATTRIBUTES and k not in ("trials", "epochs_per_trial")]
    _report_unknown(extra, unknown, "search space")
    domains = {name: parse_domain(name, raw[name]) for name in ATTRIBUTES}
    return SearchSpace(domains, trials=raw["trials"], epochs_per_trial=raw["epochs_per_trial"])


def search_space_to_json(space: SearchSpace, indent: int | None = 2) -> str:
    return space.to_json(indent=indent)


def fixed_space(config: HyperparameterConfig, trials: int = 10) -> SearchSpace:
    """Degenerate space that only contains ``config``."""
    domains = {a: Fixed(v) for a, v in zip(ATTRIBUTES, config.as_tuple())}
    return SearchSpace(domains, trials=trials, epochs_per_trial=config.num_epochs)


# -- membership ------------------------------------------------------------


def _scalar_in(dom: Domain, v: Any) -> bool:
    if isinstance(dom, Fixed):
        return v == dom.value
    if isinstance(dom, Uniform):
        return dom.lo <= v <= dom.hi
    if isinstance(dom, LogUniform):
        if v <= 0:
            return False
        e = math.log10(v)
        return dom.lo_exp - LOG_TOLERANCE <= e <= dom.hi_exp + LOG_TOLERANCE
    if isinstance(dom, UniformInt):
        return dom.lo <= v <= dom.hi
    return v in dom.values


def _steps_in(dom: Domain, steps: tuple[int, ...]) -> bool:
    if isinstance(dom, Fixed):
        want = dom.value if isinstance(dom.value, tuple) else (dom.value,)
        return steps == want
    if isinstance(dom, Choice):
        if any(isinstance(v, tuple) for v in dom.values):
            return steps in dom.values or (len(steps) == 1 and steps[0] in dom.values)
        return all(s in dom.values for s in steps)
    return all(_scalar_in(dom, s) for s in steps)


def space_contains(space: SearchSpace, config: HyperparameterConfig) -> bool:
    for name in ATTRIBUTES:
        dom = space.domains[name]
        v = getattr(config, name)
        ok = _steps_in(dom, v) if name == "step_size" else _scalar_in(dom, v)
        if not ok:
            return False
    return True


# -- files -----------------------------------------------------------------


def load_config(path: str | Path, **kw) -> HyperparameterConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), **kw)


def load_search_space(path: str | Path, **kw) -> SearchSpace:
    return parse_search_space(Path(path).read_text(encoding="utf-8"), **kw)


def save_search_space(space: SearchSpace, path: str | Path) -> None:
    Path(path).write_text(space.to_json() + "\n", encoding="utf-8")


def save_config(config: HyperparameterConfig, path: str | Path) -> None:
    Path(path).write_text(config.to_json(indent=2) + "\n", encoding="utf-8")
