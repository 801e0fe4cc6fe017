"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) so the
CLI can report it as JSON. :class:`ValidationError` subclasses map to exit
status 1, everything else under :class:`LlmHpoError` maps to exit status 2.
"""
from __future__ import annotations

from typing import Any


class LlmHpoError(Exception):
    """Base class for all errors raised by this package."""

    exit_status = 2

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": str(self)}


class ValidationError(LlmHpoError, ValueError):
    exit_status = 1


class RuntimeFailure(LlmHpoError, RuntimeError):
    exit_status = 2


# -- config model ----------------------------------------------------------


class MissingField(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"missing field {name!r}")
        self.name = name


class InvalidValue(ValidationError):
    def __init__(self, name: str, reason: str):
        super().__init__(f"invalid value for {name!r}: {reason}")
        self.name = name
        self.reason = reason


class InvalidDomain(ValidationError):
    def __init__(self, name: str, reason: str):
        super().__init__(f"invalid domain for {name!r}: {reason}")
        self.name = name
        self.reason = reason


class RangeOrderError(InvalidDomain):
    def __init__(self, name: str, lo: Any, hi: Any):
        super().__init__(name, f"lower bound {lo!r} must be below upper bound {hi!r}")


class UnknownFieldWarning(UserWarning):
    pass


# -- prompting -------------------------------------------------------------


class EmptyField(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"field {name!r} must be a nonempty string")
        self.name = name


class NoTrials(ValidationError):
    def __init__(self):
        super().__init__("refinement prompt needs at least one completed trial")


# -- llm client ------------------------------------------------------------


class AuthMissing(ValidationError):
    def __init__(self, detail: str = "LLMHPO_API_KEY is not set"):
        super().__init__(detail)


class EndpointError(RuntimeFailure):
    def __init__(self, status: int | None, detail: str = ""):
        msg = f"endpoint returned status {status}" if status is not None else "endpoint unreachable"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)
        self.status = status


class ReplayExhausted(RuntimeFailure):
    def __init__(self, index: int, available: int):
        super().__init__(f"replay call #{index} requested but only {available} fixture(s) exist")
        self.index = index
        self.available = available


class NoJsonFound(ValidationError):
    def __init__(self):
        super().__init__("no JSON object found in response")


# -- statistics ------------------------------------------------------------


class TooFewValues(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class TooFewGroups(ValidationError):
    pass


class DegenerateGroups(ValidationError):
    pass


class AllTied(ValidationError):
    pass


class BothEmpty(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


# -- optimizer / objectives --------------------------------------------------


class ObjectiveFailure(RuntimeFailure):
    def __init__(self, index: int, cause: BaseException | str, trials: list | None = None):
        super().__init__(f"objective failed at trial {index}: {cause}")
        self.index = index
        self.cause = cause
        self.trials = list(trials or [])


class SpawnFailure(RuntimeFailure):
    pass


class NonZeroExit(RuntimeFailure):
    def __init__(self, returncode: int, stderr: str):
        super().__init__(f"command exited with status {returncode}: {stderr.strip()[:500]}")
        self.returncode = returncode
        self.stderr = stderr


class MalformedOutput(RuntimeFailure):
    pass


# -- runner ----------------------------------------------------------------


class PlanError(ValidationError):
    pass


class ArmFailure(RuntimeFailure):
    def __init__(self, name: str, cause: BaseException | str):
        super().__init__(f"arm {name!r} failed: {cause}")
        self.name = name
        self.cause = cause


class IoFailure(RuntimeFailure):
    def __init__(self, path: Any, cause: BaseException | str = ""):
        super().__init__(f"cannot write {path}: {cause}")
        self.path = path
