"""Exception hierarchy shared across the package."""

from __future__ import annotations


class HumanALError(Exception):
    """Base class for every error raised by humanal."""

    def details(self) -> dict:
        return {}


class MissingTruth(HumanALError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        shown = ", ".join(f"{d}/{s}" for d, s in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"no ground truth for {len(self.missing)} sample(s): {shown}{more}")

    def details(self) -> dict:
        return {"missing": [list(k) for k in self.missing]}


class DomainError(HumanALError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class DegenerateTrainingSet(HumanALError):
    def __init__(self, message: str, label: int | None = None):
        super().__init__(message)
        self.label = label


class MaskMismatch(HumanALError):
    pass


class TooFewExamples(HumanALError):
    pass


class InsufficientPopulation(HumanALError):
    pass


class ConfigError(HumanALError, ValueError):
    pass


class ParseError(HumanALError):
    def __init__(self, message: str, path=None, line: int | None = None):
        loc = f"{path}:{line}: " if path is not None and line is not None else ""
        super().__init__(loc + message)
        self.path = None if path is None else str(path)
        self.line = line

    def details(self) -> dict:
        return {"path": self.path, "line": self.line}
