"""Exception hierarchy.

User-facing problems (bad scenario files, bad strategy names, bad CSV input)
derive from :class:`FaultscapeError`; the CLI maps them to exit code 1.
:class:`SimulationFault` signals a simulator bug and maps to exit code 2.
"""


class FaultscapeError(Exception):
    pass


class ConfigError(FaultscapeError):
    """A scenario document failed validation at ``path``."""

    kind = "config"

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{self.kind} error at {path}: {message}")


class SchemaError(ConfigError):
    kind = "schema"


class ConfigReferenceError(ConfigError):
    kind = "reference"


class ConstraintError(ConfigError):
    kind = "constraint"


class UnknownStrategyError(FaultscapeError, KeyError):
    def __init__(self, name, available):
        self.name = name
        self.available = sorted(available)
        super().__init__(name)

    def __str__(self):
        return f"unknown strategy {self.name!r}; available: {', '.join(self.available)}"


class ChaosConflictError(FaultscapeError):
    pass


class FaultNotActiveError(FaultscapeError):
    pass


class ActionRejected(FaultscapeError):
    """A remediation action was invalid or conflicted with a running transition."""


class EmptySeriesError(FaultscapeError, ValueError):
    pass


class SliInputError(FaultscapeError):
    pass


class SimulationFault(RuntimeError):
    """Internal invariant breach inside the engine (a simulator bug, never user error)."""
