"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid run configuration: bad parameters, malformed spec files, unusable inputs."""


class EngineError(Exception):
    """A programming error inside the simulation core, e.g. an invalid move set."""


class ScriptError(Exception):
    """A scripted schedule asked for a move that is not enabled, or ran dry."""


class InvariantViolation(EngineError):
    """A property the model guarantees was observed to fail during a run."""
