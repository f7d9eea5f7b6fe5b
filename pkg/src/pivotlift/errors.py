"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError and file/format problems
exit 2, domain failures (planning, training, solver) exit 1.
"""


class ShapeError(ValueError):
    """Array dimensions incompatible with the declared network/layout."""


class StateError(RuntimeError):
    """Operation called out of order (e.g. backward before forward)."""


class NumericError(ArithmeticError):
    """Non-finite value where a finite one is required."""


class SolverError(RuntimeError):
    """Implicit-step Newton solve failed to converge."""

    def __init__(self, message, residual_norm=None):
        super().__init__(message)
        self.residual_norm = residual_norm


class PlanningFailure(RuntimeError):
    """Planner exhausted its budget before reaching the goal."""

    def __init__(self, message, best_distance=None):
        super().__init__(message)
        self.best_distance = best_distance


class ConfigError(ValueError):
    """Bad configuration value, missing file, or malformed input format."""


class CheckpointError(ConfigError):
    """Checkpoint file unreadable or incompatible with the current config."""


class ParseError(ConfigError):
    """Malformed plan/demo file; carries the offending line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number
