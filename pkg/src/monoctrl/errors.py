"""Exception types shared across the package."""


class ControlShapeError(ValueError):
    """Control values or trajectories with mismatched shapes or grids."""


class NumericsError(ArithmeticError):
    """A numeric quantity came out non-finite."""


class PropagationError(RuntimeError):
    """A time step could not be completed (e.g. singular implicit solve)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class ThetaTooSmallError(RuntimeError):
    """The implicit update map failed to contract at the current theta."""


class BracketError(RuntimeError):
    """No valid line-search bracket could be established."""


class ConfigError(ValueError):
    """A run configuration file is missing, malformed, or inconsistent."""
