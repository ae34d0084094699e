"""Exception types shared across the package."""


class RpfgcnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(RpfgcnError, ValueError):
    """Array shape or size does not satisfy an operation's contract."""


class ConvergenceError(RpfgcnError, RuntimeError):
    """An iterative solver hit its iteration cap before converging."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class DataError(RpfgcnError, ValueError):
    """Dataset generation, loading, or splitting violated a contract."""


class GraphError(RpfgcnError, ValueError):
    """Graph construction parameters or graph state are invalid."""


class SpectralError(RpfgcnError, ValueError):
    """Spectral diagnostic input is unusable (e.g. curve too short)."""


class TrainingError(RpfgcnError, RuntimeError):
    """Training aborted; carries the epoch at which it happened."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class ConfigError(RpfgcnError, ValueError):
    """Experiment configuration is malformed or inconsistent."""


class RunError(RpfgcnError, RuntimeError):
    """An experiment cell failed; message carries (dataset, builder, seed)."""
