"""Exception types shared across the package."""


class DrsLabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(DrsLabError, ValueError):
    """Invalid configuration: bad layer dims, degenerate batches, malformed config files."""


class ContractError(DrsLabError, RuntimeError):
    """A caller broke an internal protocol, e.g. shape mismatch or a logit above the tracked max."""


class NumericError(DrsLabError, ArithmeticError):
    """Non-finite values showed up where finite math is required."""


class SupportError(DrsLabError, ValueError):
    """Density-ratio query at a point where the proposal density vanishes."""


class EnvelopeError(DrsLabError, ValueError):
    """Rejection-sampling envelope violated: target density exceeds bound times proposal."""


class LowAcceptanceError(DrsLabError, RuntimeError):
    """Sampling aborted: realized acceptance rate fell below the configured floor."""


class TrainingDivergedError(DrsLabError, RuntimeError):
    """GAN training produced a non-finite loss."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step
