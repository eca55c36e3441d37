"""Exception types shared across the package."""


class MoseacError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(MoseacError, ValueError):
    pass


class ShapeError(MoseacError, ValueError):
    pass


class ContractError(MoseacError, ValueError):
    """An argument violated a documented precondition."""


class NumericError(MoseacError, ArithmeticError):
    """Non-finite values showed up where finite ones are required."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class InsufficientData(MoseacError, ValueError):
    pass


class DegenerateData(MoseacError, ValueError):
    pass


class PairingError(MoseacError, ValueError):
    pass


class CheckpointError(MoseacError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass
