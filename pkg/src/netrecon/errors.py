"""Exception types raised across the package."""


class ReconstructionError(Exception):
    """Base class for all package errors."""


class DimensionError(ReconstructionError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NonFiniteError(ReconstructionError, ValueError):
    def __init__(self, field, index):
        super().__init__(f"{field} has a non-finite entry at index {index}")
        self.field = field
        self.index = index


class PartitionError(ReconstructionError, ValueError):
    pass


class ConfigError(ReconstructionError, ValueError):
    pass


class DegenerateNetworkError(ReconstructionError, ValueError):
    pass


class DivergenceError(ReconstructionError, ArithmeticError):
    def __init__(self, step):
        super().__init__(f"simulation produced a non-finite state at step {step}")
        self.step = step


class UndefinedSNRError(ReconstructionError, ValueError):
    pass


class UnrepresentableTruthError(ReconstructionError, ValueError):
    pass


class RegularizationError(ReconstructionError, ArithmeticError):
    pass


class SingularModelError(ReconstructionError, ArithmeticError):
    pass


class DegenerateCurvatureError(ReconstructionError, ArithmeticError):
    pass


class UndefinedMetricError(ReconstructionError, ValueError):
    pass


class BlockSolveError(ReconstructionError):
    """An inner block solve failed; ``block`` is the index of the offending block."""

    def __init__(self, block, cause):
        super().__init__(f"block {block}: {cause}")
        self.block = block
        self.cause = cause
