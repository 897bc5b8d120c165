"""Exception types raised across the package."""


class RisaeError(Exception):
    """Base class for all package errors."""


# numerics
class NonHermitian(RisaeError, ValueError):
    pass


class RankDeficient(RisaeError, ArithmeticError):
    pass


# channel
class EvenScatterers(RisaeError, ValueError):
    pass


class NonUnitModulus(RisaeError, ValueError):
    pass


# autonet
class DimensionMismatch(RisaeError, ValueError):
    pass


class ShapeMismatch(RisaeError, ValueError):
    pass


class InsufficientBatch(RisaeError, ValueError):
    pass


class ZeroInput(RisaeError, ValueError):
    pass


class TapeExhausted(RisaeError, RuntimeError):
    pass


class NonFiniteGradient(RisaeError, FloatingPointError):
    pass


# system / defense
class DivergedLoss(RisaeError, FloatingPointError):
    pass


# attack
class ZeroGradient(RisaeError, ArithmeticError):
    pass


# evaluation
class ConfigError(RisaeError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class CheckpointMismatch(RisaeError, ValueError):
    pass
