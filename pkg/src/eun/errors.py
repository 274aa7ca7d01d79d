"""Exception types shared across the package."""


class EunError(Exception):
    """Base class for all errors raised by this package."""


class PauliParseError(EunError):
    """Malformed Pauli expression text.

    Attributes
    ----------
    position : int
        Offset into the original input string where the problem was found.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DimensionMismatchError(EunError):
    """Operands act on Hilbert spaces of different dimension."""


class NonHermitianError(EunError):
    """An operator violated the hermiticity requirement."""


class ResourceLimitError(EunError):
    """A computation would exceed a configured size or memory limit."""


class ClosureLimitError(ResourceLimitError):
    """Lie closure exceeded max_dim: runaway closure or too-loose tolerance."""


class LeakageError(EunError):
    """A subspace assumed invariant is not preserved by the operator."""


class DecompositionError(EunError):
    """Irrep decomposition failed verification after the retry budget."""


class ConfigError(EunError):
    """Invalid analysis configuration (bad key, value, or file)."""
