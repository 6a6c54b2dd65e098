"""Exception types shared across the package."""


class CarflowError(Exception):
    """Base class for all package errors."""


class CapExceeded(CarflowError):
    """A Fock space or window would exceed the configured size cap."""


class DimensionMismatch(CarflowError, ValueError):
    pass


class NonIsometry(CarflowError, ValueError):
    """Raised by second quantization when ``W*W != I``."""

    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"matrix is not an isometry: ||W*W - I|| = {residual:.3e}")


class NotInCone(CarflowError, ValueError):
    pass


class WindowError(CarflowError, ValueError):
    """The lattice window is too small for the requested translation."""


class ParityError(CarflowError, ValueError):
    """A parity-twisted construction received a non-homogeneous vector."""
