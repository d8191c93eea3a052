"""Exception hierarchy shared by every module."""


class SpikedDetectError(Exception):
    """Base class for all package errors."""


class ValidationError(SpikedDetectError, ValueError):
    """Malformed input: wrong shape, asymmetric matrix, too few samples."""


class DomainError(SpikedDetectError, ValueError):
    """A parameter lies outside the region where a formula is defined."""


class NumericalError(SpikedDetectError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class LogDetShiftError(DomainError):
    """An eigenvalue sits at or above the log-determinant shift of the LSS statistic.

    The offending eigenvalue and the shift are kept so that callers (the Monte
    Carlo harness in particular) can flag the trial instead of crashing.
    """

    def __init__(self, eigenvalue, shift):
        self.eigenvalue = float(eigenvalue)
        self.shift = float(shift)
        super().__init__(
            f"eigenvalue {self.eigenvalue:.6g} is not below the log-det shift "
            f"{self.shift:.6g}; the data look supercritical, use PCA instead"
        )
