"""Exception hierarchy shared by all kernel modules."""


class KernelError(Exception):
    """Base class for all errors raised by the kernel."""


class DimensionMismatch(KernelError):
    """Operands live over different coordinate systems."""


class UnknownCoordinate(KernelError):
    """A coordinate index or name does not exist in the dimension."""


class NonHomogeneous(KernelError):
    """An operation requiring parity-homogeneous input got a mixed one."""


class SingularDimension(KernelError):
    """The superdimension n - m hits a singular value of the formula."""


class SingularWeight(KernelError):
    """The density weight hits a singular value of the formula."""


class NotInvertible(KernelError):
    """A supermatrix or even element has a non-invertible body."""


class Degenerate(KernelError):
    """A tensor required to be nondegenerate has a singular body matrix."""


class WrongWeight(KernelError):
    """A bracket triple has an inadmissible weight for the requested check."""


class WrongParity(KernelError):
    """A bracket triple has the wrong parity for the requested check."""


class ParseError(KernelError):
    """Malformed expression or scenario text; carries line/column."""

    def __init__(self, message, line=1, column=0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ValidationError(KernelError):
    """A scenario or component table violates a structural invariant."""
