"""Exception hierarchy shared by every module."""


class QEMError(Exception):
    """Base class for all errors raised by :mod:`qem`."""


class InputError(QEMError, ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad parameters)."""


class DomainError(QEMError, ValueError):
    """Evaluation requested outside the domain where the geometry is defined."""


class InfeasibleError(QEMError, ValueError):
    """Inputs that cannot arise from a valid quasi-Einstein structure."""


class StructureRejected(QEMError):
    """A geometry failed the admission checks for a quasi-Einstein structure."""
