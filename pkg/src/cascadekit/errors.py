"""Exception types shared across the toolkit."""


class CascadeError(Exception):
    """Base class for toolkit errors."""


class InputError(CascadeError, ValueError):
    """An argument violates a documented domain constraint."""


class OutsideSupportError(CascadeError, ValueError):
    """A requested cylinder has zero mass under the measure."""


class ResourceGuardError(CascadeError):
    """An exact enumeration would exceed its configured size guard."""

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class PreconditionError(CascadeError, ValueError):
    """The regime assumed by an estimator or formula does not hold."""


class NullPathError(CascadeError):
    """A size-biased spine reached a node where every tilted transition has zero mass."""
