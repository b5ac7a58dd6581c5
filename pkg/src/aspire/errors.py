"""Exception types shared across the package."""


class AspireError(Exception):
    """Base class for all package errors."""


class InputError(AspireError, ValueError):
    """Malformed or out-of-range input (bad action index, invalid spec, ...)."""


class StructureError(AspireError):
    """A game lacks the structure an operation needs, e.g. a stuck better-reply path."""


class BudgetError(AspireError):
    """An enumeration or table would exceed its configured size budget."""


class EstimationError(AspireError):
    """Monte-Carlo estimation could not resolve enough samples."""
