"""Exception types shared across the package."""


class DysarcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(DysarcError):
    """Machines or inputs are mutually inconsistent (e.g. alphabet mismatch)."""


class StructuralError(DysarcError):
    """A machine violates a structural requirement (no start state, cycle, ...)."""


class InputError(DysarcError):
    """User-supplied data is invalid (NaN emission, OOV word, empty reference)."""


class ResourceError(DysarcError):
    """A configured resource cap was exceeded (e.g. path enumeration blow-up)."""


class NoPathError(DysarcError):
    """The decoding graph has no accepting path for the given emission."""
