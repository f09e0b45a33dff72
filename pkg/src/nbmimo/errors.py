"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters passed to a constructor or simulation."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConstructionError(RuntimeError):
    """A code or encoder could not be built from the given inputs.

    Callers usually retry with a different seed.
    """
