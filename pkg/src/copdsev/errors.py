class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataError(ValueError):
    """Input data violates a table or schema contract."""


class NumericError(ArithmeticError):
    """A numerical routine could not produce a usable result."""
