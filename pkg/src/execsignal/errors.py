"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario or config file failed validation. CLI maps this to exit 2."""


class NumericError(RuntimeError):
    """A numerical routine failed to converge or left tolerance. CLI exit 3."""
