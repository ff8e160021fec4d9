"""Exception types shared across the package."""


class DualNoiseError(Exception):
    pass


class ShapeError(DualNoiseError, ValueError):
    pass


class ConfigError(DualNoiseError, ValueError):
    """Invalid configuration. ``errors`` holds one message per offending field."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NumericError(DualNoiseError, ArithmeticError):
    pass


class UndefinedMetricError(DualNoiseError, ValueError):
    pass
