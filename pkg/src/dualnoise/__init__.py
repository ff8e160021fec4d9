"""Deep-ensemble training under joint image and label noise."""

__version__ = "0.1.0"
