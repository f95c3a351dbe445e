"""lakefuse: discover, align, integrate, and analyze related CSV lake tables."""

__version__ = "0.1.0"
