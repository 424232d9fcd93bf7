"""Path-aware traffic engineering over PolKA polynomial source routing."""

__version__ = "0.1.0"
