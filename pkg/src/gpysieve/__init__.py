"""Truncated divisor-sum sieve weights, singular series and the F2 positivity pipeline."""

from gpysieve.errors import DomainError, ResourceError

__version__ = "0.1.0"

__all__ = ["DomainError", "ResourceError", "__version__"]
