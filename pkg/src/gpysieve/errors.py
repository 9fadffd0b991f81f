"""Exception types shared by every module.

The CLI maps these onto exit codes: DomainError -> 2, ResourceError -> 3.
"""


class DomainError(ValueError):
    """An argument violates an operation's precondition."""


class ResourceError(RuntimeError):
    """A configured memory or enumeration cap would be exceeded."""
