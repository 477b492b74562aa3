"""Shared exception types."""


class InvalidParameter(ValueError):
    """A parameter violates its documented domain.

    Carries the offending field name so CLI error messages can point at it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigError(ValueError):
    """A configuration document is malformed or inconsistent."""
