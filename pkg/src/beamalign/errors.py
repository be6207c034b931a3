class ConfigurationError(ValueError):
    """Raised for invalid parameters; ``field`` names the offending setting."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ProtocolViolation(RuntimeError):
    """A policy or tree operation was used outside its contract."""
