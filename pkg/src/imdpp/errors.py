class ImdppError(Exception):
    """Base class for all package errors."""


class InputError(ImdppError, ValueError):
    pass


class SchemaError(ImdppError, ValueError):
    pass


class BudgetError(ImdppError, ValueError):
    pass


class SizeError(ImdppError, ValueError):
    pass


class ConfigError(ImdppError, ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
