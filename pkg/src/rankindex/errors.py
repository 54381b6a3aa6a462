"""Exception types shared across the library and the CLI."""


class UsageError(ValueError):
    """Caller violated a precondition (bad argument, mismatched dimensions)."""


class DataError(ValueError):
    """Input data is malformed (unreadable file, bad magic, empty table)."""
