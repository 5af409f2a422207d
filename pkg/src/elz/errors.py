"""Exception types shared across the library."""


class ElzError(Exception):
    """Base class for all library errors."""


class ConfigError(ElzError):
    """Invalid configuration value or combination of values."""


class DomainError(ElzError):
    """Operation invoked outside its domain (bad region, bad argument)."""


class InconsistencyError(ElzError):
    """An internal pipeline invariant was broken, e.g. a candidate whose
    safety window contains forbidden pixels reached the scoring stage."""


class FormatError(ElzError):
    """Malformed or unreadable data file."""
