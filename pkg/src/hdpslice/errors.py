"""Exception types, one per failure class surfaced by the CLI exit codes."""


class HdpError(Exception):
    """Base class for all package errors."""


class DomainError(HdpError, ValueError):
    """An argument is outside its mathematical domain."""


class InvariantError(HdpError):
    """Internal consistency violated (caps vs labels, empty slice sets)."""


class NumericalError(HdpError):
    """A computation produced a non-finite or unusable result."""


class ConfigError(HdpError):
    """Bad or incomplete run configuration."""


class DataFormatError(HdpError):
    """A dataset, labels, or trace file does not parse."""
