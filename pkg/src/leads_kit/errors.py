"""Exception hierarchy shared across the toolkit."""


class LeadsKitError(Exception):
    """Base class for all errors raised by this package."""


class OrderingError(LeadsKitError):
    """Timestamps are not monotone where monotonicity is required."""


class InsufficientDataError(LeadsKitError):
    """An operation needs more samples or channels than are present."""


class DomainError(LeadsKitError):
    """A value is outside its documented domain (non-finite, negative width, ...)."""


class DuplicateTagError(LeadsKitError):
    """A device tag is already registered."""


class TreeStructureError(LeadsKitError):
    """A device-tree operation would violate the tree structure."""


class UnknownTagError(LeadsKitError):
    """A device tag is not in the registry."""


class FramingError(LeadsKitError):
    """A message cannot be framed with the configured separator."""


class TransportError(LeadsKitError):
    """A socket or stream operation failed."""


class CapacityError(LeadsKitError):
    """A bounded container is full and cannot make room."""


class ParseError(LeadsKitError):
    """An input file is malformed; the message carries the line number."""


class ConfigError(LeadsKitError):
    """Configuration is invalid; the message carries the offending key path."""
