"""Exception hierarchy shared by every r2p2p module."""


class R2P2PError(Exception):
    """Base class for all r2p2p failures."""


class ValidationError(R2P2PError):
    pass


class InvalidAdvertisement(ValidationError):
    """An advertisement document could not be turned into a valid value."""


class MalformedXml(InvalidAdvertisement):
    pass


class MissingField(InvalidAdvertisement):
    pass


class InvalidField(InvalidAdvertisement):
    """A field is present but violates its invariant, or is not allowed at all."""


class InvalidRating(InvalidAdvertisement):
    pass


class InvalidCode(InvalidRating):
    pass


class InvalidCitations(InvalidRating):
    pass


class UnknownEntity(ValidationError):
    pass


class UnknownDocType(ValidationError):
    pass


class Unauthorized(R2P2PError):
    pass


class NotFound(R2P2PError):
    pass


class IntegrityError(R2P2PError):
    """Stored content no longer matches its advertised digest."""


class ProtocolError(R2P2PError):
    pass


class ConfigError(R2P2PError):
    pass


class ConflictWarning(UserWarning):
    """Two copies of one advertisement share a revision but differ in bytes."""
