"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain of the model (negative flux, n > N, ...)."""


class DimensionMismatchError(DomainError):
    """Two images, maps or configs disagree on width/height."""


class FrameRangeError(DomainError, IndexError):
    """A frame index or window falls outside the stream."""


class StreamFormatError(ValueError):
    """Base class for `.sbs` decoding problems."""


class BadMagicError(StreamFormatError):
    pass


class InvalidHeaderError(StreamFormatError):
    pass


class TruncatedPayloadError(StreamFormatError):
    pass


class InconsistentSizeError(StreamFormatError):
    pass


class ImageFormatError(ValueError):
    """A PGM/PFM file could not be parsed."""
