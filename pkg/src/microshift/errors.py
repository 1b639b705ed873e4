"""Exception hierarchy shared by the codec modules."""


class MicroshiftError(Exception):
    """Base class for every codec error."""


class ImageFormatError(MicroshiftError, ValueError):
    """A PGM/PPM file could not be parsed."""


class BadHeaderError(ImageFormatError):
    """Unknown magic number or malformed header tokens."""


class UnsupportedMaxvalError(ImageFormatError):
    """Only 8-bit files (maxval 255) are supported."""


class TruncatedImageError(ImageFormatError):
    """The raster holds fewer bytes than the header promises."""


class ContainerError(MicroshiftError, ValueError):
    """Malformed compressed container or predictor table file."""


class TruncatedStreamError(MicroshiftError, ValueError):
    """A subimage bitstream ended before all samples were decoded."""


class TableMismatchWarning(UserWarning):
    """Container was produced with a different predictor table."""
