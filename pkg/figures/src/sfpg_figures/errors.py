class FigureError(Exception):
    """Base class for rendering failures."""


class MissingInput(FigureError):
    """A required artifact is absent from the manifest or the disk."""


class ChecksumMismatch(FigureError):
    """An artifact on disk does not match its manifest checksum."""
