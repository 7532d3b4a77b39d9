"""Exception types. The CLI maps UsageError to exit 1, everything else to 2."""


class StripekitError(Exception):
    """Base for all toolkit errors (data errors; CLI exit code 2)."""


class UsageError(StripekitError):
    """Bad invocation or config (CLI exit code 1)."""


class DataError(StripekitError):
    """Invalid tensor contents, dimensions, or value ranges."""


class ImageReadError(StripekitError):
    """File missing, unreadable, or not decodable as an image."""


class UnsupportedImageError(StripekitError):
    """Readable file, but a pixel format outside the supported set."""


class TensorFormatError(StripekitError):
    """Malformed binary tensor file (bad magic/version/dims/payload)."""
