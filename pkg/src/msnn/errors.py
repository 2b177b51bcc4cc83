"""Exception hierarchy shared by every msnn module."""


class MsnnError(Exception):
    """Base class for all errors raised by msnn."""


class FormatError(MsnnError, ValueError):
    pass


class TruncationError(FormatError):
    pass


class RangeError(MsnnError, ValueError):
    pass


class UnsupportedFormat(FormatError):
    pass


class TooShortError(MsnnError, ValueError):
    pass


class NumericsError(MsnnError, FloatingPointError):
    pass


class ShapeError(MsnnError, ValueError):
    pass


class TraceError(MsnnError, ValueError):
    pass


class ConfigError(MsnnError, ValueError):
    pass


class MaskError(MsnnError, ValueError):
    pass


class GridError(MsnnError, ValueError):
    pass


class DataError(MsnnError):
    pass


class StateError(MsnnError):
    pass


class CheckpointError(MsnnError):
    pass
