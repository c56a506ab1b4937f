"""Exception hierarchy shared by the library and the CLI.

Every error carries a stable ``code`` (the class name) that the CLI puts
into its machine-readable error payload.
"""


class CbmbrError(Exception):
    """Base class for all data errors raised by cbmbr."""

    @property
    def code(self) -> str:
        return type(self).__name__


class DimensionMismatch(CbmbrError, ValueError):
    pass


class NonFiniteValue(CbmbrError, ValueError):
    pass


class EmptySet(CbmbrError, ValueError):
    pass


class KTooLarge(CbmbrError, ValueError):
    pass


class ZeroVector(CbmbrError, ValueError):
    pass


class BadMagic(CbmbrError):
    pass


class TruncatedFile(CbmbrError):
    pass


class TrailingData(CbmbrError):
    pass


class VersionUnsupported(CbmbrError):
    pass


class ScenarioError(CbmbrError, ValueError):
    pass
