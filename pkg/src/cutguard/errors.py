"""Exception hierarchy shared by every cutguard module."""


class CutguardError(Exception):
    """Base class for all errors raised by this package."""


class BadMagic(CutguardError, ValueError):
    pass


class TruncatedFile(CutguardError, ValueError):
    pass


class NonFiniteValue(CutguardError, ValueError):
    pass


class DimMismatch(CutguardError, ValueError):
    pass


class IndexGap(CutguardError, ValueError):
    pass


class LengthMismatch(CutguardError, ValueError):
    pass


class EmptyHistory(CutguardError, ValueError):
    pass


class TooShort(CutguardError, ValueError):
    pass


class InvalidFeature(CutguardError, KeyError):
    """A feature was referenced before it carries a meaningful value."""

    def __str__(self):
        return Exception.__str__(self)


class ConfigInvalid(CutguardError, ValueError):
    pass


class UnknownPreset(CutguardError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SourceTooShort(CutguardError, ValueError):
    pass


class InvalidSpec(CutguardError, ValueError):
    pass


class EmptyRegion(CutguardError, ValueError):
    pass


class EmptyCorpus(CutguardError, ValueError):
    pass


class NoFreeConstants(CutguardError, ValueError):
    pass
