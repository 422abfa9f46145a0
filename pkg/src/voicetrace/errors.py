"""Exception hierarchy. Every operational failure derives from VoicetraceError
so the CLI can map it to a single exit code."""


class VoicetraceError(Exception):
    pass


# -- audio ---------------------------------------------------------------

class MalformedContainer(VoicetraceError):
    """The byte stream is not a well-formed RIFF/WAVE container."""


class UnsupportedFormat(VoicetraceError):
    """Well-formed WAV, but not 16-bit PCM or 32-bit IEEE float."""


# -- corpus preparation --------------------------------------------------

class NumberOutOfRange(VoicetraceError):
    """Integer token exceeds the supported cardinal expansion range."""


class AllSilent(VoicetraceError):
    """Every frame of the buffer fell below the silence threshold."""


class PadOutOfRange(VoicetraceError):
    pass


class SpanOutOfRange(VoicetraceError):
    pass


class OverlappingSpans(VoicetraceError):
    pass


class EmptyManifest(VoicetraceError):
    pass


class ValCountTooLarge(VoicetraceError):
    pass


class MalformedLine(VoicetraceError):
    pass


# -- bispectrum ----------------------------------------------------------

class SignalTooShort(VoicetraceError):
    pass


class NonFiniteSample(VoicetraceError):
    pass


# -- features ------------------------------------------------------------

class GridTooSmall(VoicetraceError):
    pass


class TooFewVectors(VoicetraceError):
    pass


# -- detection -----------------------------------------------------------

class EmptyQuerySet(VoicetraceError):
    pass


class MissingGroundTruth(VoicetraceError):
    pass


class KTooLarge(VoicetraceError):
    pass


# -- synthesis -----------------------------------------------------------

class BinOutOfRange(VoicetraceError):
    pass
