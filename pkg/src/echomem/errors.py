"""Exception hierarchy shared by all echomem modules."""


class EchomemError(Exception):
    """Base class for every error raised by this package."""


# hopfield core
class PatternError(EchomemError, ValueError):
    pass


class EmptyPatternListError(PatternError):
    pass


class PatternLengthError(PatternError):
    pass


class ZeroEntryError(PatternError):
    """A training pattern contained a neutral (0) entry."""


class DimensionError(EchomemError, ValueError):
    pass


# wav decoding
class WavError(EchomemError):
    pass


class MalformedWavError(WavError):
    pass


class UnsupportedCodecError(WavError):
    pass


class EmptyWavError(WavError):
    pass


# signal frontend
class SpectrumError(EchomemError, ValueError):
    pass


class FragmentTooShortError(SpectrumError):
    pass


class BandMapError(SpectrumError):
    pass


# pipeline
class TrainingError(EchomemError):
    pass


class SilentExemplarError(TrainingError):
    def __init__(self, label):
        super().__init__(f"exemplar for class {label!r} is silent")
        self.label = label


class DuplicatePatternError(TrainingError):
    def __init__(self, first, second):
        super().__init__(
            f"classes {first!r} and {second!r} encode to the same pattern"
        )
        self.labels = (first, second)


class CapacityError(TrainingError):
    pass


class FragmentError(EchomemError):
    """Wraps any error raised while classifying a single fragment."""

    def __init__(self, source_id, cause):
        super().__init__(f"{source_id}: {cause}")
        self.source_id = source_id
        self.cause = cause


# model files
class ModelFormatError(EchomemError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class ModelTruncatedError(ModelFormatError):
    pass


class ModelChecksumError(ModelFormatError):
    pass


# evaluation
class ScoringError(EchomemError, ValueError):
    pass


class BenchmarkError(EchomemError):
    pass
