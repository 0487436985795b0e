"""Exception hierarchy for the snorebio toolkit.

Every error raised on purpose by this package derives from SnoreBioError,
and additionally from the closest builtin category so callers can catch
either way (e.g. ``except FileNotFoundError`` still works).
"""


class SnoreBioError(Exception):
    """Base class for all snorebio errors."""


class MissingFileError(SnoreBioError, FileNotFoundError):
    """A referenced file does not exist."""


class ManifestParseError(SnoreBioError, ValueError):
    """Manifest file is malformed."""


class DuplicateUtteranceError(ManifestParseError):
    """Two manifest rows share the same (subject_id, utterance_index)."""


class BadSampleRateError(SnoreBioError, ValueError):
    """Declared or decoded sample rate is invalid or mismatched."""


class UnsupportedWavError(SnoreBioError, ValueError):
    """WAV file is not 16-bit signed PCM mono."""


class NoEligibleSubjectsError(SnoreBioError, ValueError):
    """No subject in the manifest has enough utterances to split."""


class ClipTooShortError(SnoreBioError, ValueError):
    """Audio clip is shorter than one analysis window."""


class EmptyFeatureMatrixError(SnoreBioError, ValueError):
    """A feature matrix with zero frames was supplied."""


class TooFewFramesError(SnoreBioError, ValueError):
    """Fewer training frames than mixture components."""


class TooFewSubjectsError(SnoreBioError, ValueError):
    """Network training needs at least two subjects."""


class EmptyDevelopmentSetError(SnoreBioError, ValueError):
    """Development set contains no usable utterances."""


class EmptyInputError(SnoreBioError, ValueError):
    """An aggregation step received no inputs."""


class NormalizationDegenerateError(SnoreBioError, ArithmeticError):
    """A vector with (near-)zero norm cannot be L2-normalized."""


class EmptyRegistryError(SnoreBioError, ValueError):
    """Recognition requested against a registry with no enrolled subjects."""


class UnknownSubjectError(SnoreBioError, KeyError):
    """Claimed subject is not enrolled in the registry."""


class NonUnitInputError(SnoreBioError, ValueError):
    """Cosine similarity requires unit-norm embeddings."""


class EmptyScoresError(SnoreBioError, ValueError):
    """ROC/EER computation needs non-empty genuine and impostor score lists."""
