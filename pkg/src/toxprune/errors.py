"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures without a
lookup table: 2 for usage/validation, 3 for bad data or fingerprints, 4 for
internal invariant breaches.
"""


class ToxPruneError(Exception):
    exit_code = 3


class ValidationError(ToxPruneError, ValueError):
    exit_code = 2


class DataError(ToxPruneError, ValueError):
    exit_code = 3


# tokenizer
class DuplicateToken(DataError):
    pass


class NonContiguousIds(DataError):
    pass


class UnknownMergeSymbol(DataError):
    pass


class InvalidTokenId(DataError, IndexError):
    pass


class EmptyWordList(ValidationError):
    pass


# prunelist
class InvalidFraction(ValidationError):
    pass


class EmptyExpansion(ValidationError):
    pass


class AllSpecialTokens(ValidationError):
    pass


class FingerprintMismatch(DataError):
    pass


class MalformedFile(DataError):
    pass


# lm backends
class EmptyCorpus(ValidationError):
    pass


class InvalidOrder(ValidationError):
    pass


class InvalidAlpha(ValidationError):
    pass


# decoding
class InvalidConfig(ValidationError):
    pass


class NoCandidates(ToxPruneError):
    exit_code = 4


class AllMasked(NoCandidates):
    pass


class InvariantBreach(ToxPruneError, AssertionError):
    exit_code = 4


# metrics / cli
class LengthMismatch(ValidationError):
    pass


class StageError(ToxPruneError):
    """A sweep stage failed; wraps the original error and keeps its exit code."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3 if isinstance(cause, OSError) else 4)
