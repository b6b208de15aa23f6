"""Exception hierarchy.

``DataError`` covers bad inputs (CLI exit code 2), ``NumericError`` covers
numerical failures (exit code 3).
"""


class AdvTextError(Exception):
    pass


class DataError(AdvTextError, ValueError):
    pass


class NumericError(AdvTextError, ArithmeticError):
    pass


class MalformedRow(DataError):
    pass


class UnknownLabel(DataError):
    pass


class DuplicateId(DataError):
    pass


class EmptyFile(DataError):
    pass


class KTooLarge(DataError):
    pass


class EmptySplit(DataError):
    pass


class DuplicateKey(DataError):
    pass


class BadName(DataError):
    pass


class BadCodepoint(DataError):
    pass


class EmptyTable(DataError):
    pass


class EmptyVocabulary(DataError):
    pass


class IdOutOfRange(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MisalignedIds(DataError):
    pass


class SingleClassLabels(DataError):
    pass


class VocabMismatch(DataError):
    pass


class CheckpointError(DataError):
    pass


class ZeroGradient(NumericError):
    """Gradient norm too small to define a perturbation direction."""


class NonFiniteGradient(NumericError):
    pass
