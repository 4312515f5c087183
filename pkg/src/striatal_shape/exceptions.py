"""Exception hierarchy.

Every error raised on bad input derives from :class:`StriatalShapeError`
(and from :class:`ValueError`, so generic callers can catch that instead).
"""


class StriatalShapeError(ValueError):
    """Base class for all input/contract errors raised by this package."""


# volume_io
class UnsupportedDatatype(StriatalShapeError):
    pass


class MalformedHeader(StriatalShapeError):
    pass


class TruncatedData(StriatalShapeError):
    pass


class LengthMismatch(StriatalShapeError):
    pass


class MissingHeader(StriatalShapeError):
    pass


class NonFiniteData(StriatalShapeError):
    pass


class BadRow(StriatalShapeError):
    def __init__(self, index, reason=""):
        self.index = index
        super().__init__(f"bad row {index}" + (f": {reason}" if reason else ""))


class DuplicateSubject(StriatalShapeError):
    pass


# preprocess
class ConstantInput(StriatalShapeError):
    pass


class WindowOutOfRange(StriatalShapeError):
    pass


class ConstantSlice(StriatalShapeError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"slice {index} is constant")


# segmentation
class TooFewComponents(StriatalShapeError):
    pass


class AmbiguousSides(StriatalShapeError):
    pass


class RegionTooSmall(StriatalShapeError):
    pass


# shape / surface
class DegenerateRegion(StriatalShapeError):
    pass


class ZeroDenominator(StriatalShapeError):
    pass


class DegenerateAxis(StriatalShapeError):
    pass


class RankDeficient(StriatalShapeError):
    pass


class TooFewPixels(StriatalShapeError):
    pass


# stats
class EmptySample(StriatalShapeError):
    pass


class EmptyGroup(StriatalShapeError):
    pass


# classify
class SingleClass(StriatalShapeError):
    pass


class NonConvergence(StriatalShapeError):
    pass


class EmptyTest(StriatalShapeError):
    pass


class TooFewPerClass(StriatalShapeError):
    pass


# phantom
class InvalidSpec(StriatalShapeError):
    pass
