"""Exception hierarchy shared by every pipeline stage."""


class DmdForgeError(Exception):
    pass


# dictionaries
class InvalidRange(DmdForgeError, ValueError):
    pass


class OverflowGuard(DmdForgeError):
    pass


class EmptyDictionary(DmdForgeError):
    pass


class DuplicateEntry(DmdForgeError, ValueError):
    pass


# display generator
class DegenerateImage(DmdForgeError):
    pass


class RoiOutOfBounds(DmdForgeError, ValueError):
    pass


class RoiOverlap(DmdForgeError, ValueError):
    pass


class RoiCountMismatch(DmdForgeError, ValueError):
    pass


class ValueTooLong(DmdForgeError):
    pass


class UnknownFont(DmdForgeError, KeyError):
    pass


class MissingDictionary(DmdForgeError, KeyError):
    pass


# renderer
class ZeroDirection(DmdForgeError, ValueError):
    pass


class VisibilityExhausted(DmdForgeError):
    pass


class MissingFaceIndex(DmdForgeError, ValueError):
    pass


class BackendUnavailable(DmdForgeError):
    pass


class BackendFailure(DmdForgeError):
    def __init__(self, message, log=""):
        super().__init__(message)
        self.log = log


# composer
class NoBackgrounds(DmdForgeError):
    pass


class EmptyMask(DmdForgeError, ValueError):
    pass


class BoxOutOfFrame(DmdForgeError, ValueError):
    pass


class AdapterUnavailable(DmdForgeError):
    pass


class RetriesExhausted(DmdForgeError):
    pass


# labeling
class LabelError(DmdForgeError, ValueError):
    pass


class DanglingForeground(DmdForgeError, KeyError):
    pass


class MissingField(DmdForgeError, ValueError):
    pass


class IndexOutOfRange(DmdForgeError, IndexError):
    pass


# evaluation
class EmptyEvaluation(DmdForgeError, ValueError):
    pass


class NoMeasurementRows(EmptyEvaluation):
    pass


class NoUnitRows(EmptyEvaluation):
    pass


class MalformedCsv(DmdForgeError, ValueError):
    pass


# cli / pipeline
class ConfigError(DmdForgeError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class StageFailure(DmdForgeError):
    def __init__(self, stage, message):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


class DependencyMissing(DmdForgeError):
    pass
