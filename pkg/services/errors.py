# services/errors.py


class PackingError(Exception):
    """Base class for every error raised by the packing services"""


class DegenerateInput(PackingError):
    pass


class UnsupportedSeries(PackingError):
    pass


class PatternNotRepresentable(PackingError):
    def __init__(self, message: str, reason: str = ""):
        super().__init__(message)
        self.reason = reason or message


class InvalidVariant(PackingError):
    pass


class NotApplicable(PackingError):
    pass


class NoConvergence(PackingError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        # best-so-far PackResult, if any
        self.result = result


class InvalidStart(PackingError):
    pass


class StaleEvent(PackingError):
    pass


class SingularSystem(PackingError):
    pass


class ContactMismatch(PackingError):
    pass


class MissingChallenger(PackingError):
    pass


class ParseError(PackingError):
    pass


class ValidationError(PackingError):
    pass
