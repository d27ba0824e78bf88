"""Exception and warning types raised across the package."""


class SubclustError(Exception):
    """Base class for all package errors."""


class RankDeficient(SubclustError, ValueError):
    def __init__(self, effective_rank, required=None):
        self.effective_rank = int(effective_rank)
        self.required = required
        msg = f"matrix has numerical rank {self.effective_rank}"
        if required is not None:
            msg += f", need {required}"
        super().__init__(msg)


class AmbientMismatch(SubclustError, ValueError):
    pass


class EmptyInput(SubclustError, ValueError):
    pass


class DimensionTooLarge(SubclustError, ValueError):
    pass


class TooManyCenters(SubclustError, ValueError):
    pass


class MissingClassLabels(SubclustError, ValueError):
    pass


class LengthMismatch(SubclustError, ValueError):
    pass


class ClassTooSmall(SubclustError, ValueError):
    pass


class BadMagic(SubclustError, ValueError):
    pass


class TruncatedFile(SubclustError, ValueError):
    pass


class CountMismatch(SubclustError, ValueError):
    pass


class ParseError(SubclustError, ValueError):
    def __init__(self, line, detail=""):
        self.line = line
        super().__init__(f"line {line}: {detail}" if detail else f"line {line}")


class InconsistentWidth(SubclustError, ValueError):
    def __init__(self, line, expected, got):
        self.line = line
        super().__init__(f"line {line}: expected {expected} features, got {got}")


class DegenerateSpectrum(UserWarning):
    """The k-th and (k+1)-th singular values tie, so the prototype is not unique."""
