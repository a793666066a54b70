"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ShadowError(Exception):
    exit_code = 2


class InputError(ShadowError):
    exit_code = 2


class SchemaError(InputError):
    pass


class LambdaZero(InputError):
    pass


class FlagNotInvariant(InputError):
    pass


class NegativeWeight(InputError):
    pass


class HypothesisViolation(ShadowError):
    exit_code = 3


class DegenerateFamily(HypothesisViolation):
    pass


class NumericalDegeneracy(ShadowError):
    exit_code = 4


class DomainViolation(NumericalDegeneracy):
    """A partial automorphism was applied outside its domain of definition.

    ``index`` is the position of the failing factor in the word (0 = leftmost)
    when the failure happened inside :func:`dhshadow.hecke.apply_word`.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotNormalizable(NumericalDegeneracy):
    pass


class InfeasibleBall(NumericalDegeneracy):
    def __init__(self, message, blocking=None):
        super().__init__(message)
        self.blocking = blocking


class OrderingAmbiguous(NumericalDegeneracy):
    pass


class CoverFailure(NumericalDegeneracy):
    pass


class PathThroughWall(NumericalDegeneracy):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
