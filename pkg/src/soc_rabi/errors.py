"""Exception hierarchy.

``InputError`` covers bad user input (CLI exit code 1); ``NumericalError``
covers solver and eigensolver failures (exit code 2).
"""


class SocRabiError(Exception):
    pass


class InputError(SocRabiError, ValueError):
    pass


class NumericalError(SocRabiError, RuntimeError):
    pass


class NonConvergence(NumericalError):
    """The displacement solver ran out of iterations.

    The best iterate is kept on ``solution`` so callers can report it.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class EigensolverError(NumericalError):
    pass


class TruncationTooSmall(InputError):
    pass


class BranchCrossed(NumericalError):
    """The finite-difference stencil straddles a ground-state level crossing."""

    def __init__(self, message, branches=()):
        super().__init__(message)
        self.branches = tuple(branches)


class NoSignChange(InputError):
    pass
