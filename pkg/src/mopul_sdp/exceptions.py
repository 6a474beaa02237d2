"""Exception hierarchy for mopul_sdp.

Every error raised deliberately by the package derives from ``MopulError`` and
also from the matching builtin, so callers can catch either.
"""


class MopulError(Exception):
    """Base class for all package errors."""


class DimensionError(MopulError, ValueError):
    """Array shapes do not agree."""

    def __init__(self, what: str, expected: object, got: object):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected {expected}, got {got}")


class SvdFailure(MopulError, ArithmeticError):
    """Singular value decomposition did not converge."""

    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape
        super().__init__(f"svd failure on {shape[0]}x{shape[1]} matrix")


class NotPositiveDefiniteError(MopulError, ValueError):
    def __init__(self, name: str = "Q"):
        super().__init__(f"{name} not positive definite")


class NotSymmetricError(MopulError, ValueError):
    def __init__(self, asymmetry: float):
        self.asymmetry = asymmetry
        super().__init__(f"not symmetric (max |M - M^T| = {asymmetry:.3e})")


class ProblemError(MopulError, ValueError):
    """Problem data is well-typed but does not describe a valid instance."""


class SolverError(MopulError, RuntimeError):
    """Solver contract violated before iterating (numerical breakdown is a status, not this)."""
