"""Exception types shared across the package."""


class InputError(ValueError):
    """User-supplied data violates a documented precondition."""


class NumericError(ArithmeticError):
    """A computation cannot proceed numerically.

    Typical causes: a Cholesky factorization failing on a matrix the contract
    requires to be positive definite, or a quantity that must be nonnegative
    coming out negative beyond roundoff tolerance.
    """
