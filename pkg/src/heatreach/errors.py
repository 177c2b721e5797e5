"""Exception types shared across modules."""


class NumericalGuardError(ArithmeticError):
    """A computation was refused because double precision cannot deliver it.

    Raised for instance when the analytic continuation of a heat-evolved
    function would amplify rounding errors beyond a fixed threshold.
    """
