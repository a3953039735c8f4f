"""Exception types raised by the filtering and checking routines."""


class ZeroMass(ArithmeticError):
    """A measure that must be normalized has zero, negative or non-finite mass."""

    def __init__(self, message="total mass is not positive and finite", step=None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class GridMismatch(ValueError):
    """Two grid objects that must share nodes do not."""


class DomainError(ValueError):
    """A parameter lies outside the region where the computation is defined."""


class KappaNonpositive(DomainError):
    """The curvature constant of the Gaussian-tail drift is not positive."""

    def __init__(self, alpha, c, c_range):
        lo, hi = c_range
        super().__init__(
            f"kappa(alpha={alpha}, c={c}) <= 0; admissible c lies in ({lo:.6g}, {hi:.6g})"
        )
        self.alpha = alpha
        self.c = c
        self.c_range = c_range


class GammaTooSmall(DomainError):
    """The observed frequency of the good set does not exceed 2/3."""


class DegenerateFit(ValueError):
    """Too few usable points for a log-linear rate fit."""
