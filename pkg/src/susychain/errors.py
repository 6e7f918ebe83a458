"""Exception hierarchy shared by all susychain modules."""


class SusychainError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SusychainError):
    """Invalid user-supplied configuration (bad field, missing file, ...)."""


class NonHermitianError(SusychainError):
    """A matrix that must be Hermitian is not, beyond tolerance."""

    def __init__(self, row, col, asymmetry):
        self.row = row
        self.col = col
        self.asymmetry = asymmetry
        super().__init__(
            f"entries ({row},{col})/({col},{row}) violate hermiticity "
            f"by {asymmetry:.3e}"
        )


class NumericalError(SusychainError):
    """Non-finite data, failed convergence, or other numeric breakdown."""


class SingularFrameError(NumericalError):
    """det U (or a potential denominator) vanishes somewhere on the grid."""

    def __init__(self, x, value, what="det U"):
        self.x = x
        self.value = value
        super().__init__(f"{what} too close to zero at x={x:.6g} (|{what}|={value:.3e})")


class DegenerateDispersionError(SusychainError):
    """Flat-band tuning is ill-posed because the AB dispersion is degenerate."""
