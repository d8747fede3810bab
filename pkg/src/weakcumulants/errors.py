"""Exception types shared across the package."""


class SizeError(ValueError):
    """A problem size exceeds a supported range or the memory budget."""


class DegeneratePostselectionError(ValueError):
    """Pre- and post-selection (almost) orthogonal, so weak values blow up."""

    def __init__(self, overlap: float, threshold: float):
        self.overlap = overlap
        self.threshold = threshold
        super().__init__(
            f"post-selection amplitude |<psi_f|...|psi_i>| = {overlap:.3e} "
            f"is below threshold {threshold:.1e}"
        )


class SingularEtaError(ZeroDivisionError):
    """The lowering-operator constant eta (or theta) has a vanishing denominator."""
