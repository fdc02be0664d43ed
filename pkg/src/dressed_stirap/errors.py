"""Exception types shared across the package."""


class DressedStirapError(Exception):
    """Base class for all package-specific errors."""


class DimMismatch(DressedStirapError):
    """Operands have incompatible matrix/vector dimensions."""


class NotHermitian(DressedStirapError):
    """A matrix expected to be Hermitian is not (within tolerance)."""


class DegenerateDressing(DressedStirapError):
    """Dressed states are undefined because Omega0 = delta = 0."""


class ZeroDetuning(DressedStirapError):
    """Effective two-level reduction requires a nonzero dipole detuning."""


class NegativeRadicand(DressedStirapError):
    """Inverting the effective two-level model hit a negative square root."""


class DegenerateEnvelope(DressedStirapError):
    """Both optical envelopes vanish where a finite value is required."""


class CapExceeded(DressedStirapError):
    """A pulse envelope exceeds the configured amplitude cap.

    Carries the offending peak value (rad/us) and the time (us) at which
    it occurs.
    """

    def __init__(self, peak: float, t_at_peak: float, cap: float):
        self.peak = peak
        self.t_at_peak = t_at_peak
        self.cap = cap
        super().__init__(
            f"envelope peak {peak:.6g} rad/us at t = {t_at_peak:.6g} us "
            f"exceeds cap {cap:.6g} rad/us"
        )


class StepSizeUnderflow(DressedStirapError):
    """The adaptive integrator demanded a step below the minimum step size."""


class ToleranceNotMet(DressedStirapError):
    """Final trace drift of a propagation exceeded the acceptable bound."""


class ConfigError(DressedStirapError):
    """A run configuration file or value is malformed."""
