"""Exception classes raised by dcecavity."""


class DCEError(Exception):
    """Base class for all dcecavity errors."""


class PhysicalityError(DCEError):
    """Covariance matrix violates the uncertainty principle."""


class DomainError(DCEError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class MarginalStabilityError(DCEError):
    """Drift matrix sits on the stability boundary; the Lyapunov solve is singular."""

    def __init__(self, max_re_eig, msg=None):
        self.max_re_eig = float(max_re_eig)
        super().__init__(msg or f"marginally stable drift (max Re eig = {self.max_re_eig:.3e})")


class StepSizeError(DCEError):
    """Local error estimate of a fixed-step integrator exceeded its tolerance."""


class ConvergenceError(DCEError):
    """An iterative procedure did not converge."""


class IntegrationCancelled(DCEError):
    """A long-running integration was cancelled through its token."""


class PoleError(DCEError, ZeroDivisionError):
    """A frequency-domain kernel was evaluated on (or too close to) a pole."""

    def __init__(self, kernel, omega):
        self.kernel = kernel
        self.omega = omega
        super().__init__(f"pole of kernel {kernel!r} at omega={omega!r}")


class IndeterminateRegimeError(DCEError):
    """Coherent/dissipative classification is impossible on the requested band."""


class BoundaryNotFoundError(DCEError):
    """No stability boundary within the searched bracket."""


class InfeasibleResonanceError(DCEError, ValueError):
    """Requested resonance condition cannot be met with physical parameters."""
