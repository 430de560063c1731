"""Exception types shared across the package."""


class FinslermtError(Exception):
    """Base class for all package-specific failures."""


class ZeroVector(FinslermtError, ValueError):
    """Gradient or polar requested at the origin, where the gauge is not differentiable."""


class UnsupportedDimension(FinslermtError, ValueError):
    """Operation implemented only for n in {2, 3}."""


class DegenerateNorm(FinslermtError, ValueError):
    """Norm family flagged unusable for PDE solves (p in {1, inf})."""


class NonConvergence(FinslermtError, RuntimeError):
    """Iterative solver exhausted its iteration budget."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DomainTooSmall(FinslermtError, ValueError):
    """Test-function support does not fit inside the domain."""


class FitUnstable(FinslermtError, RuntimeError):
    """Annulus regression residual too large to trust the fitted constant."""


class ConstantsMismatch(FinslermtError, RuntimeError):
    """Independently derived normalization constants disagree beyond tolerance."""
