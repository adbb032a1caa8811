"""Exception types raised by the numerical routines."""


class KinshockError(Exception):
    """Base class for all library errors."""


class ModelError(KinshockError):
    """A model cannot be built or violates a structural requirement."""


class NonConvergence(KinshockError):
    def __init__(self, iterations, residual, what="Newton iteration"):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{what} did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


class NonSimpleEigenvalue(KinshockError):
    pass


class ZeroEigenvalue(KinshockError):
    pass


class ReductionError(KinshockError):
    """The canonical-form reduction failed one of its structural checks."""

    def __init__(self, message, residuals=None):
        self.residuals = dict(residuals or {})
        super().__init__(message)


class ContractionFailure(KinshockError):
    def __init__(self, factor, iterations):
        self.factor = factor
        self.iterations = iterations
        super().__init__(
            f"fixed-point map is not contracting (factor {factor:.3g} "
            f"after {iterations} iterations)"
        )


class RadiusExceeded(KinshockError):
    pass


class NoSolution(KinshockError):
    pass


class NotGenuinelyNonlinear(KinshockError):
    pass


class NoConnection(KinshockError):
    pass


class ShootingFailure(KinshockError):
    pass


class ConfigError(KinshockError):
    """Invalid run configuration; ``problems`` lists every violation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
