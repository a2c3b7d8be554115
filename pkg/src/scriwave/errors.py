"""Exception hierarchy shared across the package.

Each class maps to one failure family the CLI translates into an exit
code: configuration (2), violated preconditions (3), marching
instability (4), certificate failure (5).
"""


class ScriwaveError(Exception):
    """Base class for package errors."""


class DomainError(ScriwaveError, ValueError):
    """Invalid domain or grid parameters (nonpositive extents, bad shapes)."""


class AssumptionViolationError(ScriwaveError):
    """A background field violates the admissibility bounds.

    Carries the name of the violated bound (`bound`) and the offending
    value, e.g. bound="1/2 <= V <= 3/2".
    """

    def __init__(self, bound, detail=""):
        self.bound = bound
        msg = f"background assumption violated: {bound}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UnsupportedClassError(ScriwaveError):
    """Metric outside the reduced class (eta or shift nonzero, coupled modes)."""


class UnsupportedOracleError(ScriwaveError):
    """Series oracle asked for a case it cannot certify (tau-dependent coefficients)."""


class CornerCompatibilityError(ScriwaveError):
    """Initial and boundary data disagree at the corner tau=0, z=z0."""

    def __init__(self, mismatch, tol):
        self.mismatch = mismatch
        self.tol = tol
        super().__init__(
            f"corner data mismatch |phi(z0) - psi(0)| = {mismatch:.3e} exceeds tol {tol:.3e}"
        )


class InstabilityError(ScriwaveError):
    """The march produced a non-finite or runaway value; names the step."""

    def __init__(self, step, tau, reason):
        self.step = step
        self.tau = tau
        super().__init__(f"march unstable at step {step} (tau = {tau:.6g}): {reason}")


class ResolutionError(ScriwaveError):
    """Grid too coarse for a requested discrete operation."""


class FitConditioningError(ScriwaveError):
    """Least-squares expansion fit is ill-conditioned; suggests a smaller order."""

    def __init__(self, cond, k):
        self.cond = cond
        self.k = k
        super().__init__(
            f"expansion fit of order k={k} ill-conditioned (cond = {cond:.3e} > 1e12); "
            f"reduce k or refine the grid"
        )


class CertificateError(ScriwaveError):
    """Positivity certificate failed after weight escalation; carries the worst sample."""

    def __init__(self, margin, worst_sample, weights):
        self.margin = margin
        self.worst_sample = worst_sample
        self.weights = weights
        super().__init__(
            f"positivity certificate failed: margin {margin:.3e} at sample {worst_sample} "
            f"with weights {weights}"
        )


class ExpressionError(ScriwaveError, ValueError):
    """Expression syntax error; carries the source position."""

    def __init__(self, message, position):
        self.position = position
        super().__init__(f"{message} (at position {position})")


class ConfigError(ScriwaveError):
    """Run configuration is missing, malformed, or inconsistent."""
