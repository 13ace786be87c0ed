"""Exception hierarchy.

Every failure mode of the library raises a subclass of :class:`BonusRuinError`
so callers (and the CLI) can map errors to exit codes without string matching.
"""


class BonusRuinError(Exception):
    """Base class for all library errors."""


class ConfigError(BonusRuinError, ValueError):
    """Invalid parameters or run configuration (CLI exit code 2)."""


class DegenerateParameterError(BonusRuinError):
    """A transform was requested exactly at a removable singularity.

    The limit value is never silently substituted; callers that want the
    limit must perturb the argument themselves.
    """


class MgfDomainError(BonusRuinError):
    """Moment generating function evaluated outside its domain.

    Carries a human-readable description of the violated constraint.
    """

    def __init__(self, constraint: str):
        super().__init__(f"m.g.f. domain violation: {constraint}")
        self.constraint = constraint


class WrongRegimeError(BonusRuinError):
    """Operation only defined for the other claim-tail regime (exit code 3)."""


class NoAdjustmentCoefficientError(BonusRuinError):
    """No positive decay exponent exists (net profit condition fails)."""


class DomainExhaustedError(BonusRuinError):
    """Root bracketing reached the edge of the m.g.f. domain without a sign change."""


class BoundUndefinedError(BonusRuinError):
    """Closed-form tail-constant bound has a nonpositive denominator."""


class ConstantUndefinedError(BonusRuinError):
    """Geometric moment in a tail constant diverges for the requested tilt."""


class InvalidTiltError(BonusRuinError):
    """Tilted transition probabilities fall outside (0, 1)."""


class InconsistentKappaError(BonusRuinError):
    """Supplied decay exponent does not solve the cycle m.g.f. equation."""


class StepCapExceededError(BonusRuinError):
    """A tilted path exceeded the hard step cap (exit code 4).

    Under the tilted measure every path hits the target level with
    probability one, so an extremely long path signals an inconsistent tilt.
    """


class OracleDivergedError(BonusRuinError):
    """Fixed-point iteration of the integral-equation solver did not converge."""


class LowInformationWarning(UserWarning):
    """Estimate based on zero observed events; standard error uninformative."""


class AsymptoticRangeWarning(UserWarning):
    """Asymptotic formula evaluated where it exceeds 1; value clamped."""


class HeavyTailWarning(UserWarning):
    """Sample moments suggest the Monte Carlo mean may have infinite variance."""
