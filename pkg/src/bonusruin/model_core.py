"""Model parameterization and closed-form building blocks.

The risk process has premium rate 1 and two inter-arrival laws: after a gap
of at most ``xi`` the next gap is Exp(``lambda1``), after a longer gap it is
Exp(``lambda2``).  Claim sizes are i.i.d. Exponential or Pareto.  The state of
the embedded chain records which side of ``xi`` the previous gap fell on.

Everything here is a pure function of its inputs and safe to call
concurrently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, DegenerateParameterError, MgfDomainError

Side = Literal["below", "above"]


class StateLabel(enum.IntEnum):
    """State of the embedded chain at a claim instant.

    SHORT_GAP: the gap that just ended was <= xi (next gap ~ Exp(lambda1)).
    LONG_GAP: the gap exceeded xi (next gap ~ Exp(lambda2)).
    """

    SHORT_GAP = 1
    LONG_GAP = 2


@dataclass(frozen=True)
class Exponential:
    """Exponential claim sizes with rate ``beta`` (mean 1/beta)."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ConfigError(f"claim rate beta must be positive and finite, got {self.beta}")

    @property
    def mean(self) -> float:
        return 1.0 / self.beta

    def tail(self, y):
        """P(Y > y)."""
        return np.exp(-self.beta * np.asarray(y, dtype=float))

    def density(self, y):
        return self.beta * np.exp(-self.beta * np.asarray(y, dtype=float))

    def mgf(self, theta: float) -> float:
        if theta >= self.beta:
            raise MgfDomainError(f"theta={theta} >= beta={self.beta} for exponential claims")
        return self.beta / (self.beta - theta)

    def ppf(self, u):
        """Inverse CDF; accepts scalars or arrays in [0, 1)."""
        return -np.log1p(-np.asarray(u, dtype=float)) / self.beta


@dataclass(frozen=True)
class Pareto:
    """Shifted Pareto (Lomax) claims: P(Y > y) = (1 + y/sigma)^-alpha.

    Requires ``alpha > 1`` so the mean sigma/(alpha-1) is finite.  No moment
    generating function exists for positive arguments.
    """

    alpha: float
    sigma: float

    def __post_init__(self):
        if not (self.alpha > 1.0 and math.isfinite(self.alpha)):
            raise ConfigError(f"Pareto shape alpha must exceed 1 for a finite mean, got {self.alpha}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ConfigError(f"Pareto scale sigma must be positive, got {self.sigma}")

    @property
    def mean(self) -> float:
        return self.sigma / (self.alpha - 1.0)

    def tail(self, y):
        return np.power(1.0 + np.asarray(y, dtype=float) / self.sigma, -self.alpha)

    def density(self, y):
        return (self.alpha / self.sigma) * np.power(
            1.0 + np.asarray(y, dtype=float) / self.sigma, -self.alpha - 1.0
        )

    def mgf(self, theta: float) -> float:
        if theta > 0.0:
            raise MgfDomainError("Pareto claims have no m.g.f. at theta > 0")
        if theta == 0.0:
            return 1.0
        val, _ = quad(lambda y: math.exp(theta * y) * (self.alpha / self.sigma)
                      * (1.0 + y / self.sigma) ** (-self.alpha - 1.0),
                      0.0, math.inf)
        return val

    def ppf(self, u):
        return self.sigma * (np.power(1.0 - np.asarray(u, dtype=float), -1.0 / self.alpha) - 1.0)


ClaimDistribution = Union[Exponential, Pareto]


@dataclass(frozen=True)
class ModelParams:
    """The five-number model: two gap rates, the window length, and claims.

    ``lambda1`` is the gap rate after short gaps (state 1), ``lambda2`` the
    rate after long gaps (state 2).  The premium rate is fixed at 1; rescale
    time and money units instead of introducing a premium parameter.
    """

    lambda1: float
    lambda2: float
    xi: float
    claims: ClaimDistribution

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "xi"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0.0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        if not isinstance(self.claims, (Exponential, Pareto)):
            raise ConfigError(f"claims must be Exponential or Pareto, got {type(self.claims).__name__}")

    def gap_rate(self, state: StateLabel) -> float:
        return self.lambda1 if state == StateLabel.SHORT_GAP else self.lambda2


def restricted_laplace(rate: float, theta: float, xi: float, side: Side) -> float:
    """Restricted Laplace transform of an Exp(rate) gap.

    Returns E[e^{-theta*T}; T <= xi] for ``side="below"`` and
    E[e^{-theta*T}; T > xi] for ``side="above"``.  The two sides add up to
    rate/(rate+theta), the unrestricted transform.

    Raises:
        DegenerateParameterError: if rate + theta == 0 (the limit form is
            deliberately not substituted).
        MgfDomainError: for ``side="above"`` with rate + theta < 0, where the
            integral diverges.
    """
    if rate <= 0.0:
        raise ConfigError(f"rate must be positive, got {rate}")
    if xi < 0.0:
        raise ConfigError(f"xi must be nonnegative, got {xi}")
    s = rate + theta
    if s == 0.0:
        raise DegenerateParameterError("rate + theta = 0 in restricted Laplace transform")
    if side == "below":
        return rate / s * -math.expm1(-s * xi)
    if side == "above":
        if s < 0.0:
            raise MgfDomainError(f"theta={theta} <= -rate={-rate}: upper restricted transform diverges")
        return rate / s * math.exp(-s * xi)
    raise ConfigError(f"side must be 'below' or 'above', got {side!r}")


def truncated_mean(rate: float, xi: float, side: Side) -> float:
    """Conditional mean of an Exp(rate) gap given its side of ``xi``.

    E[T | T <= xi] = (1/rate - (xi + 1/rate) e^{-rate*xi}) / (1 - e^{-rate*xi})
    and E[T | T > xi] = xi + 1/rate by memorylessness.
    """
    if rate <= 0.0 or xi <= 0.0:
        raise ConfigError("rate and xi must be positive")
    if side == "above":
        return xi + 1.0 / rate
    if side == "below":
        e = math.exp(-rate * xi)
        return (1.0 / rate - (xi + 1.0 / rate) * e) / (1.0 - e)
    raise ConfigError(f"side must be 'below' or 'above', got {side!r}")


def claim_mgf(dist: ClaimDistribution, theta: float) -> float:
    """E[e^{theta*Y}] for a claim size Y; equals 1 at theta = 0."""
    return dist.mgf(theta)


def gap_side_probs(params: ModelParams) -> tuple[float, float, float, float]:
    """Per-state probabilities of the next gap's side of xi.

    Returns ``(q, p, q_tilde, p_tilde)``: from state 1 the next gap is short
    with probability q = 1 - e^{-lambda1*xi} (long with p), from state 2
    short with probability q_tilde (long with p_tilde).  These four numbers
    form the transition matrix [[q, p], [q_tilde, p_tilde]] of the embedded
    chain.
    """
    p = math.exp(-params.lambda1 * params.xi)
    pt = math.exp(-params.lambda2 * params.xi)
    return 1.0 - p, p, 1.0 - pt, pt


def _mean_cycle_increment(params: ModelParams) -> float:
    """Mean change of the claim surplus over one regeneration cycle.

    A cycle starts after a long gap (state 2) and runs until the next long
    gap.  It contains one state-2 step and a Geometric(p)-1 run of short
    state-1 steps followed by the closing long step, each step contributing
    one claim minus one gap.
    """
    q, p, q_tilde, _ = gap_side_probs(params)
    ey = params.claims.mean
    e_n = 1.0 / p
    below = truncated_mean(params.lambda1, params.xi, "below")
    above = truncated_mean(params.lambda1, params.xi, "above")
    return (ey - 1.0 / params.lambda2) + q_tilde * (
        (e_n - 1.0) * (ey - below) + (ey - above)
    )


def npc_margin(params: ModelParams) -> float:
    """Net-profit-condition margin; negative iff the surplus drifts upward.

    For exponential claims this is the closed form
    ``(1/beta - 1/lambda1)(1 - e^{-lambda2*xi}) + (1/beta - 1/lambda2) e^{-lambda1*xi}``,
    which equals e^{-lambda1*xi} times the mean cycle increment.  For other
    claim laws the mean cycle increment itself is returned.  Only the sign is
    comparable across claim families.
    """
    if isinstance(params.claims, Exponential):
        inv_b = 1.0 / params.claims.beta
        return (inv_b - 1.0 / params.lambda1) * -math.expm1(-params.lambda2 * params.xi) + (
            inv_b - 1.0 / params.lambda2
        ) * math.exp(-params.lambda1 * params.xi)
    return _mean_cycle_increment(params)


def npc_holds(params: ModelParams) -> bool:
    return npc_margin(params) < 0.0


def steady_state(params: ModelParams) -> tuple[float, float]:
    """Long-run occupancy (pi1, pi2) of the short-gap/long-gap states.

    pi1 = (1 - e^{-lambda2*xi}) / (1 - e^{-lambda2*xi} + e^{-lambda1*xi});
    pi2 is computed as 1 - pi1 so the pair sums to one exactly.  The pair is
    a left fixed point of the transition matrix from :func:`gap_side_probs`.
    """
    qt = -math.expm1(-params.lambda2 * params.xi)
    p = math.exp(-params.lambda1 * params.xi)
    pi1 = qt / (qt + p)
    return pi1, 1.0 - pi1


def drift_mu(params: ModelParams) -> float:
    """Downward drift of the claim surplus per cycle: minus the mean cycle increment.

    Positive exactly when the net profit condition holds.
    """
    return -_mean_cycle_increment(params)
