"""Closed-form analytics: cycle m.g.f., decay exponent, tail constants, kernel.

The claim surplus observed at regeneration epochs is a random walk whose step
m.g.f. ``phi`` is available in closed form for exponential gaps and claims.
The positive root ``kappa`` of ``phi(theta) = 1`` is the exponential decay
rate of the ruin probability, and the 2x2 kernel of the embedded state
process evaluated at ``kappa`` has Perron eigenvalue one; its eigenvector
feeds the importance-sampling estimators.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import (
    AsymptoticRangeWarning,
    BoundUndefinedError,
    ConfigError,
    ConstantUndefinedError,
    DomainExhaustedError,
    InconsistentKappaError,
    MgfDomainError,
    NoAdjustmentCoefficientError,
    WrongRegimeError,
)
from .model_core import (
    Exponential,
    ModelParams,
    Pareto,
    claim_mgf,
    drift_mu,
    gap_side_probs,
    npc_holds,
    npc_margin,
    restricted_laplace,
)

MgfVariant = Literal["factored", "grouped"]

_KAPPA_TOL = 1e-12
_EDGE_MARGIN = 1e-9


@dataclass(frozen=True)
class KernelMatrix:
    """Transform matrix of the embedded state/increment process at ``theta``.

    Entry (i, j) is E_i[e^{theta * increment}; next state = j] for states
    1 = short gap, 2 = long gap.  At theta = 0 it is the transition matrix.
    """

    f11: float
    f12: float
    f21: float
    f22: float
    theta: float

    def as_rows(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (self.f11, self.f12), (self.f21, self.f22)


@dataclass(frozen=True)
class EigenPair:
    """Perron eigenvalue with unit-norm positive right eigenvector (v1, v2)."""

    eigenvalue: float
    v1: float
    v2: float


@dataclass(frozen=True)
class AsymptoticReport:
    """Summary of the applicable large-reserve decay regime.

    For exponential claims (``kind="cramer"``): the decay exponent ``kappa``,
    the closed-form upper bound ``k_tilde`` on the prefactor, and the
    diagnostic slope ``m_slope`` = phi'(kappa).  For Pareto claims
    (``kind="heavy_tail"``): the integrated-tail constant ``constant_c``.
    ``mu`` is the downward drift per cycle in both regimes.
    """

    kind: Literal["cramer", "heavy_tail"]
    mu: float
    npc_ok: bool
    kappa: float | None = None
    k_tilde: float | None = None
    m_slope: float | None = None
    constant_c: float | None = None


def _restricted_four(params: ModelParams, theta: float) -> tuple[float, float, float, float]:
    """(below1, above1, below2, above2) restricted transforms at theta."""
    return (
        restricted_laplace(params.lambda1, theta, params.xi, "below"),
        restricted_laplace(params.lambda1, theta, params.xi, "above"),
        restricted_laplace(params.lambda2, theta, params.xi, "below"),
        restricted_laplace(params.lambda2, theta, params.xi, "above"),
    )


def mgf_x1(params: ModelParams, theta: float, variant: MgfVariant = "factored") -> float:
    """m.g.f. of the per-cycle increment of the claim surplus.

    A cycle starts right after a long gap: one long-gap step, then a
    geometric run of short-gap steps ended by the next long gap.  In terms of
    the claim m.g.f. B and the restricted gap transforms this is

        phi(theta) = B*E[e^{-theta T2}; T2>xi]
                   + B^2 * E[e^{-theta T2}; T2<=xi] * E[e^{-theta T1}; T1>xi]
                     / (1 - B*E[e^{-theta T1}; T1<=xi]).

    ``variant="grouped"`` evaluates the algebraically equivalent
    common-denominator arrangement, retained as a diagnostic cross-check; the
    two agree to rounding error.

    Raises:
        MgfDomainError: theta outside the claim m.g.f. domain, or the
            geometric-series denominator is not positive.
    """
    if not isinstance(params.claims, Exponential):
        raise MgfDomainError("cycle m.g.f. requires exponential claims")
    b = claim_mgf(params.claims, theta)
    below1, above1, below2, above2 = _restricted_four(params, theta)
    den = 1.0 - b * below1
    if den <= 0.0:
        raise MgfDomainError(
            f"geometric series diverges at theta={theta}: 1 - B*E[e^(-theta T); T<=xi] = {den:.3e} <= 0"
        )
    if variant == "factored":
        return b * above2 + b * b * below2 * above1 / den
    if variant == "grouped":
        l1, l2, xi = params.lambda1, params.lambda2, params.xi
        num = (
            l1 * l2 * (math.exp(-l1 * xi) - math.exp(-l2 * xi))
            * b * b * math.exp(-theta * xi) / ((l1 + theta) * (l2 + theta))
            + l2 / (l2 + theta) * b * math.exp(-(l2 + theta) * xi)
        )
        return num / den
    raise ConfigError(f"unknown m.g.f. variant {variant!r}")


def mgf_x1_domain_edge(params: ModelParams) -> float:
    """Upper edge of the cycle m.g.f. domain on the positive axis.

    The smaller of the claim-rate pole and the point where the geometric
    denominator 1 - B * E[e^{-theta T1}; T1 <= xi] hits zero, minus a small
    safety margin.
    """
    if not isinstance(params.claims, Exponential):
        raise MgfDomainError("cycle m.g.f. requires exponential claims")
    beta = params.claims.beta
    l1, xi = params.lambda1, params.xi

    def den(theta):
        theta = np.asarray(theta, dtype=float)
        below = l1 / (l1 + theta) * -np.expm1(-(l1 + theta) * xi)
        return 1.0 - beta / (beta - theta) * below

    hi = beta - _EDGE_MARGIN
    if den(hi) > 0.0:
        return hi
    grid = np.linspace(0.0, hi, 1025)
    neg = np.nonzero(den(grid) <= 0.0)[0]
    a, b = grid[neg[0] - 1], grid[neg[0]]
    for _ in range(200):
        m = 0.5 * (a + b)
        if den(m) > 0.0:
            a = m
        else:
            b = m
    return a - _EDGE_MARGIN


def solve_kappa(params: ModelParams, variant: MgfVariant = "factored") -> float:
    """Positive root of ``phi(theta) = 1``: the exponential decay rate of ruin.

    ``phi`` is convex with phi(0) = 1 and, under the net profit condition,
    phi'(0) < 0, so there is exactly one positive root before the domain
    edge.  A geometric bracket scan locates the sign change of phi - 1 and
    bisection refines it to |phi(kappa) - 1| <= 1e-12.

    Raises:
        WrongRegimeError: Pareto claims (no m.g.f.; use the heavy-tail path).
        NoAdjustmentCoefficientError: net profit condition fails.
        DomainExhaustedError: no sign change before the domain edge.
    """
    if isinstance(params.claims, Pareto):
        raise WrongRegimeError("no m.g.f. for Pareto claims: use heavy-tail asymptotics")
    if not npc_holds(params):
        raise NoAdjustmentCoefficientError(
            f"net profit condition fails (margin {npc_margin(params):.6g} >= 0)"
        )
    edge = mgf_x1_domain_edge(params)

    def g(theta: float) -> float:
        return mgf_x1(params, theta, variant) - 1.0

    theta = edge * 1e-12
    lo = 0.0
    hi = None
    while theta < edge:
        if g(theta) > 0.0:
            hi = theta
            break
        lo = theta
        theta *= 1.5
    if hi is None:
        if g(edge) > 0.0:
            hi = edge
        else:
            raise DomainExhaustedError(
                f"phi(theta) - 1 has no sign change on (0, {edge:.6g})"
            )
    a, b = lo, hi
    for _ in range(200):
        m = 0.5 * (a + b)
        if g(m) < 0.0:
            a = m
        else:
            b = m
        if b - a <= 1e-16 * max(1.0, b):
            break
    root = 0.5 * (a + b)
    if abs(g(root)) > 1e-10:
        raise DomainExhaustedError(f"bisection stalled: |phi-1| = {abs(g(root)):.3e} at {root:.9g}")
    return root


def classical_ruin(lam: float, beta: float, u: float) -> float:
    """Ruin probability of the independent-gaps model: (lam/beta) e^{-(beta-lam) u}."""
    if not lam < beta:
        raise ConfigError(f"classical formula requires lam < beta, got lam={lam}, beta={beta}")
    if u < 0.0:
        raise ConfigError(f"reserve must be nonnegative, got {u}")
    return lam / beta * math.exp(-(beta - lam) * u)


def cramer_upper_constant(params: ModelParams, kappa: float) -> float:
    """Closed-form upper bound on lim sup of psi(x) e^{kappa x}.

    For exponential claims:
        K = beta/(beta-kappa) * (beta e^{-lambda1 xi} - kappa e^{-lambda2 xi})
                              / (beta e^{-lambda1 xi} - kappa).

    Raises:
        BoundUndefinedError: beta e^{-lambda1 xi} - kappa <= 0, where the
            closed form loses meaning (reported, never masked).
    """
    if not isinstance(params.claims, Exponential):
        raise WrongRegimeError("exponential-claims bound requested for non-exponential claims")
    beta = params.claims.beta
    if not 0.0 < kappa < beta:
        raise InconsistentKappaError(f"kappa={kappa} outside (0, beta={beta})")
    e1 = math.exp(-params.lambda1 * params.xi)
    e2 = math.exp(-params.lambda2 * params.xi)
    den = beta * e1 - kappa
    if den <= 0.0:
        raise BoundUndefinedError(
            f"bound denominator beta*e^(-lambda1*xi) - kappa = {den:.6g} <= 0"
        )
    return beta / (beta - kappa) * (beta * e1 - kappa * e2) / den


def cramer_upper_constant_series(params: ModelParams, kappa: float) -> float:
    """Geometric-series arrangement of the same bound; cross-check for the closed form.

    p_tilde*B + q_tilde*p*B^2 / (1 - q*B) with B = E[e^{kappa Y}] and p, q,
    p_tilde, q_tilde the per-state side probabilities.
    """
    b = claim_mgf(params.claims, kappa)
    q, p, q_tilde, p_tilde = gap_side_probs(params)
    den = 1.0 - q * b
    if den <= 0.0:
        raise BoundUndefinedError(f"series form diverges: 1 - q*B = {den:.6g} <= 0")
    return p_tilde * b + q_tilde * p * b * b / den


def heavy_tail_constant(params: ModelParams) -> float:
    """Constant C relating the cycle-increment tail to the claim tail.

    C = P(T2 > xi) + P(T2 <= xi) * (2 - P(T1 <= xi)) / (1 - P(T1 <= xi));
    always >= 1, and equal to e^{lambda * xi} when the two gap rates agree.
    """
    q, _, q_tilde, p_tilde = gap_side_probs(params)
    return p_tilde + q_tilde * (2.0 - q) / (1.0 - q)


def heavy_tail_asymptotic(params: ModelParams, x: float) -> float:
    """Large-reserve ruin approximation for Pareto claims.

    (C/mu) * integrated claim tail = (C/mu) * (sigma/(alpha-1)) * (1+x/sigma)^{1-alpha}.
    Valid as x grows; values above 1 are clamped (with a warning), since the
    formula has no meaning as a probability at small x.

    Raises:
        WrongRegimeError: exponential claims (use the exponential-decay path).
        NoAdjustmentCoefficientError: net profit condition fails.
    """
    if not isinstance(params.claims, Pareto):
        raise WrongRegimeError("heavy-tail asymptotic requires Pareto claims")
    if not npc_holds(params):
        raise NoAdjustmentCoefficientError("net profit condition fails")
    if x < 0.0:
        raise ConfigError(f"reserve must be nonnegative, got {x}")
    c = heavy_tail_constant(params)
    mu = drift_mu(params)
    al, sg = params.claims.alpha, params.claims.sigma
    val = (c / mu) * (sg / (al - 1.0)) * (1.0 + x / sg) ** (1.0 - al)
    if val > 1.0:
        warnings.warn(
            f"heavy-tail approximation {val:.4g} clamped to 1 at x={x}; asymptotic not yet valid",
            AsymptoticRangeWarning,
            stacklevel=2,
        )
        return 1.0
    return val


def s_alpha_constant_D(params: ModelParams, alpha: float) -> float:
    """Tail-equivalence constant between cycle increment and claim at tilt ``alpha``.

    D(alpha) = E[e^{-alpha T2}; T2 > xi]
             + P(T2 <= xi) * (E[N r^{N-1}] E[e^{-alpha T1} | T1 <= xi]
                              + E[e^{-alpha T1} | T1 > xi])

    with N geometric on the short-gap run, r = B(alpha) E[e^{-alpha T1}|T1<=xi]
    and E[N r^{N-1}] = p / (1 - (1-p) r)^2.  At alpha = 0 this reduces exactly
    to :func:`heavy_tail_constant`.

    Raises:
        ConstantUndefinedError: the geometric moment diverges ((1-p) r >= 1).
        MgfDomainError: claim m.g.f. undefined at ``alpha``.
    """
    if alpha < 0.0:
        raise ConfigError(f"tilt must be nonnegative, got {alpha}")
    b = claim_mgf(params.claims, alpha)
    below1, above1, below2, above2 = _restricted_four(params, alpha)
    q, p, q_tilde, _ = gap_side_probs(params)
    cond_below = below1 / q
    cond_above = above1 / p
    r = b * cond_below
    if (1.0 - p) * r >= 1.0:
        raise ConstantUndefinedError(
            f"geometric moment diverges at alpha={alpha}: (1-p)*r = {(1.0 - p) * r:.6g} >= 1"
        )
    e_n_r = p / (1.0 - (1.0 - p) * r) ** 2
    return above2 + q_tilde * (e_n_r * cond_below + cond_above)


def map_kernel_mgf(params: ModelParams, theta: float) -> KernelMatrix:
    """Kernel transform matrix at ``theta``; rows are from-states, columns to-states.

    Entry (i, j) = B(theta) * E[e^{-theta T_i}; side of xi selecting j], so at
    theta = 0 the matrix is the transition matrix of the embedded chain.
    """
    b = claim_mgf(params.claims, theta)
    below1, above1, below2, above2 = _restricted_four(params, theta)
    return KernelMatrix(
        f11=b * below1, f12=b * above1, f21=b * below2, f22=b * above2, theta=theta
    )


def principal_eigenpair(kernel: KernelMatrix) -> EigenPair:
    """Largest eigenvalue of a nonnegative 2x2 kernel with its positive eigenvector.

    Solved from the characteristic quadratic; the eigenvector is normalized
    to unit Euclidean length.  For a degenerate diagonal kernel with equal
    entries the tie-break returns the vector with the larger first component.
    """
    f11, f12, f21, f22 = kernel.f11, kernel.f12, kernel.f21, kernel.f22
    if min(f11, f12, f21, f22) < 0.0:
        raise ConfigError("kernel entries must be nonnegative")
    tr = f11 + f22
    disc = (f11 - f22) ** 2 + 4.0 * f12 * f21
    lam = 0.5 * (tr + math.sqrt(disc))
    # Two algebraically equivalent eigenvector forms; pick the better conditioned.
    cand1 = (f12, lam - f11)
    cand2 = (lam - f22, f21)
    v = cand1 if max(cand1) >= max(cand2) else cand2
    norm = math.hypot(*v)
    if norm == 0.0:
        v = (1.0, 0.0)
        norm = 1.0
    return EigenPair(eigenvalue=lam, v1=v[0] / norm, v2=v[1] / norm)


def adjustment_eigenvector(params: ModelParams, kappa: float) -> EigenPair:
    """Unit-norm right eigenvector of the kernel at the decay exponent.

    At ``kappa`` the kernel has eigenvalue one and the eigenvector ratio is
    v1/v2 = E[e^{-kappa T1}; T1 > xi] * B / (1 - B * E[e^{-kappa T1}; T1 <= xi]).

    Raises:
        InconsistentKappaError: phi(kappa) differs from 1 beyond 1e-6.
    """
    resid = abs(mgf_x1(params, kappa) - 1.0)
    if resid > 1e-6:
        raise InconsistentKappaError(f"phi(kappa) - 1 = {resid:.3e} at kappa={kappa}")
    k = map_kernel_mgf(params, kappa)
    v1, v2 = k.f12, 1.0 - k.f11
    norm = math.hypot(v1, v2)
    return EigenPair(eigenvalue=1.0, v1=v1 / norm, v2=v2 / norm)


def phi_prime(params: ModelParams, theta: float, h: float = 1e-6) -> float:
    """Central finite-difference derivative of the cycle m.g.f."""
    return (mgf_x1(params, theta + h) - mgf_x1(params, theta - h)) / (2.0 * h)


def asymptotic_report(params: ModelParams) -> AsymptoticReport:
    """Assemble the decay-regime summary appropriate to the claim family."""
    ok = npc_holds(params)
    mu = drift_mu(params)
    if isinstance(params.claims, Pareto):
        return AsymptoticReport(
            kind="heavy_tail", mu=mu, npc_ok=ok, constant_c=heavy_tail_constant(params)
        )
    if not ok:
        return AsymptoticReport(kind="cramer", mu=mu, npc_ok=False)
    kappa = solve_kappa(params)
    try:
        k_tilde = cramer_upper_constant(params, kappa)
    except BoundUndefinedError:
        k_tilde = None
    return AsymptoticReport(
        kind="cramer",
        mu=mu,
        npc_ok=True,
        kappa=kappa,
        k_tilde=k_tilde,
        m_slope=phi_prime(params, kappa),
    )
