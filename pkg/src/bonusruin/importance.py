"""Exponential change of measure and importance-sampling ruin estimators.

Under the tilt at the decay exponent kappa the claim surplus drifts upward,
so every path crosses any reserve level in finite time and the estimators
need no horizon.  Two estimators are provided:

* ``macro_is_ruin``: crossing checked only at regeneration epochs (arrivals
  ending a long gap); estimates the regeneration-skeleton ruin probability,
  a lower bound on the true one.  Path weight e^{-kappa * S} at crossing.
* ``map_is_ruin``: crossing checked at every claim; unbiased for the true
  ruin probability, with weight v2 e^{-kappa x} e^{-kappa overshoot} / v_J
  where v is the unit Perron eigenvector of the kernel at kappa and J the
  state at the crossing step.

Draw addressing per tilted step j: state choice at 3j, gap at 3j+1, claim at
3j+2; the same chunked, index-ordered reduction as the crude engine keeps
results bit-identical across thread counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytics import EigenPair, adjustment_eigenvector, map_kernel_mgf, principal_eigenpair, solve_kappa
from ._rng import stream_keys, uniforms
from .errors import ConfigError, InvalidTiltError, StepCapExceededError
from .model_core import Exponential, ModelParams, StateLabel
from .simulation import RuinEstimate

_CHUNK = 1 << 16
_STEP_CAP = 10_000_000


@dataclass(frozen=True)
class TiltedModel:
    """Everything needed to run one tilted path.

    Tilted component laws: claims Exp(beta - theta); gaps Exp(lambda_i +
    theta) truncated to (0, xi] or shifted to (xi, inf) according to the side
    drawn from the tilted transition matrix [[q_t, p_t], [qt_t, pt_t]].
    Rows sum to one by construction; the matrix is the correctly tilted
    chain exactly at theta = kappa, where the kernel eigenvalue is one.
    """

    theta: float
    claim_rate: float
    gap_rate_short: float
    gap_rate_long: float
    q_t: float
    p_t: float
    qt_t: float
    pt_t: float
    eigenvalue: float
    v1: float
    v2: float


def build_tilted_model(params: ModelParams, theta: float) -> TiltedModel:
    """Tilted rates, transition matrix and kernel eigenpair at ``theta``.

    Raises:
        InvalidTiltError: theta outside (0, beta) or a transition probability
            escapes (0, 1).
    """
    if not isinstance(params.claims, Exponential):
        raise InvalidTiltError("exponential tilt requires exponential claims")
    beta = params.claims.beta
    if not 0.0 < theta < beta:
        raise InvalidTiltError(f"theta={theta} outside (0, beta={beta})")
    kernel = map_kernel_mgf(params, theta)
    q_t = kernel.f11       # stay short: beta*lambda1/((beta-theta)(lambda1+theta)) (1-e^{-(lambda1+theta) xi})
    pt_t = kernel.f22      # stay long:  beta*lambda2/((beta-theta)(lambda2+theta)) e^{-(lambda2+theta) xi}
    if not (0.0 < q_t < 1.0 and 0.0 < pt_t < 1.0):
        raise InvalidTiltError(
            f"tilted transition probabilities outside (0,1): q={q_t:.6g}, p_long={pt_t:.6g}"
        )
    pair = principal_eigenpair(kernel)
    return TiltedModel(
        theta=theta,
        claim_rate=beta - theta,
        gap_rate_short=params.lambda1 + theta,
        gap_rate_long=params.lambda2 + theta,
        q_t=q_t,
        p_t=1.0 - q_t,
        qt_t=1.0 - pt_t,
        pt_t=pt_t,
        eigenvalue=pair.eigenvalue,
        v1=pair.v1,
        v2=pair.v2,
    )


def sample_tilted_gap(rate: float, xi: float, side: str, u):
    """Inverse-CDF draw of an Exp(rate) gap conditioned on its side of xi.

    One uniform per draw (keeps stream alignment).  ``side="below"`` maps u
    into (0, xi]; ``side="above"`` returns xi plus a fresh Exp(rate) tail by
    memorylessness.  Accepts scalar or array uniforms.
    """
    if rate <= 0.0:
        raise ConfigError(f"rate must be positive, got {rate}")
    u = np.asarray(u, dtype=float)
    if side == "below":
        return -np.log1p(-u * -np.expm1(-rate * xi)) / rate
    if side == "above":
        return xi - np.log1p(-u) / rate
    raise ConfigError(f"side must be 'below' or 'above', got {side!r}")


@dataclass(frozen=True)
class RuinSample:
    """One tilted path's contribution: weight, overshoot, length, final state."""

    weight: float
    overshoot: float
    steps: int
    terminal_state: StateLabel


def _run_tilted(
    params: ModelParams,
    x: float,
    n: int,
    seed: int,
    macro: bool,
    threads: int,
    eigvec: EigenPair | None,
    collect: bool,
):
    """Shared tilted-path engine; aggregates weights or collects samples."""
    if x < 0.0:
        raise ConfigError(f"reserve must be nonnegative, got {x}")
    if n < 1:
        raise ConfigError("need at least one path")
    kappa = solve_kappa(params)
    tm = build_tilted_model(params, kappa)
    if eigvec is None:
        eigvec = adjustment_eigenvector(params, kappa)
    v1, v2 = eigvec.v1, eigvec.v2
    ratio_short = v2 / v1  # weight factor when the crossing step lands in state 1
    tb_short = -math.expm1(-tm.gap_rate_short * params.xi)
    tb_long = -math.expm1(-tm.gap_rate_long * params.xi)
    chunks = list(range(0, n, _CHUNK))
    results: list = [None] * len(chunks)

    def run_chunk(ci: int) -> None:
        lo = chunks[ci]
        hi = min(lo + _CHUNK, n)
        keys = stream_keys(seed, lo, hi)
        m = hi - lo
        idx = np.arange(m)
        s = np.zeros(m)
        short = np.zeros(m, dtype=bool)  # start in the long-gap state
        w = np.zeros(m)
        if collect:
            eps_out = np.zeros(m)
            steps_out = np.zeros(m, dtype=np.int64)
            term_out = np.zeros(m, dtype=np.int64)
        j = 0
        while idx.size:
            if j >= _STEP_CAP:
                raise StepCapExceededError(
                    f"{idx.size} tilted paths still running after {j} steps; tilt inconsistent"
                )
            u_side = uniforms(keys[idx], 3 * j)
            stay_below = u_side < np.where(short, tm.q_t, tm.qt_t)
            u_gap = uniforms(keys[idx], 3 * j + 1)
            rate = np.where(short, tm.gap_rate_short, tm.gap_rate_long)
            tb = np.where(short, tb_short, tb_long)
            gap = np.where(
                stay_below,
                -np.log1p(-u_gap * tb) / rate,
                params.xi - np.log1p(-u_gap) / rate,
            )
            u_claim = uniforms(keys[idx], 3 * j + 2)
            s = s + (-np.log1p(-u_claim) / tm.claim_rate) - gap
            new_short = stay_below
            if macro:
                hit = ~new_short & (s > x)
            else:
                hit = s > x
            if hit.any():
                if macro:
                    w[idx[hit]] = np.exp(-kappa * s[hit])
                else:
                    factor = np.where(new_short[hit], ratio_short, 1.0)
                    w[idx[hit]] = factor * math.exp(-kappa * x) * np.exp(-kappa * (s[hit] - x))
                if collect:
                    eps_out[idx[hit]] = s[hit] - x
                    steps_out[idx[hit]] = j + 1
                    term_out[idx[hit]] = np.where(new_short[hit], 1, 2)
            keep = ~hit
            idx = idx[keep]
            s = s[keep]
            short = new_short[keep]
            j += 1
        if collect:
            results[ci] = (w, eps_out, steps_out, term_out)
        else:
            results[ci] = (float(w.sum()), float(np.dot(w, w)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, range(len(chunks))))
    else:
        for ci in range(len(chunks)):
            run_chunk(ci)
    return kappa, eigvec, results


def _estimate_from_sums(results, n: int, seed: int) -> RuinEstimate:
    wsum = 0.0
    wsq = 0.0
    for s, q in results:
        wsum += s
        wsq += q
    mean = wsum / n
    var = max(wsq - n * mean * mean, 0.0) / (n - 1) if n > 1 else 0.0
    se = math.sqrt(var / n)
    lo = max(0.0, mean - 1.96 * se)
    hi = mean + 1.96 * se
    return RuinEstimate(mean, se, (lo, hi), n, n, seed, None)


def macro_is_ruin(
    params: ModelParams, x: float, n: int = 100_000, seed: int = 0, threads: int = 1
) -> RuinEstimate:
    """Tilted estimate of the regeneration-skeleton ruin probability.

    Crossing is checked only where a long gap ends, i.e. at cycle ends of
    the regenerative decomposition; the result underestimates the true ruin
    probability by the within-cycle crossings it ignores.
    """
    _, _, results = _run_tilted(params, x, n, seed, macro=True, threads=threads, eigvec=None, collect=False)
    return _estimate_from_sums(results, n, seed)


def map_is_ruin(
    params: ModelParams,
    x: float,
    n: int = 100_000,
    seed: int = 0,
    threads: int = 1,
    eigvec: EigenPair | None = None,
) -> RuinEstimate:
    """Unbiased tilted estimate of the ruin probability from the long-gap start.

    ``eigvec`` may override the internally computed eigenpair; only the
    component ratio enters the weights, so any positive rescaling leaves the
    estimate unchanged.
    """
    _, _, results = _run_tilted(params, x, n, seed, macro=False, threads=threads, eigvec=eigvec, collect=False)
    return _estimate_from_sums(results, n, seed)


def map_is_samples(params: ModelParams, x: float, n: int, seed: int) -> list[RuinSample]:
    """Per-path records of the unbiased estimator, for diagnostics and tests."""
    _, _, results = _run_tilted(params, x, n, seed, macro=False, threads=1, eigvec=None, collect=True)
    out: list[RuinSample] = []
    for w, eps, steps, term in results:
        for k in range(len(w)):
            out.append(RuinSample(float(w[k]), float(eps[k]), int(steps[k]), StateLabel(int(term[k]))))
    return out[:n]
