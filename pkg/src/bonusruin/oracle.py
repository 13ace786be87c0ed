"""Independent verification tools.

``solve_integral_equations`` computes the ruin probabilities psi1, psi2 (by
starting state) on a reserve grid directly from the defining system

    psi_i(x) = int_0^xi f_i(t) g_1(x+t) dt + int_xi^inf f_i(t) g_2(x+t) dt,
    g_j(u)  = int_0^u psi_j(u-y) b(y) dy + ClaimTail(u),

where f_i are the gap densities and b the claim density: condition on the
first gap t and the first claim y; ruin now if y > x + t, otherwise continue
from x + t - y in the state selected by t vs xi.  It shares no code path
with the analytics or simulation modules, which is the point.

Numerics: composite trapezoid on a uniform grid with spacing snapped so xi
is a grid multiple (when xi is not smaller than the requested step); the
convolution-style sums run through FFTs.  Beyond the grid end the integrand
is closed with a tail fitted to the current iterate (log-linear for
exponential claims, log-log for Pareto), so the finite grid does not bias
values near its end.  Plain successive substitution from psi = 0 converges
monotonically under the net profit condition.

``mc_mgf_x1`` and ``mc_tail_ratio`` sample the regeneration-cycle increment
from its definition (one long-gap step, then short-gap steps until the next
long gap) and are the arbiters for the closed-form transforms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import fftconvolve

from ._rng import stream_keys, uniforms
from .errors import ConfigError, HeavyTailWarning, LowInformationWarning, OracleDivergedError
from .model_core import ModelParams, Pareto

_CHUNK = 1 << 16


@dataclass(frozen=True)
class GridFunction:
    """Discretized ruin probabilities by starting state on a uniform grid."""

    grid: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    residual: float
    iterations: int
    h: float

    def interp(self, x, state: int = 2):
        """Linear interpolation of psi_state at reserve(s) x."""
        if state not in (1, 2):
            raise ConfigError(f"state must be 1 or 2, got {state}")
        vals = self.psi1 if state == 1 else self.psi2
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > self.grid[-1]):
            raise ConfigError("query outside the solved grid")
        return np.interp(x, self.grid, vals)


def default_step(params: ModelParams) -> float:
    """Grid step used when none is given: 2% of the mean claim."""
    return 0.02 * params.claims.mean


def solve_integral_equations(
    params: ModelParams,
    x_max: float,
    h: float | None = None,
    tol: float = 1e-8,
    max_iter: int = 20_000,
) -> GridFunction:
    """Fixed-point solution of the two-state ruin integral equations.

    Iterates from psi = 0 until the sup-norm change drops below ``tol``.
    ``x_max`` should exceed the largest reserve of interest by a comfortable
    claim-tail margin (twenty mean claims is the CLI default).

    Raises:
        OracleDivergedError: no convergence within ``max_iter`` sweeps.
    """
    if h is None:
        h = default_step(params)
    if h <= 0.0 or x_max <= 0.0 or tol <= 0.0:
        raise ConfigError("h, x_max and tol must be positive")
    lam = (params.lambda1, params.lambda2)
    xi = params.xi
    pareto = isinstance(params.claims, Pareto)

    # Snap the step so xi falls on the grid; a sub-step window gets a
    # dedicated partial-cell treatment instead of an absurdly fine grid.
    if xi >= h:
        n_xi = int(round(xi / h))
        h = xi / n_xi
        sub_cell = False
    else:
        n_xi = 0
        sub_cell = True
    n = int(math.ceil(x_max / h)) + 1
    u = np.arange(n) * h
    claim_tail = np.asarray(params.claims.tail(u), dtype=float)
    b = np.asarray(params.claims.density(u), dtype=float)
    f = [lam[i] * np.exp(-lam[i] * u) for i in range(2)]
    c = [h * f[i] for i in range(2)]
    kidx = np.arange(n)
    last_j = n - 1 - kidx                      # last in-grid offset per x-index
    end_coef = [h * f[i][last_j] for i in range(2)]

    # Offset grid for the beyond-the-end remainder integrals.
    s_hi = xi + 60.0 / min(lam)
    s_grid = np.linspace(0.0, s_hi, 4096)
    n_fit = max(10, n // 8)

    psi = [np.zeros(n), np.zeros(n)]
    residual = math.inf
    for it in range(1, max_iter + 1):
        g = []
        for jj in range(2):
            conv = fftconvolve(psi[jj], b)[:n]
            gj = h * (conv - 0.5 * (psi[jj] * b[0] + psi[jj][0] * b))
            g.append(np.clip(gj + claim_tail, 0.0, 1.0))

        # Tail extrapolators fitted to the last grid block of each g.
        g_ext = []
        for jj in range(2):
            yv = np.log(np.maximum(g[jj][-n_fit:], 1e-300))
            xv = np.log(params.claims.sigma + u[-n_fit:]) if pareto else u[-n_fit:]
            slope, icept = np.polyfit(xv, yv, 1)
            if pareto:
                g_ext.append(lambda w, s=slope, ic=icept: np.exp(ic + s * np.log(params.claims.sigma + w)))
            else:
                g_ext.append(lambda w, s=slope, ic=icept: np.exp(ic + s * w))

        # Cumulative remainder tables: W[i][j](s) = int_0^s e^{-lam_i w} g_ext_j(x_max + w) dw.
        w_tab = [[None, None], [None, None]]
        for i in range(2):
            decay = np.exp(-lam[i] * s_grid)
            for jj in range(2):
                integ = decay * g_ext[jj](u[-1] + s_grid)
                w_tab[i][jj] = np.concatenate(
                    [[0.0], np.cumsum(0.5 * (integ[1:] + integ[:-1]) * np.diff(s_grid))]
                )

        new_psi = []
        for i in range(2):
            damp = lam[i] * np.exp(-lam[i] * (u[-1] - u))
            if not sub_cell:
                # Window integral over [0, min(xi, grid end)] against g1.
                c_head = c[i].copy()
                c_head[n_xi + 1:] = 0.0
                s1 = fftconvolve(g[0], c_head[::-1])[n - 1:n - 1 + n]
                j_end = np.minimum(n_xi, last_j)
                i1 = s1 - 0.5 * (c[i][0] * g[0] + h * f[i][j_end] * g[0][np.minimum(kidx + j_end, n - 1)])
                beyond = n_xi > last_j
                if beyond.any():
                    s_up = np.interp(u[beyond] + xi - u[-1], s_grid, w_tab[i][0])
                    i1[beyond] += damp[beyond] * s_up
                # Post-window integral over [xi, grid end] against g2.
                c_tail = c[i].copy()
                c_tail[:n_xi] = 0.0
                s2 = fftconvolve(g[1], c_tail[::-1])[n - 1:n - 1 + n]
                i2 = s2 - 0.5 * (
                    c[i][n_xi] * g[1][np.minimum(kidx + n_xi, n - 1)] + end_coef[i] * g[1][-1]
                )
                i2 = np.where(n_xi <= last_j, i2, 0.0)
            else:
                # xi below one step: the window integral is a single partial cell.
                g1_at_xi = np.interp(np.minimum(u + xi, u[-1]), u, g[0])
                i1 = 0.5 * xi * (f[i][0] * g[0] + lam[i] * math.exp(-lam[i] * xi) * g1_at_xi)
                g2_at_xi = np.interp(np.minimum(u + xi, u[-1]), u, g[1])
                g2_next = g[1][np.minimum(kidx + 1, n - 1)]
                head = 0.5 * (h - xi) * (lam[i] * math.exp(-lam[i] * xi) * g2_at_xi + f[i][1] * g2_next)
                c_tail = c[i].copy()
                c_tail[0] = 0.0
                s2 = fftconvolve(g[1], c_tail[::-1])[n - 1:n - 1 + n]
                i2 = s2 - 0.5 * (c[i][1] * g2_next + end_coef[i] * g[1][-1]) + head
            # Remainder beyond the grid end, from max(xi, grid reach) onward, against g2.
            s_lo = np.maximum(0.0, u + xi - u[-1])
            rem = damp * (w_tab[i][1][-1] - np.interp(s_lo, s_grid, w_tab[i][1]))
            new_psi.append(np.clip(i1 + i2 + rem, 0.0, 1.0))

        residual = max(
            float(np.max(np.abs(new_psi[0] - psi[0]))),
            float(np.max(np.abs(new_psi[1] - psi[1]))),
        )
        psi = new_psi
        if residual < tol:
            return GridFunction(u, psi[0], psi[1], residual, it, h)
    raise OracleDivergedError(
        f"no convergence after {max_iter} sweeps (last residual {residual:.3e})"
    )


def sample_cycle_increments(params: ModelParams, n: int, seed: int) -> np.ndarray:
    """n independent draws of the regeneration-cycle increment.

    A cycle starts with one long-gap step and continues with short-gap steps
    until a gap again exceeds xi; the increment adds claim minus gap per
    step.  Draw addressing matches the path engines: gap at 2j, claim 2j+1.
    """
    if n < 1:
        raise ConfigError("need at least one draw")
    out = np.empty(n)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        keys = stream_keys(seed, lo, hi)
        m = hi - lo
        idx = np.arange(m)
        x_acc = np.zeros(m)
        short = np.zeros(m, dtype=bool)
        j = 0
        while idx.size:
            u_gap = uniforms(keys[idx], 2 * j)
            rate = np.where(short, params.lambda1, params.lambda2)
            gap = -np.log1p(-u_gap) / rate
            u_claim = uniforms(keys[idx], 2 * j + 1)
            x_acc = x_acc + params.claims.ppf(u_claim) - gap
            cont = gap <= params.xi
            done = ~cont
            if done.any():
                out[lo + idx[done]] = x_acc[done]
            idx = idx[cont]
            x_acc = x_acc[cont]
            short = np.ones(idx.size, dtype=bool)
            j += 1
    return out


class MgfEstimate(NamedTuple):
    mean: float
    std_error: float


def mc_mgf_x1(params: ModelParams, theta: float, n: int = 1_000_000, seed: int = 0) -> MgfEstimate:
    """Monte Carlo E[e^{theta * cycle increment}] straight from the cycle definition.

    Warns (HeavyTailWarning) when the sample kurtosis of the summand blows
    up, a telltale of theta outside or near the edge of the m.g.f. domain.
    """
    xs = sample_cycle_increments(params, n, seed)
    w = np.exp(theta * xs)
    mean = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(n))
    centered = w - mean
    var = float(np.mean(centered**2))
    if var > 0.0:
        kurt = float(np.mean(centered**4)) / var**2
        if not math.isfinite(kurt) or kurt > 500.0:
            warnings.warn(
                f"sample kurtosis {kurt:.3g} at theta={theta}; the mean may have unbounded variance",
                HeavyTailWarning,
                stacklevel=2,
            )
    return MgfEstimate(mean, se)


class TailRatioEstimate(NamedTuple):
    ratio: float
    std_error: float
    n_hits: int


def mc_tail_ratio(params: ModelParams, x: float, n: int = 1_000_000, seed: int = 0) -> TailRatioEstimate:
    """P(cycle increment > x) / ClaimTail(x), estimated by plain counting.

    Converges to :func:`analytics.heavy_tail_constant` as x grows when
    claims are Pareto.  Warns (LowInformationWarning) on zero hits.
    """
    if not isinstance(params.claims, Pareto):
        raise ConfigError("tail ratio targets the heavy-tailed regime; claims must be Pareto")
    xs = sample_cycle_increments(params, n, seed)
    hits = int(np.count_nonzero(xs > x))
    tail = float(params.claims.tail(x))
    p_hat = hits / n
    se = math.sqrt(p_hat * (1.0 - p_hat) / n) / tail
    if hits == 0:
        warnings.warn(f"no cycle increments above x={x} in {n} draws", LowInformationWarning, stacklevel=2)
    return TailRatioEstimate(p_hat / tail, se, hits)
