"""Command-line front end.

Subcommands wrap the library modules and emit CSV or JSON-lines artifacts.
Every run embeds its resolved configuration and seed so any output file can
be reproduced bit-for-bit; execution knobs (threads, output path, timing
column) deliberately stay out of the echoed configuration because they do
not affect the numbers.

Exit codes: 0 success, 2 configuration error, 3 regime error (no decay
exponent / wrong claim family), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
import time
from dataclasses import asdict, dataclass, field

from . import analytics, importance, oracle, simulation
from .errors import (
    BonusRuinError,
    BoundUndefinedError,
    ConfigError,
    DomainExhaustedError,
    MgfDomainError,
    NoAdjustmentCoefficientError,
    OracleDivergedError,
    StepCapExceededError,
    WrongRegimeError,
)
from .model_core import Exponential, ModelParams, Pareto, drift_mu, npc_margin, steady_state

_EXIT_CONFIG = 2
_EXIT_REGIME = 3
_EXIT_NUMERIC = 4

_REGIME_ERRORS = (NoAdjustmentCoefficientError, WrongRegimeError, MgfDomainError,
                  BoundUndefinedError, DomainExhaustedError)
_NUMERIC_ERRORS = (OracleDivergedError, StepCapExceededError)

_MODEL_KEYS = ("lambda1", "lambda2", "xi", "claims", "beta", "alpha", "sigma")


@dataclass
class RunConfig:
    """Fully resolved model and command options; echoed into every artifact."""

    command: str
    lambda1: float
    lambda2: float
    xi: float
    claims: str
    beta: float | None = None
    alpha: float | None = None
    sigma: float | None = None
    seed: int | None = None
    options: dict = field(default_factory=dict)

    def model(self) -> ModelParams:
        if self.claims == "exponential":
            if self.beta is None:
                raise ConfigError("missing field: beta (required for exponential claims)")
            dist = Exponential(self.beta)
        elif self.claims == "pareto":
            if self.alpha is None:
                raise ConfigError("missing field: alpha (required for pareto claims)")
            sigma = self.sigma
            if sigma is None:
                raise ConfigError("missing field: sigma (required for pareto claims)")
            dist = Pareto(self.alpha, sigma)
        else:
            raise ConfigError(f"claims must be 'exponential' or 'pareto', got {self.claims!r}")
        return ModelParams(self.lambda1, self.lambda2, self.xi, dist)

    def echo(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v is not None and k != "options"}
        d.update(self.options)
        return d


def _read_config_file(path: str) -> dict:
    """Flat key=value lines; blank lines and #-comments ignored."""
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
                key, val = line.split("=", 1)
                out[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _resolve(args: argparse.Namespace) -> RunConfig:
    file_vals = _read_config_file(args.config) if args.config else {}
    merged: dict[str, str | float] = dict(file_vals)
    for key in _MODEL_KEYS:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            merged[key] = cli_val
    for key in ("lambda1", "lambda2", "xi"):
        if key not in merged:
            raise ConfigError(f"missing field: {key}")
    claims = str(merged.get("claims", "exponential")).lower()

    def fnum(key):
        return float(merged[key]) if key in merged else None

    seed = getattr(args, "seed", None)
    if seed is None and "seed" in merged:
        seed = int(merged["seed"])  # type: ignore[arg-type]
    cfg = RunConfig(
        command=args.cmd,
        lambda1=float(merged["lambda1"]),
        lambda2=float(merged["lambda2"]),
        xi=float(merged["xi"]),
        claims=claims,
        beta=fnum("beta"),
        alpha=fnum("alpha"),
        sigma=fnum("sigma"),
        seed=seed,
    )
    cfg.model()  # validate eagerly, before any compute
    return cfg


def _ensure_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        cfg.seed = secrets.randbits(48)
    return cfg.seed


def _threads(args: argparse.Namespace) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("BONUSRUIN_THREADS", "1")))


class _Writer:
    """CSV or JSON-lines emitter with a leading config echo."""

    def __init__(self, fmt: str, out_path: str | None, config: dict):
        self.fmt = fmt
        self.fh = open(out_path, "w", encoding="utf-8", newline="") if out_path else sys.stdout
        self.owns = out_path is not None
        self.header: list[str] | None = None
        if fmt == "jsonl":
            self.fh.write(json.dumps({"config": config}, sort_keys=True) + "\n")
        else:
            self.fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")

    def row(self, record: dict) -> None:
        if self.fmt == "jsonl":
            self.fh.write(json.dumps(record, sort_keys=True) + "\n")
            return
        if self.header is None:
            self.header = list(record)
            self.fh.write(",".join(self.header) + "\n")
        cells = []
        for key in self.header:
            v = record.get(key)
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        self.fh.write(",".join(cells) + "\n")

    def close(self) -> None:
        if self.owns:
            self.fh.close()


def _estimate_record(x: float, xi: float, estimator: str, res, timings: bool,
                     ms: float | None, extra: dict | None = None) -> dict:
    rec = {
        "x": x,
        "xi": xi,
        "estimator": estimator,
        "estimate": res.estimate,
        "std_error": res.std_error,
        "ci_lo": res.ci95[0],
        "ci_hi": res.ci95[1],
        "n": res.n_paths,
        "n_ruined": res.n_ruined,
        "seed": res.seed,
        "horizon": res.horizon if res.horizon is not None else "inf",
    }
    if extra:
        rec.update(extra)
    if timings:
        rec["runtime_ms"] = round(ms or 0.0, 3)
    return rec


def _cmd_check(args) -> int:
    cfg = _resolve(args)
    params = cfg.model()
    margin = npc_margin(params)
    pi1, pi2 = steady_state(params)
    mu = drift_mu(params)
    verdict = "holds" if margin < 0.0 else "fails"
    print(f"net profit condition: {verdict} (margin {margin:.6g})")
    print(f"steady state: pi1 = {pi1:.6f}, pi2 = {pi2:.6f}")
    print(f"cycle drift mu = {mu:.6g}")
    print(json.dumps({
        "config": cfg.echo(), "npc": verdict == "holds", "margin": margin,
        "pi1": pi1, "pi2": pi2, "mu": mu,
    }, sort_keys=True))
    return 0


def _cmd_kappa(args) -> int:
    cfg = _resolve(args)
    params = cfg.model()
    kappa = analytics.solve_kappa(params)
    ev = analytics.adjustment_eigenvector(params, kappa)
    try:
        k_tilde = analytics.cramer_upper_constant(params, kappa)
        kt_txt = f"{k_tilde:.6f}"
    except BoundUndefinedError as exc:
        k_tilde = None
        kt_txt = f"undefined ({exc})"
    print(f"kappa = {kappa:.6f}")
    print(f"eigenvector = ({ev.v1:.6f}, {ev.v2:.6f})")
    print(f"prefactor bound = {kt_txt}")
    block = {
        "config": cfg.echo(), "kappa": kappa, "v1": ev.v1, "v2": ev.v2,
        "k_tilde": k_tilde, "m_slope": analytics.phi_prime(params, kappa),
    }
    if args.alt_grouping:
        kappa_alt = analytics.solve_kappa(params, variant="grouped")
        block["kappa_grouped"] = kappa_alt
        print(f"kappa (grouped m.g.f. arrangement) = {kappa_alt:.6f}; "
              f"difference {abs(kappa_alt - kappa):.3e}")
    print(json.dumps(block, sort_keys=True))
    return 0


def _cmd_simulate(args) -> int:
    cfg = _resolve(args)
    params = cfg.model()
    seed = _ensure_seed(cfg)
    threads = _threads(args)
    xs = _floats(args.x)
    cfg.options = {"x": xs, "horizon": args.horizon, "n": args.n}
    writer = _Writer(args.format, args.out, cfg.echo())
    try:
        for x in xs:
            t0 = time.perf_counter()
            res = simulation.crude_mc_ruin(params, x, args.horizon, args.n, seed, threads)
            ms = (time.perf_counter() - t0) * 1e3
            writer.row(_estimate_record(x, params.xi, "crude", res, args.timings, ms))
    finally:
        writer.close()
    return 0


def _cmd_importance(args) -> int:
    cfg = _resolve(args)
    params = cfg.model()
    seed = _ensure_seed(cfg)
    threads = _threads(args)
    xs = _floats(args.x)
    kappa = analytics.solve_kappa(params)
    ev = analytics.adjustment_eigenvector(params, kappa)
    extra = {"kappa": kappa, "v1": ev.v1, "v2": ev.v2}
    estimators = ["map", "macro"] if args.estimator == "both" else [args.estimator]
    cfg.options = {"x": xs, "n": args.n, "estimator": args.estimator}
    writer = _Writer(args.format, args.out, cfg.echo())
    try:
        for x in xs:
            for name in estimators:
                fn = importance.map_is_ruin if name == "map" else importance.macro_is_ruin
                t0 = time.perf_counter()
                res = fn(params, x, args.n, seed, threads)
                ms = (time.perf_counter() - t0) * 1e3
                writer.row(_estimate_record(x, params.xi, name, res, args.timings, ms, extra))
    finally:
        writer.close()
    return 0


def _cmd_oracle(args) -> int:
    cfg = _resolve(args)
    params = cfg.model()
    x_max = args.x_max if args.x_max is not None else 20.0 * params.claims.mean
    h = args.h if args.h is not None else oracle.default_step(params)
    cfg.options = {"x_max": x_max, "h": h, "tol": args.tol}
    grid = oracle.solve_integral_equations(params, x_max, h, args.tol)
    writer = _Writer(args.format, args.out, cfg.echo())
    try:
        stride = max(1, args.stride)
        for k in range(0, len(grid.grid), stride):
            writer.row({
                "x": float(grid.grid[k]),
                "psi1": float(grid.psi1[k]),
                "psi2": float(grid.psi2[k]),
                "residual": grid.residual,
            })
    finally:
        writer.close()
    return 0


def _cmd_sweep(args) -> int:
    cfg = _resolve(args)
    params = cfg.model()
    seed = _ensure_seed(cfg)
    threads = _threads(args)
    xs = _floats(args.x_grid)
    xis = _floats(args.xi_grid)
    cfg.options = {"x_grid": xs, "xi_grid": xis, "horizon": args.horizon, "n": args.n}
    writer = _Writer(args.format, args.out, cfg.echo())
    try:
        t0 = time.perf_counter()
        cells = simulation.xi_sweep(params, xs, xis, args.horizon, args.n, seed, threads)
        ms = (time.perf_counter() - t0) * 1e3 / max(1, len(cells))
        for cell in cells:
            writer.row(_estimate_record(cell.x, cell.xi, "crude", cell.result, args.timings, ms))
    finally:
        writer.close()
    return 0


def _cmd_compare(args) -> int:
    cfg = _resolve(args)
    params = cfg.model()
    if not isinstance(params.claims, Exponential):
        raise WrongRegimeError("classical comparison requires exponential claims")
    seed = _ensure_seed(cfg)
    threads = _threads(args)
    xs = _floats(args.x_grid)
    beta = params.claims.beta
    lam_mid = 0.5 * (params.lambda1 + params.lambda2)
    cfg.options = {"x_grid": xs, "horizon": args.horizon, "n": args.n}
    writer = _Writer(args.format, args.out, cfg.echo())
    try:
        for label, lam in (
            ("classical_lambda1", params.lambda1),
            ("classical_lambda2", params.lambda2),
            ("classical_mean", lam_mid),
        ):
            for x in xs:
                writer.row({
                    "x": x, "xi": params.xi, "estimator": label,
                    "estimate": analytics.classical_ruin(lam, beta, x),
                    "std_error": 0.0, "ci_lo": "", "ci_hi": "",
                    "n": "", "n_ruined": "", "seed": seed, "horizon": "inf",
                })
        for x in xs:
            t0 = time.perf_counter()
            res = simulation.crude_mc_ruin(params, x, args.horizon, args.n, seed, threads)
            ms = (time.perf_counter() - t0) * 1e3
            writer.row(_estimate_record(x, params.xi, "crude", res, args.timings, ms))
    finally:
        writer.close()
    return 0


def _add_model_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="flat key=value config file; flags override it")
    sp.add_argument("--lambda1", type=float, help="gap rate after short gaps")
    sp.add_argument("--lambda2", type=float, help="gap rate after long gaps")
    sp.add_argument("--xi", type=float, help="window length separating short from long gaps")
    sp.add_argument("--claims", choices=["exponential", "pareto"], help="claim family")
    sp.add_argument("--beta", type=float, help="exponential claim rate")
    sp.add_argument("--alpha", type=float, help="Pareto shape (> 1)")
    sp.add_argument("--sigma", type=float, help="Pareto scale")


def _add_output_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    sp.add_argument("--out", help="output path (default: stdout)")
    sp.add_argument("--seed", type=int, help="RNG seed; generated and recorded if omitted")
    sp.add_argument("--threads", type=int, help="worker threads (env BONUSRUIN_THREADS)")
    sp.add_argument("--timings", action="store_true", help="append a runtime_ms column")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bonusruin",
                                 description="Ruin probabilities for the two-level no-claim-discount risk model")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("check", help="net profit condition, steady state, drift")
    _add_model_args(sp)
    sp.set_defaults(fn=_cmd_check)

    sp = sub.add_parser("kappa", help="decay exponent, eigenvector, prefactor bound")
    _add_model_args(sp)
    sp.add_argument("--alt-grouping", action="store_true",
                    help="also solve under the common-denominator m.g.f. arrangement")
    sp.set_defaults(fn=_cmd_kappa)

    sp = sub.add_parser("simulate", help="crude Monte Carlo ruin estimates")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.add_argument("--x", required=True, help="comma-separated initial reserves")
    sp.add_argument("--horizon", type=float, default=1e4)
    sp.add_argument("--n", type=int, default=100_000)
    sp.set_defaults(fn=_cmd_simulate)

    sp = sub.add_parser("importance", help="tilted-measure ruin estimates")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.add_argument("--x", required=True, help="comma-separated initial reserves")
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--estimator", choices=["map", "macro", "both"], default="map")
    sp.set_defaults(fn=_cmd_importance)

    sp = sub.add_parser("oracle", help="integral-equation ruin probabilities on a grid")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.add_argument("--x-max", type=float, help="grid end (default: 20 mean claims)")
    sp.add_argument("--h", type=float, help="grid step (default: 2%% of mean claim)")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--stride", type=int, default=1, help="emit every k-th grid point")
    sp.set_defaults(fn=_cmd_oracle)

    sp = sub.add_parser("sweep", help="common-random-number sweep over (x, xi)")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.add_argument("--x-grid", required=True)
    sp.add_argument("--xi-grid", required=True)
    sp.add_argument("--horizon", type=float, default=1e4)
    sp.add_argument("--n", type=int, default=100_000)
    sp.set_defaults(fn=_cmd_sweep)

    sp = sub.add_parser("compare", help="model estimates against classical curves")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.add_argument("--x-grid", required=True)
    sp.add_argument("--horizon", type=float, default=1e4)
    sp.add_argument("--n", type=int, default=100_000)
    sp.set_defaults(fn=_cmd_compare)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except _REGIME_ERRORS as exc:
        print(f"error[regime]: {exc}", file=sys.stderr)
        return _EXIT_REGIME
    except _NUMERIC_ERRORS as exc:
        print(f"error[numeric]: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except BonusRuinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
