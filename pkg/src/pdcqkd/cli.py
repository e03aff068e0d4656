"""Command line front end: loss sweeps, brightness tables, model validation.

Everything is emitted as plot-ready CSV (or a plain-text report for
mc-validate); there is no bundled plotting.  Identical configuration and
seed produce byte-identical output.

Exit codes: 0 ok, 2 configuration error, 3 numeric failure inside a
sweep (the offending row goes to stderr), 4 validation failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .comparison import CoherentSetup, coherent_decoy_rate, triggering_pdc_decoy_rate
from .finitekey import FluctuationParams, finite_key_rate
from .model import ChannelScenario, Placement, SourceParams, overall_gain, overall_qber, scenario_setup
from .montecarlo import estimate
from .optimize import Regime, SearchBounds, optimal_mu_curve, optimize_lambda
from .rates import (
    SCHEME_COHERENT,
    SCHEME_ENT_ALICE,
    SCHEME_ENT_MIDDLE,
    SCHEME_TRIGGERING,
    PostprocessingConfig,
    RatePoint,
)
from .twoway import bstep_rate

__all__ = ["main"]

CSV_HEADER = "loss_db,scheme,mu,gain,qber,delta_b,delta_p,bsteps,recurrence,rate"
MU_HEADER = "e_d,regime,mu_opt"

ALL_SCHEMES = (SCHEME_ENT_MIDDLE, SCHEME_ENT_ALICE, SCHEME_COHERENT, SCHEME_TRIGGERING)
ENT_SCHEMES = (SCHEME_ENT_MIDDLE, SCHEME_ENT_ALICE)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4


class ConfigError(Exception):
    pass


class NumericError(Exception):
    pass


@dataclass
class SweepConfig:
    """Resolved settings for one run; defaults follow the reference setup."""

    schemes: tuple[str, ...] = (SCHEME_ENT_MIDDLE,)
    loss_start: float = 0.0
    loss_stop: float = 40.0
    loss_step: float = 1.0
    mu: float | str = "opt"
    bsteps: int = 0
    recurrence: bool = False
    eta_alice: float = 0.145
    eta_bob: float = 0.145
    y0: float = 6.02e-6
    e_d: float = 0.015
    e0: float = 0.5
    q: float = 0.5
    f_ec: float = 1.22
    pulses: float = 1.5e11
    confidence: float = 50.0
    cutoff: float = 1e-10
    seed: int = 42
    samples: int = 10_000_000
    e_d_start: float = 0.0
    e_d_stop: float = 0.1
    e_d_step: float = 0.005

    def loss_grid(self) -> list[float]:
        if self.loss_step <= 0.0:
            raise ConfigError(f"loss step must be positive, got {self.loss_step}")
        if self.loss_stop < self.loss_start:
            raise ConfigError("empty loss grid: stop is below start")
        count = int(math.floor((self.loss_stop - self.loss_start) / self.loss_step + 1e-9)) + 1
        return [self.loss_start + i * self.loss_step for i in range(count)]

    def postprocessing(self) -> PostprocessingConfig:
        return PostprocessingConfig(q=self.q, f_ec=self.f_ec)


_CONFIG_FIELDS = {
    "schemes": tuple,
    "loss_start": float,
    "loss_stop": float,
    "loss_step": float,
    "mu": object,
    "bsteps": int,
    "recurrence": bool,
    "eta_alice": float,
    "eta_bob": float,
    "y0": float,
    "e_d": float,
    "e0": float,
    "q": float,
    "f_ec": float,
    "pulses": float,
    "confidence": float,
    "cutoff": float,
    "seed": int,
    "samples": int,
    "e_d_start": float,
    "e_d_stop": float,
    "e_d_step": float,
}

_OPT_BOUNDS = SearchBounds(lambda_min=1e-3, lambda_max=2.5)


def _coerce(key: str, value):
    want = _CONFIG_FIELDS[key]
    if key == "mu":
        if value == "opt":
            return "opt"
        if isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0:
            return float(value)
        raise ConfigError(f"config key 'mu' must be a positive number or 'opt', got {value!r}")
    if key == "schemes":
        if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
            raise ConfigError("config key 'schemes' must be a list of scheme names")
        for s in value:
            if s not in ALL_SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(ALL_SCHEMES)}")
        if not value:
            raise ConfigError("config key 'schemes' must not be empty")
        return tuple(value)
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config key {key!r} must be a boolean, got {value!r}")
        return value
    if want is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigError(f"config key {key!r} must be an integer, got {value!r}")
        return int(value)
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} must be a number, got {value!r}")
        return float(value)
    return value


def load_config(path: str) -> dict:
    """Read a flat TOML file, rejecting unknown keys."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    out = {}
    for key, value in raw.items():
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        out[key] = _coerce(key, value)
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


def format_row(pt: RatePoint, cutoff: float | None, notes: list[str]) -> str:
    rate = pt.rate
    if cutoff is not None and 0.0 < rate < cutoff:
        notes.append(
            f"note: rate {rate:.3e} below cutoff {cutoff:.1e} "
            f"(scheme={pt.scheme}, loss_db={_fmt(pt.loss_db)}); reported as 0"
        )
        rate = 0.0
    fields = [
        _fmt(pt.loss_db),
        pt.scheme,
        _fmt(pt.mu),
        _fmt(pt.gain),
        _fmt(pt.qber),
        _fmt(pt.delta_b),
        _fmt(pt.delta_p),
        _fmt(pt.bsteps),
        _fmt(pt.recurrence),
        _fmt(rate),
    ]
    return ",".join(fields)


def _dead_point(loss_db: float, scheme: str, bsteps: int, recurrence: bool) -> RatePoint:
    nan = float("nan")
    return RatePoint(loss_db, scheme, nan, nan, nan, nan, nan, bsteps, recurrence, 0.0)


def _entanglement_point(
    scheme: str,
    loss_db: float,
    cfg: SweepConfig,
    bsteps: int,
    recurrence: bool,
    flc: FluctuationParams | None,
) -> RatePoint:
    placement = Placement.MIDDLE if scheme == SCHEME_ENT_MIDDLE else Placement.AT_ALICE
    scn = ChannelScenario(placement, loss_db, cfg.eta_alice, cfg.eta_bob, cfg.y0)
    pp = cfg.postprocessing()

    def point_at(lam: float) -> RatePoint:
        src = SourceParams(lam)
        if flc is not None:
            return finite_key_rate(src, scn, pp, flc, bsteps, recurrence, e_d=cfg.e_d)
        return bstep_rate(src, scn, pp, bsteps, recurrence, e_d=cfg.e_d)

    if cfg.mu == "opt":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lam, best = optimize_lambda(lambda lam: point_at(lam).rate, _OPT_BOUNDS)
        if best <= 0.0:
            return _dead_point(loss_db, scheme, bsteps, recurrence)
        return point_at(lam)
    return point_at(cfg.mu / 2.0)


def _baseline_point(scheme: str, loss_db: float, cfg: SweepConfig) -> RatePoint:
    pp = cfg.postprocessing()
    if scheme == SCHEME_COHERENT:

        def point_at(mu: float) -> RatePoint:
            cs = CoherentSetup.at_loss(loss_db, mu, cfg.eta_bob, cfg.y0, cfg.e_d)
            return coherent_decoy_rate(cs, pp, loss_db)

        search = lambda mu: point_at(mu).rate
    else:
        scn = ChannelScenario(Placement.AT_ALICE, loss_db, cfg.eta_alice, cfg.eta_bob, cfg.y0)

        def point_at(mu: float) -> RatePoint:
            return triggering_pdc_decoy_rate(SourceParams(mu / 2.0), scn, pp, e_d=cfg.e_d)

        search = lambda mu: point_at(mu).rate

    if cfg.mu == "opt":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mu, best = optimize_lambda(search, _OPT_BOUNDS)
        if best <= 0.0:
            return _dead_point(loss_db, scheme, 0, False)
        return point_at(mu)
    return point_at(cfg.mu)


def run_sweep(
    cfg: SweepConfig,
    fluctuation: bool = False,
    variants: list[tuple[int, bool]] | None = None,
) -> tuple[list[str], list[str]]:
    """Evaluate every (scheme, loss, variant) cell; returns (csv lines, stderr notes)."""
    flc = None
    cutoff = None
    if fluctuation:
        bad = [s for s in cfg.schemes if s not in ENT_SCHEMES]
        if bad:
            raise ConfigError(
                f"finite-size analysis covers the entanglement schemes only, got {bad[0]!r}"
            )
        flc = FluctuationParams(cfg.pulses, cfg.confidence, cfg.cutoff)
        cutoff = cfg.cutoff
    if variants is None:
        variants = [(cfg.bsteps, cfg.recurrence)]

    points = []
    for scheme in cfg.schemes:
        for loss_db in cfg.loss_grid():
            if scheme in ENT_SCHEMES:
                for bsteps, recurrence in variants:
                    try:
                        points.append(
                            _entanglement_point(scheme, loss_db, cfg, bsteps, recurrence, flc)
                        )
                    except (ValueError, ArithmeticError) as exc:
                        raise NumericError(
                            f"scheme={scheme} loss_db={_fmt(loss_db)} "
                            f"bsteps={bsteps} recurrence={_fmt(recurrence)}: {exc}"
                        ) from exc
            else:
                try:
                    points.append(_baseline_point(scheme, loss_db, cfg))
                except (ValueError, ArithmeticError) as exc:
                    raise NumericError(f"scheme={scheme} loss_db={_fmt(loss_db)}: {exc}") from exc

    points.sort(key=lambda p: (p.scheme, p.loss_db, p.bsteps, p.recurrence))
    notes: list[str] = []
    lines = [CSV_HEADER]
    lines.extend(format_row(p, cutoff, notes) for p in points)
    return lines, notes


def run_optimize_mu(cfg: SweepConfig) -> list[str]:
    """Optimal mean pair number against misalignment, for both detector regimes."""
    if cfg.e_d_step <= 0.0 or cfg.e_d_stop < cfg.e_d_start:
        raise ConfigError("e_d grid must have positive step and stop >= start")
    count = int(math.floor((cfg.e_d_stop - cfg.e_d_start) / cfg.e_d_step + 1e-9)) + 1
    e_ds = [cfg.e_d_start + i * cfg.e_d_step for i in range(count)]
    rows = []
    for regime in (Regime.ETA_A_NEAR_ONE, Regime.ETA_A_SMALL):
        for e_d, mu in optimal_mu_curve(e_ds, regime, f_ec=cfg.f_ec):
            rows.append((regime.value, e_d, mu))
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = [MU_HEADER]
    lines.extend(f"{_fmt(e_d)},{regime},{_fmt(mu)}" for regime, e_d, mu in rows)
    return lines


MC_GRID_LAM = (0.0265, 0.1, 0.5)
MC_GRID_LOSS = (0.0, 10.0, 20.0)
MC_GRID_ED = (0.0, 0.015, 0.1)
MC_MIN_COINCIDENCES = 100


def _mc_cell(src, setup, samples, seed, q_model, e_model):
    """One validation cell: z-scores against the closed forms, or None if starved."""
    try:
        est = estimate(src, setup, samples, seed=seed)
    except ValueError:
        return None, math.nan, math.nan
    if est.n_coincidences < MC_MIN_COINCIDENCES:
        return None, math.nan, math.nan
    sigma_q = math.sqrt(q_model * (1.0 - q_model) / samples)
    sigma_e = math.sqrt(e_model * (1.0 - e_model) / est.n_coincidences)
    z_q = (est.gain - q_model) / sigma_q if sigma_q > 0 else math.inf
    z_e = (est.qber - e_model) / sigma_e if sigma_e > 0 else math.inf
    return est, z_q, z_e


def run_mc_validate(cfg: SweepConfig) -> tuple[list[str], bool]:
    """Simulate the full validation grid; returns (report lines, all cells ok)."""
    cells = [
        (lam, loss, e_d)
        for lam in MC_GRID_LAM
        for loss in MC_GRID_LOSS
        for e_d in MC_GRID_ED
    ]
    seeds = np.random.SeedSequence(cfg.seed).spawn(2 * len(cells))
    lines = [
        f"validation grid: {len(cells)} cells, {cfg.samples} samples each, seed {cfg.seed}",
        "lam loss_db e_d gain_model gain_mc z_gain qber_model qber_mc z_qber status",
    ]
    ok = True
    n_pass = 0
    for i, (lam, loss, e_d) in enumerate(cells):
        scn = ChannelScenario(Placement.MIDDLE, loss, cfg.eta_alice, cfg.eta_bob, cfg.y0)
        setup = scenario_setup(scn, e_d=e_d)
        src = SourceParams(lam)
        q_model = overall_gain(src, setup)
        e_model, _ = overall_qber(src, setup)

        est, z_q, z_e = _mc_cell(src, setup, cfg.samples, seeds[2 * i], q_model, e_model)
        if est is None:
            status = "insufficient"
        elif abs(z_q) <= 3.0 and abs(z_e) <= 3.0:
            status = "pass"
        else:
            est, z_q, z_e = _mc_cell(src, setup, cfg.samples, seeds[2 * i + 1], q_model, e_model)
            if est is None:
                status = "insufficient"
            elif abs(z_q) <= 3.0 and abs(z_e) <= 3.0:
                status = "retried-pass"
            else:
                status = "fail"
                ok = False
        if status in ("pass", "retried-pass"):
            n_pass += 1
        gain_mc = _fmt(est.gain) if est is not None else "nan"
        qber_mc = _fmt(est.qber) if est is not None else "nan"
        lines.append(
            f"{_fmt(lam)} {_fmt(loss)} {_fmt(e_d)} "
            f"{_fmt(q_model)} {gain_mc} {z_q:+.2f} "
            f"{_fmt(e_model)} {qber_mc} {z_e:+.2f} {status}"
        )
    lines.append(f"{n_pass}/{len(cells)} cells passed")
    return lines, ok


def preset_run(name: str, cfg: SweepConfig) -> tuple[list[str], list[str]]:
    """Bundled configurations behind the reference figures in demos/."""
    if name == "fig3":
        cfg = replace(
            cfg, schemes=ALL_SCHEMES, mu="opt", loss_start=0.0, loss_stop=70.0, loss_step=1.0
        )
        return run_sweep(cfg)
    if name == "fig4":
        cfg = replace(
            cfg,
            schemes=(SCHEME_ENT_MIDDLE,),
            mu="opt",
            loss_start=0.0,
            loss_stop=75.0,
            loss_step=1.0,
        )
        variants = [(0, False), (1, False), (2, False), (3, False), (1, True), (2, True), (3, True)]
        return run_sweep(cfg, variants=variants)
    if name == "fig5":
        cfg = replace(
            cfg,
            schemes=(SCHEME_ENT_MIDDLE,),
            mu=0.053,
            pulses=1.5e11,
            confidence=50.0,
            cutoff=1e-10,
            loss_start=0.0,
            loss_stop=60.0,
            loss_step=1.0,
        )
        variants = [(0, True), (1, True), (2, True), (3, True)]
        return run_sweep(cfg, fluctuation=True, variants=variants)
    if name == "fig6":
        return run_optimize_mu(cfg), []
    raise ConfigError(f"unknown preset {name!r}; choose from fig3, fig4, fig5, fig6")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdcqkd",
        description="Key-rate sweeps and model validation for entangled-pair QKD setups.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="flat TOML file with defaults")
        p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
        p.add_argument("--seed", type=int, metavar="U64", help="seed for stochastic runs")

    def sweep_flags(p):
        p.add_argument("--loss", metavar="START:STOP:STEP", help="loss grid in dB")
        p.add_argument(
            "--scheme",
            action="append",
            metavar="NAME",
            help=f"repeatable; one of {', '.join(ALL_SCHEMES)}",
        )
        p.add_argument("--bsteps", type=int, metavar="K", help="error-detection rounds")
        p.add_argument(
            "--recurrence",
            action="store_true",
            default=None,
            help="also distill key from failed parity blocks",
        )
        p.add_argument("--mu", metavar="VALUE|opt", help="mean photon (pair) number, or 'opt'")

    p_sweep = sub.add_parser("sweep", help="asymptotic key-rate sweep over channel loss")
    common(p_sweep)
    sweep_flags(p_sweep)

    p_mu = sub.add_parser("optimize-mu", help="optimal source brightness vs misalignment")
    common(p_mu)

    p_flc = sub.add_parser("fluctuation", help="sweep with statistical-fluctuation analysis")
    common(p_flc)
    sweep_flags(p_flc)
    p_flc.add_argument("--pulses", type=float, metavar="N", help="number of pump pulses")
    p_flc.add_argument(
        "--confidence", type=float, metavar="S", help="confidence exponent (failure prob e^-s)"
    )

    p_mc = sub.add_parser("mc-validate", help="Monte Carlo check of the closed forms")
    common(p_mc)
    p_mc.add_argument("--samples", type=float, metavar="N", help="pulses per grid cell")

    p_preset = sub.add_parser("preset", help="run a bundled configuration")
    p_preset.add_argument("name", choices=["fig3", "fig4", "fig5", "fig6"])
    common(p_preset)

    return parser


def _parse_loss(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--loss expects START:STOP:STEP, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--loss expects numbers, got {text!r}") from exc
    return start, stop, step


def _resolve_config(args) -> SweepConfig:
    cfg = SweepConfig()
    overrides = load_config(args.config) if args.config else {}
    for key, value in overrides.items():
        setattr(cfg, key, value)
    if getattr(args, "loss", None):
        cfg.loss_start, cfg.loss_stop, cfg.loss_step = _parse_loss(args.loss)
    if getattr(args, "scheme", None):
        cfg.schemes = _coerce("schemes", args.scheme)
    if getattr(args, "bsteps", None) is not None:
        cfg.bsteps = _coerce("bsteps", args.bsteps)
    if getattr(args, "recurrence", None):
        cfg.recurrence = True
    if getattr(args, "mu", None) is not None:
        try:
            cfg.mu = _coerce("mu", args.mu if args.mu == "opt" else float(args.mu))
        except ValueError as exc:
            raise ConfigError(f"--mu must be a number or 'opt', got {args.mu!r}") from exc
    if getattr(args, "pulses", None) is not None:
        cfg.pulses = args.pulses
    if getattr(args, "confidence", None) is not None:
        cfg.confidence = args.confidence
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "samples", None) is not None:
        cfg.samples = _coerce("samples", args.samples)
    return cfg


def _emit(lines: list[str], out_path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "sweep":
            lines, notes = run_sweep(cfg)
        elif args.command == "fluctuation":
            lines, notes = run_sweep(cfg, fluctuation=True)
        elif args.command == "optimize-mu":
            lines, notes = run_optimize_mu(cfg), []
        elif args.command == "mc-validate":
            lines, ok = run_mc_validate(cfg)
            _emit(lines, args.out)
            if not ok:
                print("validation failed: at least one cell outside 3 sigma", file=sys.stderr)
                return EXIT_VALIDATION
            return EXIT_OK
        else:
            lines, notes = preset_run(args.name, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for note in notes:
        print(note, file=sys.stderr)
    _emit(lines, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
