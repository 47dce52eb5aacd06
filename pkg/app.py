# app.py
"""
aoi-mimo: packet error probability, age of information and age-limited capacity of
slotted random access to a massive-MIMO base station.

Subcommands:
  pep         sweep p_e and AoI over one parameter (exact / asymptotic / monte_carlo)
  aoi-curve   AoI against spectral efficiency at a fixed error target
  capacity    age-limited capacity, optionally the supremum rate for (eps, N)
  ura-points  log2(1 + M/K_a) bound points
  validate    cross-check exact, asymptotic and simulated results at one config
  plot        render a CSV written by pep / aoi-curve / ura-points as SVG

Exit codes: 0 ok, 1 usage error, 2 numerical or validation failure.
"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from mimo.errors import AoiMimoError, ConfigError
from mimo.monte_carlo import RngSpec
from mimo.system_model import DEFAULT_CONFIG, SystemConfig, load_config, noise_var_for_snr, validate
from plots import STYLES, emit_svg
from results import load_rows, save_rows, save_text, to_csv_text
from sweeps import (
    AXES,
    METHODS,
    SweepSpec,
    aoi_curve_rows,
    capacity_report,
    run_pep_sweep,
    run_validation,
    ura_points,
)
from utils import format_cell, parse_number_list

logger = logging.getLogger("aoi_mimo")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


# --- Config ---
LOG_LEVEL = os.environ.get("AOI_MIMO_LOG_LEVEL")
DEFAULT_SEED = 1
DEFAULT_TRIALS = 100_000
DEFAULT_ZETA = 0.7


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; usage errors here are exit 1
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- Logging ---
def configure_logging(verbose: bool) -> None:
    level = (LOG_LEVEL or ("INFO" if verbose else "WARNING")).upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


# --- Parser ---
def _common_parent() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Monte Carlo trials (or slots)")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--verbose", action="store_true", help="INFO-level logging")
    return p


def _file_parent() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--config", help="key=value config file; flags win over its values")
    return p


def _config_parent() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--n-users", "-N", type=int, dest="n_users")
    p.add_argument("--n-antennas", "-M", type=int, dest="n_antennas")
    p.add_argument("--tau", type=float, dest="attempt_prob")
    p.add_argument("--tx-power", type=float, dest="tx_power")
    p.add_argument("--noise-var", type=float, dest="noise_var")
    p.add_argument("--rho", type=float, dest="spectral_eff")
    p.add_argument("--snr", type=float, help="SNR in dB; sets noise_var = P 10^(-SNR/10)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parent()
    config_file = _file_parent()
    config = _config_parent()
    parser = _Parser(prog="aoi-mimo", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    pep = sub.add_parser("pep", parents=[common, config_file, config], help="sweep p_e and AoI")
    pep.add_argument("--axis", choices=AXES, required=True)
    pep.add_argument("--grid", required=True, help="comma list or start:stop:num")
    pep.add_argument("--methods", default="exact,asymptotic", help=f"subset of {','.join(METHODS)}")
    pep.add_argument("--svg", help="also render the curve to this SVG file")
    pep.add_argument("--log-y", action="store_true")

    curve = sub.add_parser("aoi-curve", parents=[common, config_file], help="AoI at a fixed error target")
    curve.add_argument("--eps", type=float, default=0.01)
    curve.add_argument("--zeta", type=float, help=f"default: M/N from --config, else {DEFAULT_ZETA}")
    curve.add_argument("--n-list", default="100,1000,10000,100000,inf", help="user counts; inf for the error-free curve")
    curve.add_argument("--rho-grid", help="comma list or start:stop:num (default: per-curve grid)")
    curve.add_argument("--svg")

    cap = sub.add_parser("capacity", parents=[common, config_file], help="age-limited capacity")
    cap.add_argument("--tau", type=float, help="default: attempt_prob from --config")
    cap.add_argument("--zeta", type=float, help="default: M/N from --config")
    cap.add_argument("--eps", type=float)
    cap.add_argument("--n", type=int, dest="n_users", help="default with --eps: n_users from --config")

    # no config key feeds the bound points; --config is still checked
    ura = sub.add_parser("ura-points", parents=[common, config_file], help="log2(1 + M/K_a) bound points")
    ura.add_argument("--m-list", default="30,45,60")
    ura.add_argument("--ka-list", default="50,75,100")
    ura.add_argument("--svg")

    val = sub.add_parser("validate", parents=[common, config_file, config], help="cross-method checks")
    val.add_argument("--ci-scale", type=float, default=1.0, help="multiplier on the Monte Carlo CI")

    plot = sub.add_parser("plot", parents=[common], help="render a CSV as SVG")
    plot.add_argument("csv")
    plot.add_argument("--style", choices=STYLES, default="pep")
    plot.add_argument("--log-y", action="store_true")
    return parser


# --- Config resolution ---
def resolve_config(args) -> SystemConfig:
    """Defaults, then the config file, then flags."""
    base = load_config(args.config) if args.config else DEFAULT_CONFIG
    overrides = {
        key: getattr(args, key)
        for key in ("n_users", "n_antennas", "attempt_prob", "tx_power", "noise_var", "spectral_eff")
        if getattr(args, key) is not None
    }
    config = base.with_updates(**overrides)
    if args.snr is not None:
        config = config.with_updates(noise_var=noise_var_for_snr(config.tx_power, args.snr))
    validate(config)
    return config


def _file_config(args) -> Optional[SystemConfig]:
    """The validated --config file on its own, or None without one."""
    if not args.config:
        return None
    config = load_config(args.config)
    validate(config)
    return config


def _rng(args) -> RngSpec:
    try:
        return RngSpec(args.seed)
    except ValueError as e:
        raise UsageError(str(e))


def _parse_list(raw: str, flag: str, **kwargs) -> list:
    try:
        return parse_number_list(raw, **kwargs)
    except ValueError as e:
        raise UsageError(f"{flag}: {e}")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        save_text(text, out)
    else:
        sys.stdout.write(text)


def _emit_rows(rows, args, style: str) -> None:
    if args.out:
        save_rows(rows, args.out)
    else:
        sys.stdout.write(to_csv_text(rows))
    if getattr(args, "svg", None):
        save_text(emit_svg(rows, style, log_y=getattr(args, "log_y", False)), args.svg)


# --- Commands ---
def cmd_pep(args) -> int:
    config = resolve_config(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    grid = _parse_list(args.grid, "--grid", integer=args.axis == "N")
    try:
        spec = SweepSpec(
            axis=args.axis, grid=tuple(grid), fixed=config, methods=methods, mc_trials=args.trials, rng=_rng(args)
        )
    except ValueError as e:
        raise UsageError(str(e))
    _emit_rows(run_pep_sweep(spec), args, "pep")
    return EXIT_OK


def cmd_aoi_curve(args) -> int:
    n_list = _parse_list(args.n_list, "--n-list", allow_inf=True)
    rho_grid = _parse_list(args.rho_grid, "--rho-grid") if args.rho_grid else None
    file_config = _file_config(args)
    zeta = args.zeta
    if zeta is None:
        zeta = file_config.zeta if file_config else DEFAULT_ZETA
    try:
        rows = aoi_curve_rows(args.eps, zeta, n_list, rho_grid)
    except ValueError as e:
        raise UsageError(str(e))
    _emit_rows(rows, args, "aoi_curve")
    return EXIT_OK


def cmd_capacity(args) -> int:
    file_config = _file_config(args)
    tau, zeta, n_users = args.tau, args.zeta, args.n_users
    if file_config:
        tau = file_config.attempt_prob if tau is None else tau
        zeta = file_config.zeta if zeta is None else zeta
        if args.eps is not None and n_users is None:
            n_users = file_config.n_users
    if tau is None or zeta is None:
        raise UsageError("--tau and --zeta are required without a --config file")
    try:
        report = capacity_report(tau, zeta, args.eps, n_users)
    except AoiMimoError:
        # NoValidSolutionError is a ValueError too; it is a numerical failure, not usage
        raise
    except ValueError as e:
        raise UsageError(str(e))
    _emit("".join(f"{k}={format_cell(v)}\n" for k, v in report.items()), args.out)
    return EXIT_OK


def cmd_ura_points(args) -> int:
    _file_config(args)
    m_list = _parse_list(args.m_list, "--m-list", integer=True)
    ka_list = _parse_list(args.ka_list, "--ka-list", integer=True)
    try:
        rows = ura_points(m_list, ka_list)
    except ValueError as e:
        raise UsageError(str(e))
    _emit_rows(rows, args, "ura")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = resolve_config(args)
    if args.trials < 1:
        raise UsageError("--trials must be ≥ 1")
    report = run_validation(config, args.trials, _rng(args), ci_scale=args.ci_scale)
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK if report["passed"] else EXIT_FAILURE


def cmd_plot(args) -> int:
    try:
        rows = load_rows(args.csv)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read {args.csv}: {e}")
    try:
        svg = emit_svg(rows, args.style, log_y=args.log_y)
    except ValueError as e:
        raise UsageError(str(e))
    _emit(svg, args.out)
    return EXIT_OK


COMMANDS = {
    "pep": cmd_pep,
    "aoi-curve": cmd_aoi_curve,
    "capacity": cmd_capacity,
    "ura-points": cmd_ura_points,
    "validate": cmd_validate,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"aoi-mimo {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"aoi-mimo {args.command}: invalid config: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"aoi-mimo {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AoiMimoError as e:
        logger.warning(f"{args.command} failed: {e}")
        print(f"aoi-mimo {args.command}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
