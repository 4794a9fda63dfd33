import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from willmore_lab import __version__
from willmore_lab.exceptions import ConfigError, LabError
from willmore_lab.schemas import SUITE_NAMES, GridSpec, RadiiSpec, SuiteConfig, SurfaceSpec
from willmore_lab.services.report_writer import CSV_COLUMNS, write_csv, write_json
from willmore_lab.services.suite_runner import convergence_table, run_suite
from willmore_lab.services.surface_catalog import ZOO
from willmore_lab.utils.logger import lab_logger

EPILOG = f"""\
surfaces:
{chr(10).join(f"  {name:<26}{entry.description}" for name, entry in ZOO.items())}

CSV columns (--csv), one row per quartic sample:
  {", ".join(CSV_COLUMNS)}
  r_or_z is the local radius at a puncture or the complex chart point z; weight_zN is
  |q| multiplied by |z|^N.

exit codes: 0 all checks pass, 1 some check fails, 2 configuration error, 3 numerical abort.
environment: WILLMORE_LAB_THREADS, WILLMORE_LAB_LOG_DIR, WILLMORE_LAB_R_MIN, LOGFIRE_API_KEY.
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="willmore-lab",
        description="Check conformal-Gauss-map identities, Willmore energies and Bryant's quartic "
                    "on a catalog of immersed surfaces.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("suite_name", nargs="?", choices=SUITE_NAMES, metavar="SUITE",
                        help=f"one of: {', '.join(SUITE_NAMES)}")
    parser.add_argument("--suite", choices=SUITE_NAMES, help="same as the positional SUITE")
    parser.add_argument("--surface", help="zoo surface, e.g. sphere or ellipsoid(1,1,2)")
    parser.add_argument("--dsl-file", help="immersion written in the expression language")
    parser.add_argument("--grid", help="quadrature grid AxB")
    parser.add_argument("--jet-order", type=int, default=5, help="Taylor jet order, 2 to 6")
    parser.add_argument("--precision", choices=("double", "extended"), default="double")
    parser.add_argument("--radii", help="puncture radii r0:ratio:count")
    parser.add_argument("--out", help="JSON report path (default: stdout)")
    parser.add_argument("--csv", help="CSV path for the quartic sample table")
    parser.add_argument("--levels", type=int, help="run a convergence table over this many grid refinements")
    parser.add_argument("--seed", type=int, default=0, help="seed of random sample points and Möbius maps")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def config_from_args(args: argparse.Namespace) -> SuiteConfig:
    suite = args.suite or args.suite_name
    if suite is None:
        raise ConfigError("No suite given; pass SUITE or --suite")
    if args.suite and args.suite_name and args.suite != args.suite_name:
        raise ConfigError(f"Conflicting suites {args.suite_name!r} and {args.suite!r}")
    if args.surface and args.dsl_file:
        raise ConfigError("--surface and --dsl-file are mutually exclusive")
    surface = None
    if args.surface:
        surface = SurfaceSpec.parse(args.surface)
    elif args.dsl_file:
        surface = SurfaceSpec(dsl_file=args.dsl_file)
    return SuiteConfig(
        suite=suite,
        surface=surface,
        grid=GridSpec.parse(args.grid) if args.grid else None,
        jet_order=args.jet_order,
        precision=args.precision,
        radii=RadiiSpec.parse(args.radii) if args.radii else None,
        out=args.out,
        csv=args.csv,
        levels=args.levels,
        seed=args.seed,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = convergence_table(cfg) if cfg.levels is not None else run_suite(cfg)
        if cfg.out:
            write_json(report, cfg.out)
        else:
            sys.stdout.write(report.canonical_json() + "\n")
        if cfg.csv:
            write_csv(report, cfg.csv)
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(p) for p in err["loc"])
        message = f"{where}: {err['msg']}" if where else err["msg"]
        lab_logger.log_error("ValidationError", message, {"errors": [x["msg"] for x in e.errors()]})
        print(f"willmore-lab: {message}", file=sys.stderr)
        return ConfigError.exit_code
    except LabError as e:
        lab_logger.log_error(type(e).__name__, e.message, e.context)
        print(f"willmore-lab: {e.message}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        lab_logger.log_error("ValueError", str(e))
        print(f"willmore-lab: {e}", file=sys.stderr)
        return ConfigError.exit_code
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
