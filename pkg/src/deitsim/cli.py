"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import SweepSpec, parse_document
from .errors import ConfigError, InvalidParameter, SolverError
from .runner import (FIGURES, apply_overrides, dump_json, reproduce_figure,
                     run_conditions, run_populations, run_spectrum, write_sweep)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

log = logging.getLogger("deitsim")


def _common(p, config_required=True):
    if config_required:
        p.add_argument("--config", required=True, type=Path, help="config document")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--ablate-srs", action="store_true", help="drop the SRS term")
    p.add_argument("--literal-decay", action="store_true",
                   help="solve populations without excited-state repopulation")
    p.add_argument("--quadrature", type=int, metavar="N", help="Gauss-Hermite order")
    p.add_argument("--stationary", action="store_true", help="skip Doppler averaging")


def build_parser():
    parser = argparse.ArgumentParser(prog="deitsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="probe transmission spectrum")
    _common(p)
    p = sub.add_parser("populations", help="steady-state sublevel populations")
    _common(p)
    p = sub.add_parser("conditions", help="EIT and gain condition ratios")
    _common(p)
    p = sub.add_parser("sweep", help="parameter sweep")
    _common(p)
    p.add_argument("--param", help="config key to sweep (overrides [sweep])")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--output", choices=("gain", "populations", "spectrum"), default=None)
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("figure", help="reproduce a figure dataset")
    p.add_argument("figure_id", choices=FIGURES)
    _common(p, config_required=False)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _overrides(args):
    out = {}
    if args.ablate_srs:
        out["ablate_srs"] = True
    if args.literal_decay:
        out["population_decay"] = "literal"
    if args.quadrature is not None:
        out["quadrature_order"] = args.quadrature
    if args.stationary:
        out["doppler"] = False
    return out


def _load(args):
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
    doc = parse_document(text)
    return doc, apply_overrides(doc.config, _overrides(args))


def _sweep_spec(args, doc):
    if args.param is None:
        if doc.sweep is None:
            raise ConfigError("no [sweep] section and no --param given")
        spec = doc.sweep
        if args.output:
            spec = SweepSpec(spec.parameter, spec.values, args.output,
                             spec.series_parameter, spec.series_values)
        return spec
    if None in (args.start, args.stop, args.count):
        raise ConfigError("--param needs --start, --stop and --count")
    return SweepSpec.linear(args.param, args.start, args.stop, args.count,
                            args.output or "gain")


def run(args):
    if args.quadrature is not None and args.quadrature < 8:
        raise ConfigError("--quadrature must be >= 8")
    if args.command == "figure":
        reproduce_figure(args.figure_id, args.out, args.workers, _overrides(args))
        return
    doc, config = _load(args)
    if args.command == "spectrum":
        spec = run_spectrum(config, args.out)
        gain = spec.annotations["gain"]
        print("gain: none" if gain is None else
              f"gain: {gain['gain']:.6g} at {gain['center']:.6g} MHz, "
              f"FWHM {gain['fwhm']:.4g} MHz")
    elif args.command == "populations":
        run_populations(config, args.out)
    elif args.command == "conditions":
        report = run_conditions(config)
        sys.stdout.write(dump_json(report.as_dict()))
    elif args.command == "sweep":
        write_sweep(config, _sweep_spec(args, doc), args.out, workers=args.workers)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        run(args)
    except (ConfigError, InvalidParameter) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
