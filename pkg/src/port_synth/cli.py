"""Command-line entry point.

Examples
--------
Full run on a config, writing ``loci.csv`` and ``report.json``::

    port-synth pipeline --config run.json --out-dir out/

Stop after an intermediate stage (``derive``, ``sweep``, ``bound``, ``synth``)::

    port-synth sweep --config run.json --out-dir out/ --tolerance-pct 2

Exit status: 0 all corners stable, 1 infeasible or some corner unstable,
2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .cli_io import STAGES, load_config, run_stage
from .errors import Infeasible, InputError, NumericalError

EXIT_OK, EXIT_UNSTABLE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("port_synth")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="port-synth",
        description="Robust compensator synthesis for a one-port RLC network.",
    )
    sub = p.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run up to the {stage} stage")
        sp.add_argument("--config", required=True, help="JSON config document")
        sp.add_argument("--out-dir", required=True, help="directory for artifacts")
        sp.add_argument("--grid-points", type=int, default=None)
        sp.add_argument("--tolerance-pct", type=float, default=None)
        sp.add_argument("--beta-tol", type=float, default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config).with_overrides(
            args.grid_points, args.tolerance_pct, args.beta_tol
        )
        code, paths = run_stage(args.stage, cfg, args.out_dir)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in paths:
        print(path)
    if code == EXIT_UNSTABLE:
        print("some perturbed interconnection is unstable", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
