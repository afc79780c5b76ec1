"""Command line entry point: ``vrrw analyze|simulate|flow|montecarlo|spectra|acceptance``.

Exit codes: 0 success, 2 invalid input, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import VRRWError
from .harness import RUNNERS, ExperimentConfig

EXIT_OK, EXIT_INVALID, EXIT_ACCEPTANCE = 0, 2, 3


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrrw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--matrix", help="example2 | complete:D | ones:D | cayley:N:g1,g2,...")
    common.add_argument("--seed", type=int)
    common.add_argument("--horizon", type=int)
    common.add_argument("--trajectories", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--r-class", dest="r_class", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("--initial", type=_floats, help="flow start, comma separated")
    common.add_argument("--h", type=float, help="flow step size")
    common.add_argument("--s-max", dest="s_max", type=float)

    for name in RUNNERS:
        sub.add_parser(name, parents=[common])
    acc = sub.add_parser("acceptance", help="run the acceptance criteria")
    acc.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "acceptance":
        from .acceptance import run_all

        results = run_all(args.only)
        return EXIT_OK if all(r.ok for r in results) else EXIT_ACCEPTANCE

    overrides = {k: getattr(args, k) for k in (
        "matrix", "seed", "horizon", "trajectories", "out", "r_class", "workers",
        "initial", "h", "s_max",
    )}
    try:
        config = ExperimentConfig.load(args.config, mode=args.command, **overrides)
        RUNNERS[args.command](config)
    except VRRWError as exc:
        print(f"vrrw: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
