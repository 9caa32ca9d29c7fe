"""CLI: render figures from sampler trace files."""

import argparse
import sys

from .plotting import plot_diagnostics, plot_nmi
from .reader import TraceFormatError


def main(argv=None):
    parser = argparse.ArgumentParser(prog="traceplots",
                                     description="Figures from sampler trace files")
    sub = parser.add_subparsers(dest="command", required=True)

    p_nmi = sub.add_parser("nmi", help="NMI-vs-iteration curves, one per trace")
    p_nmi.add_argument("traces", nargs="+")
    p_nmi.add_argument("-o", "--out", required=True, help="output image path")

    p_diag = sub.add_parser("diagnostics",
                            help="active dishes, caps, and log-joint panels")
    p_diag.add_argument("trace")
    p_diag.add_argument("-o", "--out", required=True, help="output image path")

    args = parser.parse_args(argv)
    try:
        if args.command == "nmi":
            written = plot_nmi(args.traces, args.out)
        else:
            written = plot_diagnostics(args.trace, args.out)
    except TraceFormatError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
