"""Command line entry: hamsoc-plot --in DIR [--benchmark FLOAT] --out FILE.

`--in` may repeat (with optional parallel `--label`) to overlay algorithms.
Errors are reported as one JSON object on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bundle import load_histories
from .render import render

__all__ = ["main"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hamsoc-plot")
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        help="artifact directory (repeat to overlay)")
    parser.add_argument("--label", dest="labels", action="append",
                        help="legend label per --in (defaults to dir name)")
    parser.add_argument("--benchmark", type=float, default=None,
                        help="horizontal reference value for the mean panel")
    parser.add_argument("--out", required=True, help="output .svg or .png")
    args = parser.parse_args(argv)
    labels = args.labels or []
    if labels and len(labels) != len(args.inputs):
        parser.error("--label must be given once per --in")
    try:
        bundle = None
        for i, directory in enumerate(args.inputs):
            label = labels[i] if labels else None
            part = load_histories(directory, label=label, benchmark=args.benchmark)
            bundle = part if bundle is None else bundle.merge(part)
        render(bundle, args.out)
    except Exception as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
