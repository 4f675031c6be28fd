"""Command line: render a figure spec into an output directory."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpecError, load_spec, render
from .sarm import SarmFormatError

__all__ = ["main"]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from SARM matrices and CSV curves")
    p.add_argument("--spec", required=True,
                   help="JSON figure spec (see plotkit.figures)")
    p.add_argument("--out", required=True, help="output directory")
    args = p.parse_args(argv)
    try:
        written = render(load_spec(args.spec), args.out)
    except (FigureSpecError, SarmFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
