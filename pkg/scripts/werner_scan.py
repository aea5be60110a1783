"""Tabulate verdict, partial-transpose minimum and constructive q across the Werner family.

    python3 scripts/werner_scan.py --grid 101 -o werner.tsv
"""

import argparse
import sys

from qsep.cli import DEFAULT_TOLERANCES, SCAN_HEADER, werner_rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=101)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    rows = werner_rows(args.grid, DEFAULT_TOLERANCES)
    text = "\n".join("\t".join(r) for r in [SCAN_HEADER, *rows]) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    flip = next(float(r[0]) for r in rows if r[1] == "entangled")
    print(f"first entangled grid point: p = {flip:.4f} (threshold 1/3)", file=sys.stderr)


if __name__ == "__main__":
    main()
