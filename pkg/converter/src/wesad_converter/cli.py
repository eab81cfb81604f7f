"""``wesad-convert``: one subject archive per invocation.

Writes the canonical CSVs under ``--out/<subject>/`` and prints the
conversion manifest as a single JSON line, so converting a whole study
is a shell loop whose collected stdout is a JSON-lines manifest file.
"""

import argparse
import sys
from pathlib import Path

from .convert import ConversionError, convert_subject


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wesad-convert",
        description="convert a WESAD subject pickle to canonical wrist CSVs",
    )
    parser.add_argument(
        "--in", dest="in_path", required=True, metavar="PKL",
        help="path to the subject archive (e.g. S2.pkl)",
    )
    parser.add_argument(
        "--out", required=True, metavar="DIR",
        help="dataset root; files land in DIR/<subject>/",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        manifest = convert_subject(Path(args.in_path), Path(args.out))
    except (ConversionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(manifest.to_json())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
