"""figures render-all <manifest-dir> --out <dir>"""

import argparse
import sys

from .render import RenderError, render_all


def build_parser():
    ap = argparse.ArgumentParser(
        prog="figures",
        description="Render static images from quadmech CSV outputs.")
    sub = ap.add_subparsers(dest="command", required=True)
    ra = sub.add_parser("render-all",
                        help="render every figure whose inputs exist")
    ra.add_argument("manifest_dir", help="directory of a quadmech run")
    ra.add_argument("--out", required=True, help="image output directory")
    ra.add_argument("--workers", type=int, default=4)
    return ap


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rendered, gaps = render_all(args.manifest_dir, args.out,
                                    workers=args.workers)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for fid in rendered:
        print(f"rendered {fid}.png")
    for fid in gaps:
        print(f"missing-input {fid}")
    if not rendered:
        print("error: nothing to render", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
