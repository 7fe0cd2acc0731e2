"""Entry point: ``python -m mlmc_qdrift_plots <command> ...``."""

import argparse
import sys
from pathlib import Path

from .render import SchemaError, render_all, render_fig1, render_fig2, render_fig3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlmc_qdrift_plots", description="Render figures from mlmc-qdrift CSV outputs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("render-all", help="render all three figures from an output tree")
    sp.add_argument("--in", dest="in_dir", type=Path, required=True, help="mlmc-qdrift output root")
    sp.add_argument("--out", dest="out_dir", type=Path, required=True, help="image directory")

    for name in ("fig1", "fig2", "fig3"):
        sp = sub.add_parser(f"render-{name}", help=f"render {name} from one CSV")
        sp.add_argument("--csv", type=Path, required=True)
        sp.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "render-all":
            for path in render_all(args.in_dir, args.out_dir):
                print(f"wrote {path}")
        else:
            renderer = {
                "render-fig1": render_fig1,
                "render-fig2": render_fig2,
                "render-fig3": render_fig3,
            }[args.command]
            print(f"wrote {renderer(args.csv, args.out)}")
        return 0
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
