import argparse
import sys

from dotenv import load_dotenv

load_dotenv(override=False)

from backend.errors import ToolkitError  # noqa: E402
from backend.routers import cone, coneoff, delta, demo, mu, rips, sc_check  # noqa: E402
from utils.helpers import render  # noqa: E402
from utils.logger import logger  # noqa: E402

logger = logger("coneoff")

ROUTERS = (delta, mu, cone, coneoff, rips, sc_check, demo)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coneoff", description="Finite models of hyperbolic spaces, cones and cone-offs")
    parser.add_argument("--output", choices=["text", "kv"], default="text", help="Report format")
    parser.add_argument("--out", help="Write the report to this path instead of stdout")
    parser.add_argument("--threads", type=int, default=1, help="Worker threads for the exact delta scan")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for router in ROUTERS:
        router.register(subparsers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        result = args.handler(args)
    except ToolkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    text = result if isinstance(result, str) else render(result, args.output)
    if args.out:
        with open(args.out, "w") as file:
            file.write(text)
        logger.info(f"report written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
