from backend.errors import ArgumentError, ToolkitError
from backend.load_data import dump_workspace
from backend.tools.generators import circle_document, free_group_document, tree_family_document
from utils.logger import logger

logger = logger(__name__)


def _sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s]
    except ValueError:
        raise ArgumentError(f"--sizes expects comma separated integers, got {text!r}") from None


def register(subparsers) -> None:
    parser = subparsers.add_parser("demo", help="Emit a ready-to-run workspace document")
    kinds = parser.add_subparsers(dest="kind", required=True)

    circle = kinds.add_parser("circle", help="Circle of perimeter 2 pi sinh r0")
    circle.add_argument("--n", type=int, default=256)
    circle.add_argument("--r0", type=float, default=1.0)

    tree = kinds.add_parser("tree-family", help="Random tree with subtrees pairwise sharing at most one vertex")
    tree.add_argument("--seed", type=int, default=0)
    tree.add_argument("--sizes", default="4,4,4")
    tree.add_argument("--vertices", type=int)
    tree.add_argument("--r0", type=float, default=1.0)

    free = kinds.add_parser("free-group", help="Cayley ball of F(a, b) with translates of a relator axis")
    free.add_argument("--radius", type=int, default=6)
    free.add_argument("--relator", default="ababab")
    free.add_argument("--translate-radius", type=int)

    parser.set_defaults(handler=run)


def run(args) -> str:
    """
    ## Generate a demo workspace

    ### Returns
    The document text; it parses back to the same workspace.

    ### Raises
    - **ToolkitError**: If a parameter is out of range or the relator is not cyclically reduced
    """
    try:
        if args.kind == "circle":
            doc = circle_document(args.n, args.r0)
        elif args.kind == "tree-family":
            doc = tree_family_document(args.seed, _sizes(args.sizes), args.vertices, args.r0)
        else:
            doc = free_group_document(args.radius, args.relator, args.translate_radius)
        logger.info(f"demo {args.kind} generated")
        return dump_workspace(doc)
    except ToolkitError as e:
        logger.error(f"demo failed: {e}")
        raise
    except ValueError as e:
        logger.error(f"demo failed: {e}")
        raise ArgumentError(str(e)) from None
