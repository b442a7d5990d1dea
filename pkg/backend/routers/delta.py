from backend.errors import ArgumentError, ToolkitError
from backend.routers.common import add_workspace_argument, new_report, open_workspace
from backend.tools.metric_core import (
    DEFAULT_DELTA_SAMPLES,
    SLACK,
    WeightedGraph,
    four_point_delta,
    resolve_delta_mode,
    thin_triangle_constant,
)
from backend.tools.subspace_geometry import (
    cylinder_check,
    is_strongly_quasiconvex,
    largest_piece_detail,
    quasi_convexity_constant,
)
from backend.utils import ReportDocument
from utils.logger import logger

logger = logger(__name__)

THIN_LIMIT = 400


def register(subparsers) -> None:
    parser = subparsers.add_parser("delta", help="Four-point hyperbolicity constant of a workspace space")
    add_workspace_argument(parser)
    parser.add_argument("--mode", choices=["auto", "exact", "sampled"], default="auto")
    parser.add_argument("--samples", type=int, default=DEFAULT_DELTA_SAMPLES)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--thin", action="store_true", help="Also compute the thin-triangle constant (graphs only)")
    parser.add_argument("--subspaces", action="store_true", help="Report quasi-convexity of every declared subspace")
    parser.set_defaults(handler=run)


def run(args) -> ReportDocument:
    """
    ## Four-point delta of the workspace space

    ### Returns
    Report with delta, the sampling mode and, on request, the thin-triangle
    constant and per-subspace convexity entries.

    ### Raises
    - **ToolkitError**: If the document is invalid
    """
    try:
        ws = open_workspace(args.workspace)
        space = ws.space
        n = space.n
        mode = resolve_delta_mode(n, args.mode)
        report = new_report(args, "mode", "seed", "thin", "subspaces")
        delta = four_point_delta(space, mode=mode, samples=args.samples, seed=args.seed, workers=args.threads)
        report.add("points", n)
        report.add("delta", delta, "max over quadruples of (largest - middle pair sum) / 2")
        report.add("delta.mode", mode)
        if mode == "sampled":
            report.notes.append(f"delta is a lower estimate from {args.samples} quadruples, seed {args.seed}")
        if args.thin:
            if not isinstance(space, WeightedGraph):
                raise ArgumentError("--thin needs a graph space")
            if n > THIN_LIMIT:
                raise ArgumentError(f"--thin stores every fixed geodesic; limited to {THIN_LIMIT} vertices")
            tau = thin_triangle_constant(space)
            report.add("thin_triangle", tau, "max distance from a fixed side to the union of the other two")
            if all(w == 1.0 for _, _, w in space.edges):
                audit_cross_bounds(report, delta, tau)
            elif integer_weights(space) and resolve_delta_mode(subdivided_size(space)) == "exact":
                unit = space.subdivide()
                unit_delta = four_point_delta(unit, mode="exact", workers=args.threads)
                unit_tau = thin_triangle_constant(unit)
                report.add("delta.subdivided", unit_delta, "four-point delta of the unit subdivision")
                report.add("thin_triangle.subdivided", unit_tau, "fixed-geodesic thinness of the unit subdivision")
                audit_cross_bounds(report, unit_delta, unit_tau)
                report.notes.append(f"cross-bounds audited on the unit subdivision ({unit.n} vertices)")
            else:
                report.notes.append("cross-bounds need integer edge weights and an exact-size subdivision; not audited")
            report.notes.append("fixed-geodesic thinness: smallest-index neighbour on a shortest path")
        if args.subspaces:
            if not isinstance(space, WeightedGraph):
                raise ArgumentError("--subspaces needs a graph space")
            for name, Y in ws.subspaces.items():
                report.add(f"subspace.{name}.quasiconvexity", quasi_convexity_constant(Y), "max distance of a fixed geodesic point to Y")
                report.add(f"subspace.{name}.strongly_quasiconvex", is_strongly_quasiconvex(Y, delta).holds)
                check = cylinder_check(Y, delta)
                report.audit(f"cyl({name}) inside {name}^+20delta", check.contained, True, check.contained)
            if len(ws.subspaces) > 1:
                piece = largest_piece_detail(list(ws.subspaces.values()), delta)
                report.add("largest_piece", piece.value, "max diameter of pairwise 20 delta overlaps")
        logger.info(f"delta computed: {delta}")
        return report
    except ToolkitError as e:
        logger.error(f"delta failed: {e}")
        raise
    except ValueError as e:
        logger.error(f"delta failed: {e}")
        raise ArgumentError(str(e)) from None


def integer_weights(space: WeightedGraph) -> bool:
    return all(abs(w - round(w)) <= SLACK and round(w) >= 1 for _, _, w in space.edges)


def subdivided_size(space: WeightedGraph) -> int:
    return space.n + sum(int(round(w)) - 1 for _, _, w in space.edges)


def audit_cross_bounds(report: ReportDocument, delta: float, tau: float) -> None:
    report.audit("thin_triangle <= 4 delta", tau, 4 * delta, tau <= 4 * delta + SLACK)
    report.audit("delta <= 8 thin_triangle", delta, 8 * tau, delta <= 8 * tau + SLACK)
