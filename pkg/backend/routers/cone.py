import numpy as np

from backend.errors import ArgumentError, ReferenceResolutionError, ToolkitError
from backend.routers.common import add_workspace_argument, new_report, open_workspace, resolve_param
from backend.tools.hyperbolic_cone import DEFAULT_RADII, cone_over_subspace, default_radii, projection_audit
from backend.utils import ReportDocument
from utils.logger import logger

logger = logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("cone", help="Hyperbolic cone of radius r0 over a subspace")
    add_workspace_argument(parser)
    parser.add_argument("--subspace", required=True, help="Subspace name")
    parser.add_argument("--r0", type=float)
    parser.add_argument("--radii", type=int, help=f"Radii sampled per base point (default {DEFAULT_RADII})")
    parser.add_argument("--pairs", type=int, default=1000, help="Random pairs for the audits")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run)


def law_of_cosines_excess(C, pairs: int, seed: int) -> float:
    """Largest relative gap between cosh of the cone distance and the hyperbolic law of cosines."""
    rng = np.random.default_rng(seed)
    count = len(C.points)
    first = rng.integers(1, count, pairs)
    second = rng.integers(1, count, pairs)
    r = np.array([C.points[k].radius for k in first])
    rp = np.array([C.points[k].radius for k in second])
    y = np.array([C.points[k].base for k in first])
    yp = np.array([C.points[k].base for k in second])
    theta = np.minimum(np.pi, C.base.dist[y, yp] / np.sinh(C.r0))
    expected = np.cosh(r) * np.cosh(rp) - np.sinh(r) * np.sinh(rp) * np.cos(theta)
    observed = np.cosh(C.distance_matrix[first, second])
    return float(np.max(np.abs(observed - expected) / expected))


def run(args) -> ReportDocument:
    try:
        ws = open_workspace(args.workspace)
        if args.subspace not in ws.subspaces:
            raise ReferenceResolutionError(f"unknown subspace {args.subspace}")
        r0 = resolve_param(args, ws, "r0", required=True)
        m = resolve_param(args, ws, "radii", default=DEFAULT_RADII)
        report = new_report(args, "subspace", "r0", "radii", "pairs", "seed")
        C = cone_over_subspace(ws.subspaces[args.subspace], r0, default_radii(r0, m))
        report.add("r0", r0)
        report.add("base_points", C.base.n)
        report.add("radii", list(C.radii))
        report.add("points", len(C.points), "apex + base points x radii")
        report.add("diameter", float(C.distance_matrix.max()))
        excess = law_of_cosines_excess(C, args.pairs, args.seed)
        report.audit("cosh d = cosh r cosh r' - sinh r sinh r' cos theta (relative)", excess, 1e-9, excess <= 1e-9)
        audit = projection_audit(C, args.pairs, args.seed)
        report.audit("2 min(r, r') theta / pi <= d", audit.lower_ok, True, audit.lower_ok)
        report.audit("d <= |r - r'| + sqrt(sinh r sinh r') theta", audit.upper_ok, True, audit.upper_ok)
        report.audit(
            f"projection Lipschitz on {audit.lipschitz_pairs} pairs", audit.worst_lipschitz_excess, 0.0, audit.lipschitz_ok
        )
        report.notes.append(f"audits over {args.pairs} random pairs, seed {args.seed}")
        return report
    except ToolkitError as e:
        logger.error(f"cone failed: {e}")
        raise
    except ValueError as e:
        logger.error(f"cone failed: {e}")
        raise ArgumentError(str(e)) from None
