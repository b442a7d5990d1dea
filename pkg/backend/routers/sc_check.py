import math

from backend.errors import ArgumentError, ToolkitError
from backend.routers.common import add_workspace_argument, new_report, open_workspace, resolve_param
from backend.tools.group_actions import DEFAULT_CAP, small_cancellation_report, validate_rotation_family
from backend.tools.hyperbolic_cone import DEFAULT_RADII
from backend.utils import ReportDocument
from utils.logger import logger

logger = logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("sc-check", help="Small-cancellation verdict for a rotation family")
    add_workspace_argument(parser)
    parser.add_argument("--delta0", type=float)
    parser.add_argument("--Delta0", type=float)
    parser.add_argument("--r0", type=float)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--cap", type=int)
    parser.add_argument("--radii", type=int)
    parser.add_argument("--centers", type=int, default=8, help="Base vertices whose r0/9 balls are measured")
    parser.add_argument("--delta-mode", choices=["auto", "exact", "sampled"], default="auto")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run)


def run(args) -> ReportDocument:
    """
    ## Check a rotation family against the small-cancellation thresholds

    ### Returns
    Report with delta, Delta, rho, both ratios, per-rotation checks, the
    local hyperbolicity of the rescaled cone-off and a pass/fail verdict.

    ### Raises
    - **ToolkitError**: If the document is invalid, a threshold is missing or the family is inconsistent
    """
    try:
        ws = open_workspace(args.workspace)
        if not ws.pairs:
            raise ArgumentError("sc-check needs at least one rotation line")
        delta0 = resolve_param(args, ws, "delta0", required=True)
        Delta0 = resolve_param(args, ws, "Delta0", required=True)
        r0 = resolve_param(args, ws, "r0", required=True)
        epsilon = resolve_param(args, ws, "epsilon", default=0.1)
        cap = resolve_param(args, ws, "cap", default=DEFAULT_CAP)
        radii = resolve_param(args, ws, "radii", default=DEFAULT_RADII)
        report = new_report(args, "delta0", "Delta0", "r0", "epsilon", "cap", "radii", "centers", "delta_mode", "seed")

        family = validate_rotation_family(ws.action, ws.pairs, ws.declared, cap)
        result = small_cancellation_report(
            ws.graph, ws.action, family, delta0, Delta0, r0, epsilon,
            cap=cap, radii=radii, centers=args.centers, delta_mode=args.delta_mode, seed=args.seed, workers=args.threads,
        )
        report.add("delta", result.delta, "four-point delta of X")
        report.add("delta.mode", result.delta_mode)
        report.add("largest_piece", result.largest_piece, "max diameter of Y_i^+20delta ∩ Y_j^+20delta")
        if result.largest_piece_pair is not None:
            i, j = result.largest_piece_pair
            report.add("largest_piece.pair", [family.pairs[i].label, family.pairs[j].label])
        report.add("rho", result.rho, "min translation length over nontrivial enumerated elements of the H_i")
        report.add("delta_ratio", result.delta_ratio, "delta / rho")
        report.add("piece_ratio", result.piece_ratio, "Delta / rho")
        for cone in result.cones:
            prefix = f"rotation.{cone.label}"
            report.add(f"{prefix}.strongly_quasiconvex", cone.strongly_quasiconvex)
            if cone.witness is not None:
                report.add(f"{prefix}.witness", list(cone.witness))
            report.add(f"{prefix}.rinj", cone.rinj.value)
            report.add(f"{prefix}.rinj.word", cone.rinj.word)
            report.add(f"{prefix}.rinj.enumerated", cone.rinj.enumerated)
            if cone.rinj.undefined:
                report.add(f"{prefix}.rinj.undefined", cone.rinj.undefined)
            if result.rescale_factor is not None:
                report.audit(
                    f"{cone.label}: scaled rinj on Y >= 2 pi sinh r0", cone.scaled_rinj_on_subspace,
                    2 * math.pi * math.sinh(r0), cone.precondition,
                )
        for (name, i), j in sorted(family.index_action.items(), key=lambda item: (item[0][1], item[0][0])):
            source = family.index_source[(name, i)]
            report.add(f"index.{name}.{family.pairs[i].label}", f"{family.pairs[j].label} ({source})")
        report.add("unmaterialised_translates", result.unmaterialised)
        report.add("rescale_factor", result.rescale_factor, "2 pi sinh r0 / rho")
        for center, points, delta in result.local_deltas:
            report.audit(f"ball B({center}, r0/9) with {points} points: delta <= ln 3 + epsilon", delta, result.local_target, delta <= result.local_target)
        report.add("r0_constraint", result.r0_constraint, "r0 > 10^6 (ln 3 + epsilon)")
        report.verdict = "pass" if result.passes else "fail"
        report.notes.extend(result.notes)
        if not result.r0_constraint:
            report.notes.append("r0 is below the radius the cancellation theorem asks for; local deltas are empirical")
        return report
    except ToolkitError as e:
        logger.error(f"sc-check failed: {e}")
        raise
    except ValueError as e:
        logger.error(f"sc-check failed: {e}")
        raise ArgumentError(str(e)) from None
