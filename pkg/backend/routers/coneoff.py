import numpy as np

from backend.errors import ArgumentError, ReferenceResolutionError, ToolkitError
from backend.routers.common import add_workspace_argument, new_report, open_workspace, resolve_param
from backend.tools.cone_off import (
    ConeOffSpace,
    base_normal_form,
    chain_reduce,
    coneoff_audit,
    path_metric_gap,
    reduction_bounds,
    uniform_approximation_bound,
)
from backend.tools.hyperbolic_cone import DEFAULT_RADII
from backend.tools.metric_core import four_point_delta
from backend.utils import ReportDocument
from utils.logger import logger

logger = logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("coneoff", help="Cone-off of a graph along a family of subspaces")
    add_workspace_argument(parser)
    parser.add_argument("--family", help="Comma separated subspace names (default: every subspace)")
    parser.add_argument("--r0", type=float)
    parser.add_argument("--radii", type=int)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--eta", type=float, default=0.1, help="Chain reduction parameter in (0, 1)")
    parser.add_argument("--pairs", type=int, default=50, help="Sampled base pairs for the path gap and chain audits")
    parser.add_argument("--delta-mode", choices=["auto", "exact", "sampled"], default="auto")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run)


def run(args) -> ReportDocument:
    """
    ## Materialise a cone-off and audit its inequalities

    ### Returns
    Report with the chain-metric delta, per-inequality audits, the path
    metric gap and chain reduction bounds on sampled pairs.

    ### Raises
    - **ToolkitError**: On invalid documents, unknown subspaces or bad parameters
    """
    try:
        ws = open_workspace(args.workspace)
        names = args.family.split(",") if args.family else list(ws.subspaces)
        unknown = [name for name in names if name not in ws.subspaces]
        if unknown:
            raise ReferenceResolutionError(f"unknown subspaces in --family: {', '.join(unknown)}")
        if not names:
            raise ArgumentError("the cone-off needs at least one subspace")
        r0 = resolve_param(args, ws, "r0", required=True)
        m = resolve_param(args, ws, "radii", default=DEFAULT_RADII)
        epsilon = resolve_param(args, ws, "epsilon", default=0.1)
        report = new_report(args, "family", "r0", "radii", "eta", "pairs", "delta_mode", "seed")
        S = ConeOffSpace(ws.graph, [ws.subspaces[name] for name in names], r0, m=m)
        report.add("r0", r0)
        report.add("cones", len(S.family))
        report.add("points", len(S.points), "base vertices + apexes + cone points below the rim")

        audit = coneoff_audit(S, args.delta_mode, args.seed, args.threads)
        report.add("delta", audit.delta, "four-point delta of the chain metric")
        report.add("delta.mode", audit.delta_mode)
        report.audit("chain metric symmetric", audit.symmetric, True, audit.symmetric)
        report.audit("chain metric <= sc distance", audit.chain_below_sc, True, audit.chain_below_sc)
        report.audit("chain metric >= mu(d_X) on base pairs", audit.mu_lower_bound_ok, True, audit.mu_lower_bound_ok)
        report.audit(
            f"d_X(p x, p x') <= 3 pi sinh r0 / r0 d(x, x') on {audit.projection_pairs} pairs",
            audit.projection_ok,
            True,
            audit.projection_ok,
        )
        if audit.tree_bound is not None:
            report.audit("tree cone-off delta <= ln 3", audit.delta, audit.tree_bound, audit.tree_bound_ok)

        rng = np.random.default_rng(args.seed)
        n = S.base.n
        sample = [(int(x), int(y)) for x, y in rng.integers(0, n, size=(args.pairs, 2)) if x != y]
        base_delta = four_point_delta(S.base, seed=args.seed, workers=args.threads)
        gap = path_metric_gap(S, sample, base_delta)
        report.add("path_gap", gap.gap, "max over sampled pairs of realised-path distance - chain metric")
        report.audit("path gap <= 40 delta per unrealised step", gap.worst_envelope_excess, 0.0, gap.envelope_ok)
        if not all(gap.strongly_quasiconvex):
            report.notes.append("some family members are not strongly quasi-convex; the 40 delta envelope does not apply to them")

        worst_length, worst_count = True, True
        for x, y in sample:
            chain = base_normal_form(S, S.realising_chain(x, y))
            bounds = reduction_bounds(S, chain, chain_reduce(S, chain, args.eta), args.eta)
            worst_length &= bounds.length_ok
            worst_count &= bounds.count_ok
        report.audit(f"l(C_eta) <= l(C) + m eta^3, eta={args.eta}", worst_length, True, worst_length)
        report.audit(f"m <= 100 A / eta, eta={args.eta}", worst_count, True, worst_count)

        A = max(1.0, float(S.base.dist.max()))
        eta, M = uniform_approximation_bound(A, epsilon)
        report.add("approximation.A", A)
        report.add("approximation.eta", eta, "sqrt(epsilon / 2A) / 10")
        report.add("approximation.M", M, "1000 A sqrt(2A / epsilon)")
        report.notes.append(f"chains restricted to materialised points; sample of {len(sample)} base pairs, seed {args.seed}")
        return report
    except ToolkitError as e:
        logger.error(f"coneoff failed: {e}")
        raise
    except ValueError as e:
        logger.error(f"coneoff failed: {e}")
        raise ArgumentError(str(e)) from None
