from backend.errors import ArgumentError, ToolkitError
from backend.routers.common import add_workspace_argument, new_report, open_workspace
from backend.tools.metric_core import four_point_delta
from backend.tools.rips_homology import (
    CONVENTION,
    DEFAULT_MAXDIM,
    betti_numbers,
    boundary_squares_vanish,
    build_rips,
    connectedness_certificate,
    euler_characteristic,
    skeleton_betti_numbers,
)
from backend.utils import ReportDocument
from utils.logger import logger

logger = logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("rips", help="Rips complex P_d and its mod-2 Betti numbers")
    add_workspace_argument(parser)
    parser.add_argument("--d", type=float, help="Scale; required unless --certificate is given")
    parser.add_argument("--maxdim", type=int, default=DEFAULT_MAXDIM)
    parser.add_argument("--certificate", type=int, metavar="N", help="Check reduced Betti numbers 0..N vanish")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run)


def run(args) -> ReportDocument:
    try:
        ws = open_workspace(args.workspace)
        report = new_report(args, "d", "maxdim", "certificate")
        if args.certificate is not None:
            delta = four_point_delta(ws.space, seed=args.seed, workers=args.threads)
            cert = connectedness_certificate(ws.space, delta, args.certificate, args.d)
            report.add("delta", delta)
            report.add("scale", cert.scale)
            report.add("simplices", cert.counts)
            report.add("reduced_betti", cert.reduced_betti, "mod-2, dimensions 0..N")
            report.audit("boundary of boundary = 0", cert.boundary_ok, True, cert.boundary_ok)
            report.audit("Euler characteristic = alternating Betti sum", cert.euler_characteristic, cert.euler_characteristic, cert.euler_consistent)
            report.verdict = "pass" if cert.passes else "fail"
            report.notes.extend(cert.notes)
            return report
        if args.d is None:
            raise ArgumentError("rips needs --d or --certificate")
        if args.maxdim < 1:
            raise ArgumentError("--maxdim must be at least 1 to report Betti numbers")
        K = build_rips(ws.space, args.d, args.maxdim)
        report.add("scale", K.scale)
        report.add("simplices", K.counts())
        report.add("betti", betti_numbers(K, args.maxdim - 1), f"mod-2, dimensions 0..{args.maxdim - 1}")
        euler = euler_characteristic(K)
        skeleton = skeleton_betti_numbers(K)
        alternating = sum((-1) ** k * b for k, b in enumerate(skeleton))
        report.add("euler_characteristic", euler)
        ok = boundary_squares_vanish(K)
        report.audit("boundary of boundary = 0", ok, True, ok)
        report.audit("Euler characteristic = alternating Betti sum", euler, alternating, euler == alternating)
        report.notes.append(f"simplices have {CONVENTION}")
        return report
    except ToolkitError as e:
        logger.error(f"rips failed: {e}")
        raise
    except ValueError as e:
        logger.error(f"rips failed: {e}")
        raise ArgumentError(str(e)) from None
