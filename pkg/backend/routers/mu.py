import math

from backend.errors import ArgumentError, ToolkitError
from backend.tools.hyperbolic_cone import mu, mu_cubic_lower_bound, mu_linear_lower_bound
from backend.utils import ReportDocument
from utils.logger import logger

logger = logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("mu", help="Rim distance mu(t) of a cone of radius r0")
    parser.add_argument("--r0", type=float, required=True)
    parser.add_argument("t", type=float, nargs="+", help="Base distances")
    parser.set_defaults(handler=run)


def run(args) -> ReportDocument:
    try:
        r0 = args.r0
        report = ReportDocument(command=f"mu --r0 {r0} " + " ".join(str(t) for t in args.t))
        plateau = math.pi * math.sinh(r0) if r0 > 0 else math.nan
        for k, t in enumerate(args.t):
            value = mu(t, r0)
            lower = float(mu_linear_lower_bound(t, r0))
            report.add(f"mu.{k}.t", t)
            report.add(f"mu.{k}.value", value, "arccosh(cosh^2 r0 - sinh^2 r0 cos min(pi, t / sinh r0))")
            report.audit(f"lower bound at t={t}", value, lower, value >= lower - 1e-9)
            report.audit(f"mu(t) <= t at t={t}", value, t, value <= t + 1e-9)
            if t <= 1:
                cubic = float(mu_cubic_lower_bound(t))
                report.audit(f"mu(t) >= t - t^3 at t={t}", value, cubic, value >= cubic - 1e-9)
        report.add("plateau_start", plateau, "pi sinh r0; mu = 2 r0 beyond it")
        return report
    except ToolkitError as e:
        logger.error(f"mu failed: {e}")
        raise
    except ValueError as e:
        logger.error(f"mu failed: {e}")
        raise ArgumentError(str(e)) from None
