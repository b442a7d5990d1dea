import math
from typing import Any, Optional

from backend.utils import ReportDocument


def format_number(value: Any, exact: bool = False) -> str:
    """Deterministic number text; ``exact`` keeps the shortest round-trip form."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if exact:
            return repr(value)
        return f"{value:.12g}"
    return str(value)


def format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {format_value(v)}" for k, v in value.items()) + "}"
    return format_number(value)


def render_text(report: ReportDocument) -> str:
    lines = [f"# {report.command}"]
    width = max((len(e.key) for e in report.entries), default=0)
    for e in report.entries:
        line = f"{e.key.ljust(width)}  {format_value(e.value)}"
        if e.formula:
            line += f"    ({e.formula})"
        lines.append(line)
    if report.audits:
        lines.append("")
        lines.append("audit:")
        for a in report.audits:
            status = "ok" if a.passes else "FAIL"
            lines.append(f"  [{status}] {a.name}: observed {format_value(a.observed)}, bound {format_value(a.bound)}")
    if report.verdict is not None:
        lines.append("")
        lines.append(f"verdict: {report.verdict}")
    if report.notes:
        lines.append("")
        lines.extend(f"note: {note}" for note in report.notes)
    return "\n".join(lines) + "\n"


def render_kv(report: ReportDocument) -> str:
    """Flat ``key=value`` lines, one per entry, audit and note."""
    lines = [f"command={report.command}"]
    lines.extend(f"{e.key}={format_value(e.value)}" for e in report.entries)
    for k, a in enumerate(report.audits):
        lines.append(f"audit.{k}.name={a.name}")
        lines.append(f"audit.{k}.observed={format_value(a.observed)}")
        lines.append(f"audit.{k}.bound={format_value(a.bound)}")
        lines.append(f"audit.{k}.pass={format_number(a.passes)}")
    if report.verdict is not None:
        lines.append(f"verdict={report.verdict}")
    lines.extend(f"note.{k}={note}" for k, note in enumerate(report.notes))
    return "\n".join(lines) + "\n"


def render(report: ReportDocument, output: Optional[str] = "text") -> str:
    if output == "kv":
        return render_kv(report)
    return render_text(report)
