from typing import Optional

from backend.errors import ArgumentError
from backend.load_data import Workspace, build_workspace, load_workspace
from backend.utils import ReportDocument


def add_workspace_argument(parser) -> None:
    parser.add_argument("workspace", help="Workspace document path")


def open_workspace(path: str) -> Workspace:
    return build_workspace(load_workspace(path))


def resolve_param(args, workspace: Optional[Workspace], key: str, required: bool = False, default=None):
    """Flag value, else document ``param``, else ``default``; flags win."""
    value = getattr(args, key, None)
    if value is None and workspace is not None:
        value = getattr(workspace.document.params, key)
    if value is None:
        value = default
    if value is None and required:
        raise ArgumentError(f"missing {key}: pass --{key} or add 'param {key} VALUE' to the document")
    return value


def command_echo(args, *names: str) -> str:
    parts = [args.command]
    if getattr(args, "workspace", None):
        parts.append(args.workspace)
    for name in names:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            parts.append(f"--{name.replace('_', '-')} {value}")
    return " ".join(parts)


def new_report(args, *names: str) -> ReportDocument:
    return ReportDocument(command=command_echo(args, *names))
