from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class EdgeEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    u: int = Field(description="First endpoint")
    v: int = Field(description="Second endpoint")
    weight: float = Field(description="Positive edge length")


class DistEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    i: int = Field(description="First point")
    j: int = Field(description="Second point")
    d: float = Field(description="Distance between the two points")


class SpaceDeclaration(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["graph", "matrix", "freegroup"] = Field(description="graph: edge lines, matrix: dist lines, freegroup: Cayley ball")
    n: Optional[int] = Field(description="Point count for graph and matrix spaces", default=None)
    edges: list[EdgeEntry] = Field(description="Edges of a graph space", default_factory=list)
    dist: list[DistEntry] = Field(description="Entries of a matrix space, every pair once", default_factory=list)
    radius: Optional[int] = Field(description="Ball radius of a freegroup space", default=None)


class SubspaceEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(description="Subspace name")
    members: list[int] = Field(description="Point indices, as written")


class GeneratorEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(description="Generator name")
    images: list[int] = Field(description="Image of every point under the generator")


class RotationEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: str = Field(description="Rotation label")
    subspace: str = Field(description="Name of the subspace Y_i")
    subgroup: list[str] = Field(description="Words generating H_i")
    image_under: dict[str, int] = Field(description="Declared index images under generators", default_factory=dict)


class WorkspaceParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r0: Optional[float] = Field(description="Cone radius", default=None)
    delta0: Optional[float] = Field(description="Threshold for delta / rho", default=None)
    Delta0: Optional[float] = Field(description="Threshold for Delta / rho", default=None)
    epsilon: Optional[float] = Field(description="Slack added to ln 3 in the local hyperbolicity target", default=None)
    cap: Optional[int] = Field(description="Word-length cap of subgroup enumeration", default=None)
    radii: Optional[int] = Field(description="Radii sampled per cone", default=None)


class WorkspaceDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    space: SpaceDeclaration
    subspaces: list[SubspaceEntry] = Field(default_factory=list)
    generators: list[GeneratorEntry] = Field(default_factory=list)
    rotations: list[RotationEntry] = Field(default_factory=list)
    params: WorkspaceParams = Field(default_factory=WorkspaceParams)


class ReportEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    key: str = Field(description="Dotted entry name")
    value: Any = Field(description="Computed value")
    formula: str = Field(description="Definition the value follows", default="")


class AuditEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(description="Inequality being audited")
    observed: Any = Field(description="Observed value")
    bound: Any = Field(description="Bound it is compared with")
    passes: bool


class ReportDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str = Field(description="Command echo")
    entries: list[ReportEntry] = Field(default_factory=list)
    audits: list[AuditEntry] = Field(default_factory=list)
    verdict: Optional[str] = Field(description="pass or fail, for commands with a verdict", default=None)
    notes: list[str] = Field(description="Provenance: tie-breaks, caps, sampling modes", default_factory=list)

    def add(self, key: str, value, formula: str = "") -> None:
        self.entries.append(ReportEntry(key=key, value=value, formula=formula))

    def audit(self, name: str, observed, bound, passes: bool) -> None:
        self.audits.append(AuditEntry(name=name, observed=observed, bound=bound, passes=bool(passes)))
