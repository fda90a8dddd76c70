from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from qpmoduli.config import ALL_CHECKS

CheckName = Literal["quasi_poisson", "centrality", "leaves", "homology_crosscheck", "reduce", "momentmap", "appendix"]
GroupName = Literal["SL", "GL"]


class RecipeStepIn(BaseModel):
    op: Literal["glue", "forget"]
    x: str = Field(..., min_length=1)
    y: str | None = None


class RecipeIn(BaseModel):
    disks: int = Field(..., ge=1, le=12)
    steps: list[RecipeStepIn] = Field(default_factory=list)


class ReductionOptions(BaseModel):
    subalgebra: str = "diagonal"
    include_uncut: bool = True
    expect_dim: int | None = Field(default=None, ge=0)
    leaf_check: bool = False
    ideal: str | None = None


class MomentMapOptions(BaseModel):
    complement: str = "antidiagonal"
    second_complement: str | None = None
    induction: bool = False


class SuiteConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1, max_length=128)
    algebra: str | dict[str, Any]
    surface: str | RecipeIn
    group: GroupName = "SL"
    checks: list[CheckName] = Field(default_factory=lambda: list(ALL_CHECKS[:4]))
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    points: int | None = Field(default=None, ge=1, le=50)
    reduction: ReductionOptions | None = None
    momentmap: MomentMapOptions | None = None
    expect_failure: list[CheckName] = Field(default_factory=list)


class CheckResult(BaseModel):
    name: CheckName
    ok: bool
    points_checked: int
    detail: dict[str, Any] = Field(default_factory=dict)
    witness: dict[str, Any] | None = None


class Report(BaseModel):
    config: str
    algebra: str
    surface: dict[str, Any]
    seed: int
    points: int
    ok: bool
    checks: list[CheckResult]
    elapsed_ms: int | None = None


class AlgebraSummary(BaseModel):
    name: str
    dim: int
    nondegenerate: bool
    valid: bool


class SurfaceAnalysisOut(BaseModel):
    surface: dict[str, Any]
    analysis: dict[str, Any]
