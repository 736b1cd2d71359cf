"""Pydantic request/response models for the HTTP service and CLI client."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class FamilySpec(BaseModel):
    """A closed-form path family addressed by name and parameters."""

    kind: Literal["rbeta", "sbeta", "expjs", "shear"]
    T: float = Field(gt=0)
    a1: Optional[float] = None
    a2: Optional[float] = None
    fsign: Optional[int] = None
    ssign: int = 1


class IndexRequest(BaseModel):
    family: Optional[FamilySpec] = None
    path_csv: Optional[str] = None
    method: Literal["crossing", "intersection", "both"] = "both"
    epsilon: Optional[float] = Field(default=None, gt=0)


class CrossingModel(BaseModel):
    t: float
    kernel_dim: int
    index: int
    coindex: int
    nullity: int


class IndexResultModel(BaseModel):
    value: int
    method: str
    epsilon_used: float
    certified: bool
    crossings: list[CrossingModel]
    clm_value: Optional[int] = None


class IndexResponse(BaseModel):
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    results: dict[str, IndexResultModel]
    match: Optional[bool] = None
    certified: bool
    warnings: list[str] = []

    model_config = {"populate_by_name": True}


class KeplerRequest(BaseModel):
    a: float = Field(default=1.0, gt=0)
    ecc: float = Field(default=0.0, ge=0)
    mu: float = Field(default=1.0, gt=0)
    m: float = Field(default=1.0, gt=0)
    kmax: int = Field(default=1, ge=1)
    steps: int = Field(default=20000, ge=1000)


class ElementsModel(BaseModel):
    mu: float
    m: float
    a: float
    ecc: float
    h: float
    k: float
    T: float
    Tcal: float
    omega: float


class IntegratorModel(BaseModel):
    steps: int
    drift: float
    certified: bool = True


class KeplerReportResponse(BaseModel):
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    elements: ElementsModel
    multipliers: list[list[float]]
    nullity: int
    rank_m_minus_i: int
    elliptic: bool
    spectrally_stable: bool
    linearly_stable: bool
    morse_indices: dict[str, int]
    integrator: IntegratorModel

    model_config = {"populate_by_name": True}


class SweepRequest(BaseModel):
    ecc_list: list[float] = Field(default=[0.0, 0.2, 0.4, 0.6, 0.8])
    k_list: list[int] = Field(default=[1, 2, 3, 4, 5])
    s_list: list[float] = Field(default=[1.0])
    a: float = Field(default=1.0, gt=0)
    mu: float = Field(default=1.0, gt=0)
    m: float = Field(default=1.0, gt=0)
    steps: int = Field(default=20000, ge=1000)


class SweepResponse(BaseModel):
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    csv: str

    model_config = {"populate_by_name": True}


class TraceRequest(BaseModel):
    family: FamilySpec
    samples: int = Field(default=256, ge=8)


class TraceResponse(BaseModel):
    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    path_csv: str
    section_csv: str

    model_config = {"populate_by_name": True}


class ErrorDetail(BaseModel):
    code: str
    message: str
