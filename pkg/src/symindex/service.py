"""FastAPI service exposing the index and stability computations.

The CLI is a thin client of this app; it talks to it in-process through an
ASGI transport by default, or over the network against a running instance
(``symindex serve``).  All numeric output is deterministic for fixed
inputs.
"""

from __future__ import annotations

import io
import math

import numpy as np
from fastapi import FastAPI, HTTPException

from . import analytic, kepler, maslov, symcore
from .analytic import FamilyKind, PathFamily
from .errors import SymindexError
from .schemas import (
    CrossingModel,
    FamilySpec,
    IndexRequest,
    IndexResponse,
    IndexResultModel,
    KeplerReportResponse,
    KeplerRequest,
    SweepRequest,
    SweepResponse,
    TraceRequest,
    TraceResponse,
    SCHEMA_VERSION,
)

app = FastAPI(title="symindex", version="0.1.0")


def _fail(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _family_from_spec(spec: FamilySpec) -> PathFamily:
    kind = {
        "rbeta": FamilyKind.ROTATION_R,
        "sbeta": FamilyKind.ROTATION_S,
        "expjs": FamilyKind.EXP_JS,
        "shear": FamilyKind.SHEAR,
    }[spec.kind]
    try:
        if kind is FamilyKind.SHEAR:
            return PathFamily(kind=kind, T=spec.T, f_sign=spec.fsign)
        return PathFamily(kind=kind, T=spec.T, a1=spec.a1, a2=spec.a2, s_sign=spec.ssign)
    except ValueError as exc:
        raise _fail(422, "BAD_FAMILY", str(exc))


def _result_model(res: maslov.IndexResult, clm_value: int | None = None) -> IndexResultModel:
    return IndexResultModel(
        value=res.value,
        method=res.method,
        epsilon_used=res.epsilon_used,
        certified=res.certified,
        crossings=[CrossingModel(**c.to_dict()) for c in res.crossings],
        clm_value=clm_value,
    )


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "schema": SCHEMA_VERSION}


@app.post("/index", response_model=IndexResponse, response_model_by_alias=True)
def compute_index(req: IndexRequest) -> IndexResponse:
    """Index of a named family or an uploaded sampled path.

    The crossing-form result is reported in the identity-based convention
    (graph Maslov value minus one) next to the raw graph value, so both
    methods are directly comparable; ``match`` compares them when both ran.
    """
    if (req.family is None) == (req.path_csv is None):
        raise _fail(422, "BAD_REQUEST", "provide exactly one of family or path_csv")

    warnings: list[str] = []
    try:
        if req.family is not None:
            fam = _family_from_spec(req.family)
            path = analytic.family_path(fam)
            if fam.near_lattice():
                warnings.append(
                    "T is within 1e-06 (relative) of the crossing lattice; the index jumps there"
                )
        else:
            path = symcore.load_path_csv(io.StringIO(req.path_csv), require_identity_start=True)

        methods = {"both": ("crossing", "intersection")}.get(req.method, (req.method,))
        if path.dim == 4 and "crossing" in methods:
            if req.method == "both":
                methods = ("intersection",)
                warnings.append("crossing-form method is dim-2 only; ran intersection only")
            else:
                raise _fail(422, "UNSUPPORTED_DIMENSION", "crossing-form method is dim-2 only")

        results: dict[str, IndexResultModel] = {}
        if "crossing" in methods:
            clm = maslov.clm_index(path, epsilon=req.epsilon)
            results["crossing"] = _result_model(
                maslov.IndexResult(
                    value=clm.value - 1,
                    method=clm.method,
                    epsilon_used=clm.epsilon_used,
                    crossings=clm.crossings,
                    certified=clm.certified,
                ),
                clm_value=clm.value,
            )
        if "intersection" in methods:
            cz = maslov.cz_index_intersection(path, epsilon=req.epsilon)
            results["intersection"] = _result_model(cz)
    except HTTPException:
        raise
    except SymindexError as exc:
        raise _fail(422, exc.code, str(exc))

    match = None
    if len(results) == 2:
        match = results["crossing"].value == results["intersection"].value
    certified = all(r.certified for r in results.values()) and match is not False
    return IndexResponse(results=results, match=match, certified=certified, warnings=warnings)


@app.post("/kepler-report", response_model=KeplerReportResponse, response_model_by_alias=True)
def kepler_report(req: KeplerRequest) -> KeplerReportResponse:
    try:
        el = kepler.elements_from(req.a, req.ecc, req.mu, req.m)
        report = kepler.monodromy_and_stability(el, k_max=req.kmax, steps_per_period=req.steps)
    except SymindexError as exc:
        raise _fail(422, exc.code, str(exc))
    return KeplerReportResponse(**report.to_dict())


_SWEEP_HEADER = "ecc,k,s,cz_index,nullity,max_mult_dev,drift,error"


@app.post("/sweep", response_model=SweepResponse, response_model_by_alias=True)
def sweep(req: SweepRequest) -> SweepResponse:
    """One row per (ecc, k, s) grid point, in that nesting order.

    Rows that fail carry the error code in the last column; the run
    continues.
    """
    lines = [_SWEEP_HEADER]
    for ecc in req.ecc_list:
        for k in req.k_list:
            for s in req.s_list:
                try:
                    el = kepler.elements_from(req.a, ecc, req.mu, req.m)
                    row = kepler.grid_point(el, int(k), s, req.steps)
                    err = "" if row["certified"] else "UNCERTIFIED"
                    lines.append(
                        f"{ecc!r},{k},{s!r},{row['cz_index']},{row['nullity']},"
                        f"{float(row['max_multiplier_dev'])!r},{row['drift']!r},{err}"
                    )
                except SymindexError as exc:
                    lines.append(f"{ecc!r},{k},{s!r},,,,,{exc.code}")
    return SweepResponse(csv="\n".join(lines) + "\n")


_TRACE_HEADER = "t,m11,m12,m21,m22,r,theta,z,indicator,region"
_SECTION_HEADER = "theta,r"


@app.post("/trace", response_model=TraceResponse, response_model_by_alias=True)
def trace(req: TraceRequest) -> TraceResponse:
    """Chart-coordinate trace of a family plus the singular-section curve.

    The second table samples the z = 0 slice of the singular hypersurface,
    (1 + r^2) cos(theta) = 2 r, both radius branches per angle.
    """
    fam = _family_from_spec(req.family)
    path = analytic.family_path(fam)
    ts = np.linspace(0.0, fam.T, req.samples + 1)
    lines = [_TRACE_HEADER]
    for t in ts:
        m = path.at(float(t))
        cyl = symcore.to_cyl(m)
        ind = symcore.det_indicator(m)
        region = symcore.classify_region(m).value
        entries = ",".join(repr(float(x)) for x in m.ravel())
        lines.append(
            f"{float(t)!r},{entries},{cyl.r!r},{cyl.theta!r},{cyl.z!r},{ind!r},{region}"
        )

    section = [_SECTION_HEADER]
    thetas = np.linspace(-math.pi / 2, math.pi / 2, req.samples + 2)[1:-1]
    for branch in (+1, -1):
        for theta in thetas:
            r = (1.0 + branch * abs(math.sin(theta))) / math.cos(theta)
            section.append(f"{float(theta)!r},{float(r)!r}")
    return TraceResponse(path_csv="\n".join(lines) + "\n", section_csv="\n".join(section) + "\n")
