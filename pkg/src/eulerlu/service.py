"""HTTP service wrapping the factorization library.

A factorization is expensive to build and cheap to apply, so the service
keeps graphs and factorizations in memory and serves repeated solves against
them: register or generate a graph, build a factorization for it once, then
POST right-hand sides.  All state is process-local.
"""

from __future__ import annotations

import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import errors, oracle
from .generate import GraphSpec, generate
from .laplacian import from_edge_list, validate
from .lu import SolverConfig, eulerian_lu
from .solver import solve_eulerian


# --------------------------------------------------------------------------
# request / response models
# --------------------------------------------------------------------------

class GenerateRequest(BaseModel):
    kind: str = "permutation-sum"
    n: int = Field(..., ge=2)
    edges: int | None = None
    seed: int = 0
    weight_low: float = 0.5
    weight_high: float = 2.0


class EdgeListRequest(BaseModel):
    edges: list[tuple[int, int, float]]
    n: int | None = None


class GraphSummary(BaseModel):
    graph_id: str
    n: int
    edge_count: int
    eulerian: bool
    strongly_connected: bool


class GraphDetail(GraphSummary):
    edges: list[tuple[int, int, float]]


class FactorRequest(BaseModel):
    graph_id: str
    eps: float = Field(0.25, gt=0.0, lt=0.5)
    failure_prob: float = Field(1e-4, gt=0.0, lt=1.0)
    seed: int = 0
    mode: str = "sampled"
    sparsifier: str = "exact"
    samples_per_elim: int = Field(32, ge=1)
    budget_per_vertex: float | None = None


class FactorSummary(BaseModel):
    factorization_id: str
    graph_id: str
    n: int
    nnz_lower: int
    nnz_upper: int
    phases: int
    resparsify_count: int
    max_eulerian_defect: float
    build_seconds: float


class SolveRequest(BaseModel):
    b: list[float]
    eps_solve: float = 1e-8
    max_iters: int = Field(200, ge=1)


class SolveResponse(BaseModel):
    x: list[float]
    iterations: int
    converged: bool
    certified: str
    projected_rhs: bool
    final_rel_error: float
    contraction_median: float | None


class DiagnosticsResponse(BaseModel):
    eps: float
    gamma: float
    ratio_lower: float
    ratio_upper: float


class FactsRequest(BaseModel):
    trials: int = Field(100, ge=1, le=2000)
    n_max: int = Field(12, ge=3, le=24)
    seed: int = 1


class FactCheckModel(BaseModel):
    trials: int
    failures: int
    worst: float


class FactsResponse(BaseModel):
    passed: bool
    checks: dict[str, FactCheckModel]


# --------------------------------------------------------------------------
# app
# --------------------------------------------------------------------------

def create_app():
    app = FastAPI(title="eulerlu", version="0.1.0",
                  description="Approximate LU preconditioners for Eulerian "
                              "directed Laplacians")
    graphs = {}
    factorizations = {}
    lock = threading.Lock()

    def _get_graph(gid):
        try:
            return graphs[gid]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown graph {gid}")

    def _register_graph(L):
        report = validate(L)
        gid = uuid.uuid4().hex
        with lock:
            graphs[gid] = L
        return GraphSummary(
            graph_id=gid, n=L.n, edge_count=L.edge_count,
            eulerian=report.eulerian,
            strongly_connected=bool(report.strongly_connected))

    @app.exception_handler(errors.EulerLUError)
    async def _domain_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=400, content={
            "error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/graphs", response_model=GraphSummary)
    def register_graph(req: EdgeListRequest):
        L = from_edge_list(req.edges, n=req.n)
        return _register_graph(L)

    @app.post("/graphs/generate", response_model=GraphSummary)
    def generate_graph(req: GenerateRequest):
        spec = GraphSpec(kind=req.kind, n=req.n, edge_target=req.edges,
                         seed=req.seed, weight_low=req.weight_low,
                         weight_high=req.weight_high)
        return _register_graph(generate(spec))

    @app.get("/graphs/{gid}", response_model=GraphDetail)
    def graph_detail(gid: str):
        L = _get_graph(gid)
        report = validate(L)
        return GraphDetail(
            graph_id=gid, n=L.n, edge_count=L.edge_count,
            eulerian=report.eulerian,
            strongly_connected=bool(report.strongly_connected),
            edges=list(L.edges()))

    @app.post("/factorizations", response_model=FactorSummary)
    def build_factorization(req: FactorRequest):
        L = _get_graph(req.graph_id)
        cfg = SolverConfig(
            eps=req.eps, failure_prob=req.failure_prob, mode=req.mode,
            sparsifier=req.sparsifier, samples_per_elim=req.samples_per_elim,
            budget_per_vertex=req.budget_per_vertex)
        fact = eulerian_lu(L, cfg, rng=req.seed)
        fid = uuid.uuid4().hex
        with lock:
            factorizations[fid] = (req.graph_id, fact, cfg)
        return FactorSummary(
            factorization_id=fid, graph_id=req.graph_id, n=fact.n,
            nnz_lower=fact.nnz_lower, nnz_upper=fact.nnz_upper,
            phases=fact.stats.phases,
            resparsify_count=fact.stats.resparsify_count,
            max_eulerian_defect=fact.stats.max_eulerian_defect,
            build_seconds=fact.stats.build_seconds)

    def _get_fact(fid):
        try:
            return factorizations[fid]
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown factorization {fid}")

    @app.get("/factorizations/{fid}", response_model=FactorSummary)
    def factorization_detail(fid: str):
        gid, fact, _ = _get_fact(fid)
        return FactorSummary(
            factorization_id=fid, graph_id=gid, n=fact.n,
            nnz_lower=fact.nnz_lower, nnz_upper=fact.nnz_upper,
            phases=fact.stats.phases,
            resparsify_count=fact.stats.resparsify_count,
            max_eulerian_defect=fact.stats.max_eulerian_defect,
            build_seconds=fact.stats.build_seconds)

    @app.post("/factorizations/{fid}/solve", response_model=SolveResponse)
    def solve(fid: str, req: SolveRequest):
        gid, fact, cfg = _get_fact(fid)
        L = _get_graph(gid)
        if len(req.b) != L.n:
            raise HTTPException(status_code=400,
                                detail=f"b has length {len(req.b)}, need {L.n}")
        solve_cfg = SolverConfig(**{**cfg.__dict__, "max_iters": req.max_iters})
        import warnings as _warnings
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            try:
                x, rep = solve_eulerian(L, np.asarray(req.b), req.eps_solve,
                                        cfg=solve_cfg, factorization=fact)
            except errors.NotConvergedError as exc:
                rep = exc.report
                x = exc.x
                return SolveResponse(
                    x=[float(v) for v in x], iterations=rep.iterations,
                    converged=False, certified=rep.certified,
                    projected_rhs=rep.projected_rhs,
                    final_rel_error=rep.final_rel_error,
                    contraction_median=rep.contraction_median)
        return SolveResponse(
            x=[float(v) for v in x], iterations=rep.iterations,
            converged=rep.converged, certified=rep.certified,
            projected_rhs=rep.projected_rhs,
            final_rel_error=rep.final_rel_error,
            contraction_median=rep.contraction_median)

    @app.post("/factorizations/{fid}/diagnostics",
              response_model=DiagnosticsResponse)
    def diagnostics(fid: str):
        gid, fact, _ = _get_fact(fid)
        L = _get_graph(gid)
        diag = oracle.diagnose_factorization(
            L.to_dense(), fact.product_dense(), fact.certificate_matrix())
        return DiagnosticsResponse(eps=diag.eps, gamma=diag.gamma,
                                   ratio_lower=diag.ratio_lower,
                                   ratio_upper=diag.ratio_upper)

    @app.post("/checks/matrix-facts", response_model=FactsResponse)
    def matrix_facts(req: FactsRequest):
        rep = oracle.verify_matrix_facts(trials=req.trials, n_max=req.n_max,
                                         seed=req.seed)
        return FactsResponse(
            passed=rep.all_passed,
            checks={c.name: FactCheckModel(trials=c.trials, failures=c.failures,
                                           worst=c.worst)
                    for c in rep.checks})

    return app


app = create_app()
