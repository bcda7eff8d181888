"""FastAPI wrapper around the core package.

The service is stateless: every endpoint is a pure computation over the
request payload, so it can be scaled or embedded in-process (the CLI mounts
it through an ASGI test client when no server is given).
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException

from .. import harness
from ..assertions import run_bloq, run_proq
from ..circuits import CircuitParseError, circuit_depth
from ..faults import enumerate_faults, inject
from ..schemes import build_program_circuit, build_scheme, numeric_assertion_scheme
from ..simulator import BackendConfig
from . import models as m


def create_app() -> FastAPI:
    app = FastAPI(
        title="blochloc",
        description="Bloch-vector runtime assertions for quantum fault localization",
        version="0.1.0",
    )

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        from fastapi.responses import JSONResponse

        status = 400 if not isinstance(exc, CircuitParseError) else 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/circuits/generate", response_model=m.CircuitResponse)
    def generate(req: m.GenerateRequest) -> m.CircuitResponse:
        circuit = build_program_circuit(req.program.to_core())
        return m.CircuitResponse(
            circuit=m.CircuitModel.from_core(circuit),
            depth=circuit_depth(circuit),
            segments=circuit.num_segments,
            gate_count=circuit.gate_count,
        )

    @app.post("/circuits/inject", response_model=m.CircuitResponse)
    def inject_fault(req: m.InjectRequest) -> m.CircuitResponse:
        mutant = inject(req.circuit.to_core(), req.fault.to_core())
        return m.CircuitResponse(
            circuit=m.CircuitModel.from_core(mutant),
            depth=circuit_depth(mutant),
            segments=mutant.num_segments,
            gate_count=mutant.gate_count,
        )

    @app.post("/circuits/faults", response_model=m.EnumerateFaultsResponse)
    def faults(req: m.EnumerateFaultsRequest) -> m.EnumerateFaultsResponse:
        specs = enumerate_faults(req.circuit.to_core(), req.seed)
        return m.EnumerateFaultsResponse(
            faults=[m.FaultModel.from_core(f) for f in specs]
        )

    @app.post("/schemes/build", response_model=m.SchemeResponse)
    def scheme(req: m.SchemeRequest) -> m.SchemeResponse:
        return m.SchemeResponse.model_validate(
            build_scheme(req.program.to_core()).to_dict()
        )

    @app.post("/localize", response_model=m.LocalizeResponse)
    def localize(req: m.LocalizeRequest) -> m.LocalizeResponse:
        if req.circuit is not None:
            circuit = req.circuit.to_core()
        elif req.program is not None:
            circuit = build_program_circuit(req.program.to_core())
        else:
            raise HTTPException(400, "localize needs either a program or a circuit")
        if req.fault is not None:
            circuit = inject(circuit, req.fault.to_core())
        backend = req.backend.to_core()
        start = time.perf_counter()
        if req.approach == "bloq":
            if circuit.program is not None:
                scheme_obj = build_scheme(circuit.program)
            else:
                scheme_obj = numeric_assertion_scheme(circuit)
            verdict = run_bloq(circuit, scheme_obj, backend, req.shots, req.threshold)
        else:
            verdict = run_proq(circuit, backend, req.shots, req.threshold)
        runtime_ms = (time.perf_counter() - start) * 1000.0
        return m.LocalizeResponse(
            verdict=m.VerdictModel.model_validate(verdict.to_dict()),
            runtime_ms=runtime_ms,
        )

    @app.post("/experiment", response_model=m.ExperimentResponse)
    def experiment(req: m.ExperimentRequest) -> m.ExperimentResponse:
        cfg = harness.ExperimentConfig.from_dict(req.model_dump())
        records = harness.run_matrix(cfg)
        rows = harness.rows_from_records(records)
        errors = sum(1 for r in records if r.error)
        return m.ExperimentResponse(
            rows=rows,
            trial_count=len(records) // max(len(cfg.thresholds), 1),
            error_count=errors,
        )

    @app.post("/report", response_model=m.ReportResponse)
    def report(req: m.ReportRequest) -> m.ReportResponse:
        groupings = tuple(req.groupings) if req.groupings else harness.DEFAULT_GROUPINGS
        for g in groupings:
            if g not in harness.DEFAULT_GROUPINGS:
                raise HTTPException(400, f"unknown grouping {g!r}")
        groups = [g.to_dict() for g in harness.report(req.rows, groupings)]
        return m.ReportResponse(
            groups=groups,
            threshold_sweep=harness.threshold_sweep(req.rows),
            runtime_depth=harness.runtime_depth_stats(req.rows),
        )

    return app
