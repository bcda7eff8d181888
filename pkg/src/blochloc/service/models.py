"""Pydantic request/response models mirroring the core wire formats."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..circuits import Circuit, Gate, ProgramSpec, circuit_from_dict
from ..faults import FaultSpec
from ..simulator import BackendConfig


class ProgramModel(BaseModel):
    kind: Literal["qft", "grover"]
    n: int
    input: str

    def to_core(self) -> ProgramSpec:
        return ProgramSpec(self.kind, self.n, self.input)


class GateModel(BaseModel):
    kind: str
    targets: list[int]
    angle: Optional[float] = None
    controls: list[int] = Field(default_factory=list)


class CircuitModel(BaseModel):
    n: int
    program: Optional[ProgramModel] = None
    preamble: list[GateModel] = Field(default_factory=list)
    segments: list[list[GateModel]]

    def to_core(self) -> Circuit:
        return circuit_from_dict(self.model_dump())

    @classmethod
    def from_core(cls, c: Circuit) -> "CircuitModel":
        from ..circuits import circuit_to_dict

        return cls.model_validate(circuit_to_dict(c))


class BackendModel(BaseModel):
    mode: Literal["ideal", "noisy"] = "ideal"
    p1: float = 0.0
    p2: float = 0.0
    p_readout: float = 0.0
    seed: int = 0

    def to_core(self) -> BackendConfig:
        return BackendConfig(self.mode, self.p1, self.p2, self.p_readout, self.seed)


class FaultModel(BaseModel):
    category: Literal["add", "remove", "replace"]
    gate: Optional[str] = None
    segment: int
    qubits: list[int]
    position: int
    seed: int = 0

    def to_core(self) -> FaultSpec:
        return FaultSpec(
            self.category, self.gate, self.segment, tuple(self.qubits), self.position, self.seed
        )

    @classmethod
    def from_core(cls, f: FaultSpec) -> "FaultModel":
        return cls.model_validate(f.to_dict())


class GenerateRequest(BaseModel):
    program: ProgramModel


class CircuitResponse(BaseModel):
    circuit: CircuitModel
    depth: int
    segments: int
    gate_count: int


class InjectRequest(BaseModel):
    circuit: CircuitModel
    fault: FaultModel


class EnumerateFaultsRequest(BaseModel):
    circuit: CircuitModel
    seed: int = 0


class EnumerateFaultsResponse(BaseModel):
    faults: list[FaultModel]


class SchemeRequest(BaseModel):
    program: ProgramModel


class SchemeEntryModel(BaseModel):
    q: int
    k: int
    bloch: list[float]


class SchemeResponse(BaseModel):
    program: Optional[ProgramModel]
    entries: list[SchemeEntryModel]


class AssertionModel(BaseModel):
    q: int
    k: int
    fidelity: float
    verdict: Literal["pass", "fail"]


class VerdictModel(BaseModel):
    result: Literal["clean", "faulty"]
    segment: Optional[int]  # 1-based in responses
    qubit: Optional[int]
    segments_executed: int
    shots: int
    depth_executed: int
    assertions: list[AssertionModel]


class LocalizeRequest(BaseModel):
    program: Optional[ProgramModel] = None
    circuit: Optional[CircuitModel] = None
    fault: Optional[FaultModel] = None
    approach: Literal["bloq", "proq"]
    backend: BackendModel = Field(default_factory=BackendModel)
    threshold: float = 0.0
    shots: int = 8192


class LocalizeResponse(BaseModel):
    verdict: VerdictModel
    runtime_ms: float


class ExperimentProgramModel(BaseModel):
    kind: Literal["qft", "grover"]
    n_values: list[int]


class ExperimentRequest(BaseModel):
    programs: list[ExperimentProgramModel]
    inputs: Optional[list[str]] = None
    thresholds: list[float] = Field(default_factory=lambda: list(range(26)))
    shots: int = 8192
    backends: list[BackendModel] = Field(default_factory=lambda: [BackendModel()])
    approaches: list[Literal["bloq", "proq"]] = Field(
        default_factory=lambda: ["bloq", "proq"]
    )
    root_seed: int = 0


class ExperimentResponse(BaseModel):
    rows: list[dict]
    trial_count: int
    error_count: int


class ReportRequest(BaseModel):
    rows: list[dict]
    groupings: Optional[list[str]] = None


class ReportResponse(BaseModel):
    groups: list[dict]
    threshold_sweep: list[dict]
    runtime_depth: list[dict]
