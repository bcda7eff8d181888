"""Gate-level circuit representation with explicit segment boundaries.

A circuit is a preamble (state preparation / initial superposition) followed
by an ordered list of segments, each one application of the program's
iterative step.  Assertions and fault injection address gates by segment.

Conventions fixed here and shared by every other module:

* qubit 0 is the most significant bit of a basis index,
* the generated QFT omits the final swap layer (bit-reversed output), so
  after its segment k qubit k carries the phase 2*pi*0.j_k...j_{n-1},
* the Grover oracle is a multi-controlled Z conjugated by X on the zero
  bits of the marked item, and the diffusion operator is H - X - MCZ -
  X - H; MCZ is an IR primitive counted as depth 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

ONE_QUBIT_KINDS = {"x", "y", "z", "h", "s", "sdg", "rz"}
PARAM_KINDS = {"rz", "cphase"}
GATE_KINDS = ONE_QUBIT_KINDS | {"cnot", "cphase", "mcz"}


class CircuitParseError(ValueError):
    """Raised for malformed circuit documents; the message carries position."""


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    controls: tuple[int, ...] = ()

    def qubits(self) -> tuple[int, ...]:
        """All qubits the gate acts on, controls first."""
        return self.controls + self.targets

    def adjoint(self) -> "Gate":
        if self.kind == "s":
            return Gate("sdg", self.targets)
        if self.kind == "sdg":
            return Gate("s", self.targets)
        if self.kind in PARAM_KINDS:
            return Gate(self.kind, self.targets, -self.angle, self.controls)
        return self  # x, y, z, h, cnot, mcz are self-adjoint

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "targets": list(self.targets)}
        if self.angle is not None:
            d["angle"] = self.angle
        if self.controls:
            d["controls"] = list(self.controls)
        return d


def x(q: int) -> Gate:
    return Gate("x", (q,))


def y(q: int) -> Gate:
    return Gate("y", (q,))


def z(q: int) -> Gate:
    return Gate("z", (q,))


def h(q: int) -> Gate:
    return Gate("h", (q,))


def s(q: int) -> Gate:
    return Gate("s", (q,))


def sdg(q: int) -> Gate:
    return Gate("sdg", (q,))


def rz(angle: float, q: int) -> Gate:
    return Gate("rz", (q,), angle)


def cnot(control: int, target: int) -> Gate:
    return Gate("cnot", (target,), controls=(control,))


def cphase(angle: float, control: int, target: int) -> Gate:
    return Gate("cphase", (target,), angle, controls=(control,))


def mcz(*qubits: int) -> Gate:
    if len(qubits) < 2:
        raise ValueError("mcz needs at least two qubits")
    return Gate("mcz", (qubits[-1],), controls=tuple(qubits[:-1]))


def adjoint_sequence(gates: Iterable[Gate]) -> tuple[Gate, ...]:
    """Gate-by-gate adjoint in reverse order (the inverse of the sequence)."""
    return tuple(g.adjoint() for g in reversed(list(gates)))


def _validate_gate(gate: Gate, n: int, where: str) -> None:
    if gate.kind not in GATE_KINDS:
        raise CircuitParseError(f"{where}: unknown gate kind {gate.kind!r}")
    qs = gate.qubits()
    if len(set(qs)) != len(qs):
        raise CircuitParseError(f"{where}: duplicate qubit in {qs}")
    if any(q < 0 or q >= n for q in qs):
        raise CircuitParseError(f"{where}: qubit index out of range in {qs}")
    if gate.kind in PARAM_KINDS:
        if gate.angle is None or not math.isfinite(gate.angle):
            raise CircuitParseError(f"{where}: {gate.kind} needs a finite angle")
    elif gate.angle is not None:
        raise CircuitParseError(f"{where}: {gate.kind} takes no angle")
    if gate.kind == "cnot" and (len(gate.controls), len(gate.targets)) != (1, 1):
        raise CircuitParseError(f"{where}: cnot needs one control and one target")
    if gate.kind == "cphase" and (len(gate.controls), len(gate.targets)) != (1, 1):
        raise CircuitParseError(f"{where}: cphase needs one control and one target")
    if gate.kind == "mcz" and len(qs) < 2:
        raise CircuitParseError(f"{where}: mcz needs at least two qubits")
    if gate.kind in ONE_QUBIT_KINDS and (gate.controls or len(gate.targets) != 1):
        raise CircuitParseError(f"{where}: {gate.kind} acts on exactly one qubit")


@dataclass(frozen=True)
class ProgramSpec:
    """Program identity: algorithm kind, qubit count and input bitstring.

    For Grover the input is the single marked item (M = 1).
    """

    kind: str
    n: int
    input: str

    def __post_init__(self):
        if self.kind not in ("qft", "grover"):
            raise ValueError(f"unsupported program kind {self.kind!r}")
        if len(self.input) != self.n or any(b not in "01" for b in self.input):
            raise ValueError(f"input {self.input!r} is not a {self.n}-bit string")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "input": self.input}


@dataclass(frozen=True)
class Circuit:
    """Immutable gate list split into a preamble and ordered segments.

    Segment membership is structural (nested tuples), so the cover/disjoint
    invariant on segment ranges holds by construction.
    """

    n: int
    preamble: tuple[Gate, ...] = ()
    segments: tuple[tuple[Gate, ...], ...] = ()
    program: ProgramSpec | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("circuit needs at least one qubit")
        if len(self.segments) < 1:
            raise ValueError("circuit needs at least one segment")
        for i, gate in enumerate(self.preamble):
            _validate_gate(gate, self.n, f"preamble, gate {i}")
        for k, seg in enumerate(self.segments):
            for i, gate in enumerate(seg):
                _validate_gate(gate, self.n, f"segment {k}, gate {i}")

    @property
    def num_segments(self) -> int:
        return len(self.segments)

    @property
    def gates(self) -> tuple[Gate, ...]:
        """Every gate in execution order (preamble first)."""
        flat = list(self.preamble)
        for seg in self.segments:
            flat.extend(seg)
        return tuple(flat)

    @property
    def gate_count(self) -> int:
        return len(self.preamble) + sum(len(seg) for seg in self.segments)


def build_qft(n: int, input: str) -> Circuit:
    """QFT circuit on ``n`` qubits prepared in |input>.

    The preamble holds the state-preparation X gates; segment k applies a
    Hadamard to qubit k followed by the controlled phase rotations from the
    less significant qubits.  No final swap layer is emitted.
    """
    if not 2 <= n <= 10:
        raise ValueError(f"qft qubit count {n} outside supported range 2..10")
    program = ProgramSpec("qft", n, input)
    preamble = tuple(x(q) for q in range(n) if input[q] == "1")
    segments = []
    for k in range(n):
        seg = [h(k)]
        for m in range(1, n - k):
            seg.append(cphase(math.pi / (1 << m), k + m, k))
        segments.append(tuple(seg))
    return Circuit(n, preamble, tuple(segments), program)


def grover_iteration_count(n: int) -> int:
    """Optimal Grover operator repetitions floor(pi/4 * sqrt(2^n))."""
    if n < 2:
        raise ValueError("grover needs at least two qubits")
    return math.floor(math.pi / 4.0 * math.sqrt(1 << n))


def _grover_oracle(n: int, marked: str) -> list[Gate]:
    flips = [x(q) for q in range(n) if marked[q] == "0"]
    return flips + [mcz(*range(n))] + list(flips)


def _grover_diffusion(n: int) -> list[Gate]:
    hs = [h(q) for q in range(n)]
    xs = [x(q) for q in range(n)]
    return hs + xs + [mcz(*range(n))] + list(xs) + list(hs)


def build_grover(n: int, marked: str) -> Circuit:
    """Grover circuit searching for the single ``marked`` item.

    The preamble is the initial Hadamard layer; each of the
    grover_iteration_count(n) segments is one full Grover operator
    (phase oracle followed by the diffusion operator).
    """
    if not 2 <= n <= 6:
        raise ValueError(f"grover qubit count {n} outside supported range 2..6")
    program = ProgramSpec("grover", n, marked)
    preamble = tuple(h(q) for q in range(n))
    segment = tuple(_grover_oracle(n, marked) + _grover_diffusion(n))
    segments = tuple(segment for _ in range(grover_iteration_count(n)))
    return Circuit(n, preamble, segments, program)


def dag_depth(qubit_groups: Iterable[Sequence[int]]) -> int:
    """Longest path over ops ordered by shared qubits; each op counts 1."""
    frontier: dict[int, int] = {}
    depth = 0
    for qs in qubit_groups:
        level = 1 + max((frontier.get(q, 0) for q in qs), default=0)
        for q in qs:
            frontier[q] = level
        depth = max(depth, level)
    return depth


def circuit_depth(c: Circuit) -> int:
    return dag_depth(g.qubits() for g in c.gates)


def truncate_to_segment(c: Circuit, k: int) -> Circuit:
    """Prefix circuit containing the preamble and segments 0..k inclusive."""
    if not 0 <= k < c.num_segments:
        raise ValueError(f"segment index {k} out of range 0..{c.num_segments - 1}")
    return Circuit(c.n, c.preamble, c.segments[: k + 1], c.program)


def _gate_from_dict(d: dict, where: str) -> Gate:
    if not isinstance(d, dict) or "kind" not in d or "targets" not in d:
        raise CircuitParseError(f"{where}: gate object needs 'kind' and 'targets'")
    try:
        return Gate(
            kind=str(d["kind"]),
            targets=tuple(int(t) for t in d["targets"]),
            angle=float(d["angle"]) if "angle" in d and d["angle"] is not None else None,
            controls=tuple(int(c) for c in d.get("controls", ())),
        )
    except (TypeError, ValueError) as exc:
        raise CircuitParseError(f"{where}: {exc}") from None


def circuit_to_dict(c: Circuit) -> dict:
    return {
        "n": c.n,
        "program": c.program.to_dict() if c.program else None,
        "preamble": [g.to_dict() for g in c.preamble],
        "segments": [[g.to_dict() for g in seg] for seg in c.segments],
    }


def circuit_from_dict(doc: dict) -> Circuit:
    if not isinstance(doc, dict):
        raise CircuitParseError("circuit document must be a JSON object")
    for key in ("n", "preamble", "segments"):
        if key not in doc:
            raise CircuitParseError(f"circuit document missing {key!r}")
    program = None
    if doc.get("program") is not None:
        p = doc["program"]
        try:
            program = ProgramSpec(p["kind"], int(p["n"]), str(p["input"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CircuitParseError(f"program: {exc}") from None
    preamble = tuple(
        _gate_from_dict(g, f"preamble, gate {i}") for i, g in enumerate(doc["preamble"])
    )
    segments = tuple(
        tuple(
            _gate_from_dict(g, f"segment {k}, gate {i}") for i, g in enumerate(seg)
        )
        for k, seg in enumerate(doc["segments"])
    )
    try:
        return Circuit(int(doc["n"]), preamble, segments, program)
    except CircuitParseError:
        raise
    except (TypeError, ValueError) as exc:
        raise CircuitParseError(str(exc)) from None


def serialize(c: Circuit) -> str:
    return json.dumps(circuit_to_dict(c))


def deserialize(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return circuit_from_dict(doc)
