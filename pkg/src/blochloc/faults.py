"""Gate-level fault injection: Add, Remove and Replace mutations.

The fault gate set is {X, Y, Z, CNOT, S, H}.  Enumeration is deterministic
per seed: every "arbitrary" selection (removed gate, replacement gate,
Grover add qubit) comes from one seeded stream, and the seed is recorded in
each spec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate, cnot, h, s, x, y, z
from .simulator import run_statevector

FAULT_GATE_SET = ("x", "y", "z", "cnot", "s", "h")

_FACTORIES = {"x": x, "y": y, "z": z, "s": s, "h": h}


@dataclass(frozen=True)
class FaultSpec:
    """One mutation: what to do, where, and on which qubits.

    ``position`` is the gate index within the segment for Remove/Replace
    and the insertion index for Add.  ``gate`` is absent for Remove.
    """

    category: str  # "add" | "remove" | "replace"
    gate: str | None
    segment: int
    qubits: tuple[int, ...]
    position: int
    seed: int = 0

    def __post_init__(self):
        if self.category not in ("add", "remove", "replace"):
            raise ValueError(f"unknown fault category {self.category!r}")
        if self.category == "remove":
            if self.gate is not None:
                raise ValueError("remove faults carry no gate type")
        elif self.gate not in FAULT_GATE_SET:
            raise ValueError(f"gate {self.gate!r} not in fault set {FAULT_GATE_SET}")

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "gate": self.gate,
            "segment": self.segment,
            "qubits": list(self.qubits),
            "position": self.position,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FaultSpec":
        return cls(
            category=d["category"],
            gate=d.get("gate"),
            segment=int(d["segment"]),
            qubits=tuple(int(q) for q in d["qubits"]),
            position=int(d["position"]),
            seed=int(d.get("seed", 0)),
        )


def _fault_gate(spec: FaultSpec, n: int) -> Gate:
    if spec.gate == "cnot":
        if n < 2:
            raise ValueError("cnot fault needs at least two qubits")
        if len(spec.qubits) != 2 or spec.qubits[0] == spec.qubits[1]:
            raise ValueError(f"cnot fault needs two distinct qubits, got {spec.qubits}")
        return cnot(spec.qubits[0], spec.qubits[1])
    if len(spec.qubits) != 1:
        raise ValueError(f"{spec.gate} fault targets one qubit, got {spec.qubits}")
    return _FACTORIES[spec.gate](spec.qubits[0])


def inject(c: Circuit, spec: FaultSpec) -> Circuit:
    """Apply one mutation, returning a new circuit with segments intact."""
    if not 0 <= spec.segment < c.num_segments:
        raise ValueError(f"fault segment {spec.segment} out of range")
    seg = list(c.segments[spec.segment])
    if spec.category == "add":
        if not 0 <= spec.position <= len(seg):
            raise ValueError(f"insertion point {spec.position} out of range")
        seg.insert(spec.position, _fault_gate(spec, c.n))
    else:
        if not seg:
            raise ValueError(f"segment {spec.segment} is empty")
        if not 0 <= spec.position < len(seg):
            raise ValueError(f"gate position {spec.position} out of range")
        if spec.category == "remove":
            del seg[spec.position]
        else:
            old = seg[spec.position]
            new = _fault_gate(spec, c.n)
            if new.kind == old.kind:
                raise ValueError(
                    f"replace fault must change the gate kind (both {old.kind!r})"
                )
            seg[spec.position] = new
    segments = tuple(
        tuple(seg) if k == spec.segment else c.segments[k] for k in range(c.num_segments)
    )
    return Circuit(c.n, c.preamble, segments, c.program)


def enumerate_faults(c: Circuit, seed: int = 0) -> list[FaultSpec]:
    """Experiment fault catalog: per segment, one Add per fault-set gate,
    one Remove of an arbitrary gate, one Replace by a different gate.

    Single-qubit Adds target the asserted qubit for QFT (segment k checks
    qubit k only) and a seeded-random qubit otherwise; CNOT adds pair the
    chosen qubit with its successor mod n.  Adds land at the end of the
    segment so its own assertion observes them.
    """
    rng = np.random.default_rng(seed)
    is_qft = c.program is not None and c.program.kind == "qft"
    specs: list[FaultSpec] = []
    for k, seg in enumerate(c.segments):
        for gate_type in FAULT_GATE_SET:
            q = k if is_qft else int(rng.integers(c.n))
            qubits = (q, (q + 1) % c.n) if gate_type == "cnot" else (q,)
            specs.append(FaultSpec("add", gate_type, k, qubits, len(seg), seed))
        if not seg:
            continue
        pos = int(rng.integers(len(seg)))
        specs.append(FaultSpec("remove", None, k, seg[pos].qubits(), pos, seed))
        pos = int(rng.integers(len(seg)))
        old = seg[pos]
        choices = [g for g in FAULT_GATE_SET if g != old.kind]
        new_kind = choices[int(rng.integers(len(choices)))]
        anchor = old.targets[0]
        qubits = (anchor, (anchor + 1) % c.n) if new_kind == "cnot" else (anchor,)
        specs.append(FaultSpec("replace", new_kind, k, qubits, pos, seed))
    return specs


def fault_observable(original: Circuit, mutant: Circuit) -> bool:
    """Whether the mutation changes the ideal final state (up to phase).

    Some mutants stabilize the state on specific inputs (e.g. Z on a
    computational-basis qubit); they are kept in the experiment matrix but
    flagged for analysis.
    """
    a = run_statevector(original)
    b = run_statevector(mutant)
    overlap = abs(np.vdot(a, b))
    return bool(1.0 - overlap * overlap > 1e-9)
