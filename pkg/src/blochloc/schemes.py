"""Expected Bloch vectors per (qubit, segment) for supported programs.

Two routes produce the same answer and are tested against each other:

* closed forms: the QFT per-qubit phase state gives (cos theta, sin theta, 0)
  and the Grover reduced state gives (<X>, 0, <Z>) with
      <X> = cos^2(phi_k) (N-2)/(N-1) + sin(2 phi_k)/sqrt(N-1)
      <Z> = [sin^2(phi_k) - cos^2(phi_k)/(N-1)] (-1)^{j_q}
  where phi_k = (2k+1)/2 * theta and sin(theta) = 2 sqrt(N-1)/N (M = 1);
* the numeric procedure: simulate the prefix, take the reduced density
  matrix of the qubit and read off its Bloch vector.

The numeric route works for any circuit and is the ground-truth oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .circuits import (
    Circuit,
    ProgramSpec,
    build_grover,
    build_qft,
    grover_iteration_count,
    truncate_to_segment,
)
from .linalg import BlochVector, bloch_of, outer, partial_trace
from .simulator import run_statevector


def qft_phase_fraction(q: int, j: str) -> Fraction:
    """Binary fraction 0.j_q j_{q+1} ... j_{n-1} as an exact rational."""
    n = len(j)
    if not 0 <= q < n:
        raise ValueError(f"qubit {q} out of range for input {j!r}")
    return sum(
        (Fraction(1, 1 << (m + 1)) for m in range(n - q) if j[q + m] == "1"),
        Fraction(0),
    )


def qft_theta(q: int, k: int, j: str) -> float:
    """Phase angle of qubit q's factor state after its QFT segment.

    QFT segments act one qubit at a time, so k must equal q.  The angle is
    2*pi times an exact binary fraction of the input bits entering the
    factor; the rational arithmetic keeps e.g. theta = pi exact.
    """
    if k != q:
        raise ValueError(f"qft asserts qubit k at segment k; got q={q}, k={k}")
    return 2.0 * math.pi * float(qft_phase_fraction(q, j))


def qft_scheme(q: int, k: int, j: str) -> BlochVector:
    """Expected QFT Bloch vector (cos theta, sin theta, 0); unit norm."""
    theta = qft_theta(q, k, j)
    return BlochVector(math.cos(theta), math.sin(theta), 0.0)


@dataclass(frozen=True)
class GroverAngles:
    """Rotation geometry of Grover iterations for N = 2^n, M = 1."""

    n: int
    theta: float

    @classmethod
    def for_qubits(cls, n: int) -> "GroverAngles":
        if n < 2:
            raise ValueError("grover needs at least two qubits")
        big_n = 1 << n
        return cls(n, 2.0 * math.asin(1.0 / math.sqrt(big_n)))

    def phi(self, k: int) -> float:
        """Angle of the state after k Grover iterations: (2k+1)/2 * theta."""
        return (2 * k + 1) / 2.0 * self.theta


def grover_scheme(q: int, k: int, j: str, n: int) -> BlochVector:
    """Expected Grover Bloch vector for qubit q after k iterations.

    k counts applied Grover operators (k = 0 is the uniform superposition
    right after the initial Hadamard layer).  <Y> is zero; the input enters
    only through the sign (-1)^{j_q} of the marked bit.
    """
    if len(j) != n or any(b not in "01" for b in j):
        raise ValueError(f"marked item {j!r} is not an {n}-bit string")
    if not 0 <= q < n:
        raise ValueError(f"qubit {q} out of range for {n} qubits")
    if not 0 <= k <= grover_iteration_count(n):
        raise ValueError(f"iteration count {k} out of range for n={n}")
    big_n = 1 << n
    phi = GroverAngles.for_qubits(n).phi(k)
    cos2, sin2 = math.cos(phi) ** 2, math.sin(phi) ** 2
    x = cos2 * (big_n - 2) / (big_n - 1) + math.sin(2 * phi) / math.sqrt(big_n - 1)
    z = (sin2 - cos2 / (big_n - 1)) * (-1 if j[q] == "1" else 1)
    return BlochVector(x, 0.0, z)


def numeric_scheme(c: Circuit, q: int, k: int) -> BlochVector:
    """Ground-truth Bloch vector: simulate the prefix through segment k,
    reduce to qubit q and decompose in the Pauli basis.  No sampling."""
    psi = run_statevector(truncate_to_segment(c, k))
    return bloch_of(partial_trace(outer(psi), q))


def assertion_plan(c: Circuit) -> list[tuple[int, tuple[int, ...]]]:
    """Asserted qubits per segment: QFT checks qubit k after segment k,
    everything else checks every qubit after every segment."""
    if c.program is not None and c.program.kind == "qft":
        return [(k, (k,)) for k in range(c.num_segments)]
    return [(k, tuple(range(c.n))) for k in range(c.num_segments)]


@dataclass(frozen=True)
class AssertionScheme:
    """Expected Bloch vectors keyed by (qubit, segment index)."""

    program: ProgramSpec | None
    entries: dict[tuple[int, int], BlochVector]

    def to_dict(self) -> dict:
        return {
            "program": self.program.to_dict() if self.program else None,
            "entries": [
                {"q": q, "k": k, "bloch": [v.x, v.y, v.z]}
                for (q, k), v in sorted(self.entries.items(), key=lambda e: (e[0][1], e[0][0]))
            ],
        }


@lru_cache(maxsize=256)
def build_scheme(program: ProgramSpec) -> AssertionScheme:
    """Analytic assertion scheme for a supported program.

    QFT contributes one entry per segment (its own qubit); Grover one entry
    per qubit per segment.  Entries are memoized per program + input.
    """
    entries: dict[tuple[int, int], BlochVector] = {}
    if program.kind == "qft":
        for k in range(program.n):
            entries[(k, k)] = qft_scheme(k, k, program.input)
    elif program.kind == "grover":
        for k in range(grover_iteration_count(program.n)):
            for q in range(program.n):
                entries[(q, k)] = grover_scheme(q, k + 1, program.input, program.n)
    else:  # unreachable through ProgramSpec validation
        raise ValueError(f"unsupported program kind {program.kind!r}")
    return AssertionScheme(program, entries)


def numeric_assertion_scheme(c: Circuit) -> AssertionScheme:
    """Assertion scheme for an arbitrary circuit via the numeric procedure."""
    entries = {
        (q, k): numeric_scheme(c, q, k) for k, qubits in assertion_plan(c) for q in qubits
    }
    return AssertionScheme(c.program, entries)


def build_program_circuit(program: ProgramSpec) -> Circuit:
    if program.kind == "qft":
        return build_qft(program.n, program.input)
    return build_grover(program.n, program.input)
