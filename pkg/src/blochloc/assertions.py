"""Runtime assertion execution and fault localization verdicts.

Two approaches over the same segmented circuits:

* Bloq: after each segment, reconstruct the planned qubits' Bloch vectors
  from Pauli expectation estimates (3 x shots each), compare to the
  assertion scheme via state fidelity and FAIL when
  F < 1 - t/100.  Execution stops at the first failing assertion.
* Proq: build one instrumented circuit that, after every segment,
  uncomputes, mid-circuit-measures into a dedicated classical register and
  recomputes.  The whole circuit always runs; segment k FAILs when the
  empirical frequency of its expected bitstring drops below 1 - t/100.

Verdict JSON reports segment indices 1-based (matching the usual tabular
convention); all in-memory indices are 0-based.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .circuits import (
    Circuit,
    Gate,
    ProgramSpec,
    adjoint_sequence,
    dag_depth,
    h,
    rz,
)
from .linalg import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BlochVector,
    basis_state,
    density_from_bloch,
    fidelity,
    outer,
)
from .schemes import (
    AssertionScheme,
    build_program_circuit,
    qft_phase_fraction,
    assertion_plan,
)
from .simulator import (
    ANALYTIC_SHOTS,
    BackendConfig,
    apply_gate,
    apply_gate_density,
    basis_change_gates,
    born_probabilities,
    child_rng,
    depolarize,
    pauli_stream_key,
)

_AXES = ("X", "Y", "Z")
_FREQ_SNAP = 1e-9  # float dust guard so exact matches survive t = 0


def validate_threshold(t: float) -> float:
    if not 0.0 <= t <= 100.0:
        raise ValueError(f"threshold {t} outside [0, 100]")
    return float(t)


@dataclass(frozen=True)
class AssertionOutcome:
    """One assessed assertion.  ``fidelity`` holds the state fidelity for
    Bloq and the expected-bitstring frequency for Proq; both FAIL when the
    value drops below 1 - t/100."""

    q: int
    k: int
    fidelity: float
    verdict: str  # "pass" | "fail"

    def to_dict(self) -> dict:
        return {"q": self.q, "k": self.k + 1, "fidelity": self.fidelity, "verdict": self.verdict}


@dataclass(frozen=True)
class LocalizationVerdict:
    result: str  # "clean" | "faulty"
    segment: int | None
    qubit: int | None
    segments_executed: int
    shots_used: int
    depth_executed: int
    assertions: tuple[AssertionOutcome, ...]

    def to_dict(self) -> dict:
        return {
            "result": self.result,
            "segment": None if self.segment is None else self.segment + 1,
            "qubit": self.qubit,
            "segments_executed": self.segments_executed,
            "shots": self.shots_used,
            "depth_executed": self.depth_executed,
            "assertions": [a.to_dict() for a in self.assertions],
        }


def bloq_single_assess(
    measured: np.ndarray, expected: np.ndarray, t: float, q: int = -1, k: int = -1
) -> AssertionOutcome:
    """Single-qubit test: FAIL iff F(measured, expected) < 1 - t/100."""
    validate_threshold(t)
    f = fidelity(measured, expected)
    verdict = "fail" if f < 1.0 - t / 100.0 else "pass"
    return AssertionOutcome(q, k, f, verdict)


def bloq_segment_assess(outcomes) -> str:
    """Segment test: PASS only if every single-qubit outcome passed."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("segment assessment needs at least one outcome")
    return "pass" if all(o.verdict == "pass" for o in outcomes) else "fail"


# ---------------------------------------------------------------------------
# Bloq execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BloqAssertionResult:
    q: int
    k: int
    measured: BlochVector
    expected: BlochVector
    fidelity: float
    depth: int  # prefix depth + deepest basis change
    cost_ms: float


def _check_coverage(c: Circuit, scheme: AssertionScheme) -> list[tuple[int, tuple[int, ...]]]:
    plan = assertion_plan(c)
    for k, qubits in plan:
        for q in qubits:
            if (q, k) not in scheme.entries:
                raise ValueError(f"assertion scheme has no entry for qubit {q}, segment {k}")
    return plan


def iter_bloq_assertions(
    c: Circuit, scheme: AssertionScheme, backend: BackendConfig, shots: int
) -> Iterator[BloqAssertionResult]:
    """Measure the test plan in order, yielding assertion results lazily.

    The circuit state is evolved once across segments; per-assertion basis
    changes branch off a snapshot.  RNG streams are derived per
    (segment, qubit, axis), so results are identical whether the consumer
    stops at the first failure or drains the whole plan, and identical to
    chaining the public ``estimate_pauli`` on truncated prefixes.
    """
    plan = _check_coverage(c, scheme)
    n = c.n
    noisy = backend.is_noisy
    state = outer(basis_state("0" * n)) if noisy else basis_state("0" * n)

    def advance(st, gates):
        for gate in gates:
            if noisy:
                st = apply_gate_density(st, gate, n)
                p = backend.p1 if len(gate.qubits()) == 1 else backend.p2
                st = depolarize(st, gate.qubits(), p, n)
            else:
                st = apply_gate(st, gate, n)
        return st

    state = advance(state, c.preamble)
    frontier: dict[int, int] = {}
    depth = 0
    for gate in c.preamble:
        level = 1 + max((frontier.get(q, 0) for q in gate.qubits()), default=0)
        for q in gate.qubits():
            frontier[q] = level
        depth = max(depth, level)

    for k, qubits in plan:
        state = advance(state, c.segments[k])
        for gate in c.segments[k]:
            level = 1 + max((frontier.get(q, 0) for q in gate.qubits()), default=0)
            for q in gate.qubits():
                frontier[q] = level
            depth = max(depth, level)
        for q in qubits:
            start = time.perf_counter()
            components = []
            for axis in _AXES:
                branch = advance(state, basis_change_gates(q, axis))
                probs = born_probabilities(branch).reshape([2] * n)
                p_one = float(probs.sum(axis=tuple(i for i in range(n) if i != q))[1])
                f = backend.p_readout
                p_obs = min(max(p_one * (1.0 - f) + (1.0 - p_one) * f, 0.0), 1.0)
                if shots == ANALYTIC_SHOTS:
                    components.append(1.0 - 2.0 * p_obs)
                else:
                    rng = child_rng(backend, *pauli_stream_key(k, q, axis))
                    ones = int(rng.binomial(shots, p_obs))
                    components.append((shots - 2 * ones) / shots)
            r = np.array(components)
            norm = float(np.linalg.norm(r))
            if norm > 1.0:
                r = r / norm
            measured = BlochVector(float(r[0]), float(r[1]), float(r[2]))
            expected = scheme.entries[(q, k)]
            f_val = fidelity(density_from_bloch(measured), density_from_bloch(expected))
            cost = (time.perf_counter() - start) * 1000.0
            yield BloqAssertionResult(q, k, measured, expected, f_val, depth + 2, cost)


def _bloq_verdict(
    executed: list[BloqAssertionResult], failed: bool, k_total: int, shots: int
) -> LocalizationVerdict:
    outcomes = tuple(
        AssertionOutcome(
            a.q,
            a.k,
            a.fidelity,
            "fail" if failed and i == len(executed) - 1 else "pass",
        )
        for i, a in enumerate(executed)
    )
    last = executed[-1]
    return LocalizationVerdict(
        result="faulty" if failed else "clean",
        segment=last.k if failed else None,
        qubit=last.q if failed else None,
        segments_executed=(last.k + 1) if failed else k_total,
        shots_used=3 * shots * len(executed),
        depth_executed=max(a.depth for a in executed),
        assertions=outcomes,
    )


@dataclass
class BloqTrace:
    """Full measurement pass; verdicts at any threshold replay the walk."""

    k_total: int
    shots: int
    assertions: list[BloqAssertionResult]

    def _walk(self, t: float) -> tuple[list[BloqAssertionResult], bool]:
        thr = 1.0 - validate_threshold(t) / 100.0
        executed: list[BloqAssertionResult] = []
        for a in self.assertions:
            executed.append(a)
            if a.fidelity < thr:
                return executed, True
        return executed, False

    def verdict_at(self, t: float) -> LocalizationVerdict:
        executed, failed = self._walk(t)
        return _bloq_verdict(executed, failed, self.k_total, self.shots)

    def runtime_ms_at(self, t: float) -> float:
        executed, _ = self._walk(t)
        return sum(a.cost_ms for a in executed)


def measure_bloq(
    c: Circuit, scheme: AssertionScheme, backend: BackendConfig, shots: int
) -> BloqTrace:
    return BloqTrace(c.num_segments, shots, list(iter_bloq_assertions(c, scheme, backend, shots)))


def run_bloq(
    c: Circuit, scheme: AssertionScheme, backend: BackendConfig, shots: int, t: float
) -> LocalizationVerdict:
    """Segment-by-segment Bloq localization with early exit on first FAIL."""
    thr = 1.0 - validate_threshold(t) / 100.0
    executed: list[BloqAssertionResult] = []
    failed = False
    for a in iter_bloq_assertions(c, scheme, backend, shots):
        executed.append(a)
        if a.fidelity < thr:
            failed = True
            break
    return _bloq_verdict(executed, failed, c.num_segments, shots)


# ---------------------------------------------------------------------------
# Proq execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProqPlan:
    """Per-segment instrumentation: uncompute, measure, recompute."""

    uncompute: tuple[Gate, ...]
    measured: tuple[int, ...]
    expected: str
    recompute: tuple[Gate, ...]


def build_proq_plan(program: ProgramSpec, k: int) -> ProqPlan:
    """Instrumentation for segment k of a supported program.

    QFT: invert the segment's effective single-qubit action on qubit k
    (H after unwinding the controlled-rotation phase, which is known from
    the input bits below k) and expect the input bit back.  Grover: invert
    every Grover operator applied so far plus the initial Hadamard layer
    and expect |0...0>.
    """
    circuit = build_program_circuit(program)
    if not 0 <= k < circuit.num_segments:
        raise ValueError(f"segment index {k} out of range")
    if program.kind == "qft":
        frac = qft_phase_fraction(k, program.input)
        if program.input[k] == "1":
            frac -= Fraction(1, 2)  # rotation phase excludes the qubit's own bit
        theta = 2.0 * math.pi * float(frac)
        uncompute: tuple[Gate, ...]
        if theta != 0.0:
            uncompute = (rz(-theta, k), h(k))
        else:
            uncompute = (h(k),)
        return ProqPlan(
            uncompute=uncompute,
            measured=(k,),
            expected=program.input[k],
            recompute=adjoint_sequence(uncompute),
        )
    prefix: list[Gate] = list(circuit.preamble)
    for seg in circuit.segments[: k + 1]:
        prefix.extend(seg)
    uncompute = adjoint_sequence(prefix)
    return ProqPlan(
        uncompute=uncompute,
        measured=tuple(range(program.n)),
        expected="0" * program.n,
        recompute=tuple(prefix),
    )


@dataclass(frozen=True)
class _MeasureOp:
    k: int
    qubits: tuple[int, ...]
    expected: str


def build_instrumented_ops(c: Circuit) -> list:
    """Gate/measure op list of the fully instrumented Proq circuit."""
    if c.program is None:
        raise ValueError("proq instrumentation needs a program-typed circuit")
    ops: list = list(c.preamble)
    for k in range(c.num_segments):
        plan = build_proq_plan(c.program, k)
        ops.extend(c.segments[k])
        ops.extend(plan.uncompute)
        ops.append(_MeasureOp(k, plan.measured, plan.expected))
        ops.extend(plan.recompute)
    return ops


def instrumented_depth(c: Circuit) -> int:
    return dag_depth(
        op.qubits if isinstance(op, _MeasureOp) else op.qubits()
        for op in build_instrumented_ops(c)
    )


@dataclass(frozen=True)
class SegmentFrequencies:
    k: int
    joint: float
    per_qubit: tuple[tuple[int, float], ...]
    expected: str


def _snap(freq: float) -> float:
    return 1.0 if freq > 1.0 - _FREQ_SNAP else freq


def _measured_bit_index(qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Packed measured-register value for every global basis index."""
    idx = np.arange(1 << n)
    packed = np.zeros_like(idx)
    for pos, q in enumerate(qubits):
        bit = (idx >> (n - 1 - q)) & 1
        packed |= bit << (len(qubits) - 1 - pos)
    return packed


def _readout_transition(f: float) -> np.ndarray:
    return np.array([[1.0 - f, f], [f, 1.0 - f]])


def _proq_analytic(ops, n: int, backend: BackendConfig) -> list[SegmentFrequencies]:
    """Density-matrix pass; mid-circuit measurement becomes a dephasing
    superoperator and frequencies are exact outcome probabilities."""
    rho = outer(basis_state("0" * n))
    results = []
    for op in ops:
        if isinstance(op, _MeasureOp):
            m = len(op.qubits)
            probs = np.clip(np.diag(rho).real, 0.0, None).reshape([2] * n)
            marg = probs.sum(axis=tuple(i for i in range(n) if i not in op.qubits))
            total = marg.sum()
            if total > 0:
                marg = marg / total
            if backend.p_readout > 0.0:
                t_mat = _readout_transition(backend.p_readout)
                for axis in range(m):
                    marg = np.moveaxis(np.tensordot(t_mat, marg, axes=(1, axis)), 0, axis)
            joint = _snap(float(marg[tuple(int(b) for b in op.expected)]))
            per_qubit = []
            for pos, q in enumerate(op.qubits):
                axes = tuple(i for i in range(m) if i != pos)
                p_bit = marg.sum(axis=axes)[int(op.expected[pos])]
                per_qubit.append((q, _snap(float(p_bit))))
            results.append(SegmentFrequencies(op.k, joint, tuple(per_qubit), op.expected))
            # collapse: drop coherences on the measured qubits
            tensor = rho.reshape([2] * (2 * n))
            for q in op.qubits:
                for a, b in ((0, 1), (1, 0)):
                    sl = [slice(None)] * (2 * n)
                    sl[q] = a
                    sl[n + q] = b
                    tensor[tuple(sl)] = 0.0
            rho = tensor.reshape(rho.shape)
        else:
            rho = apply_gate_density(rho, op, n)
            p = 0.0 if not backend.is_noisy else (
                backend.p1 if len(op.qubits()) == 1 else backend.p2
            )
            if p > 0.0:
                rho = depolarize(rho, op.qubits(), p, n)
    return results


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    for shift in (16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def _apply_pauli_vec(vec: np.ndarray, a_mask: int, b_mask: int, idx: np.ndarray) -> np.ndarray:
    perm = idx ^ a_mask
    signs = 1.0 - 2.0 * _parity(perm & b_mask)
    return vec[perm] * signs


def _pauli_masks(pauli_index: int, qubits: tuple[int, ...], n: int) -> tuple[int, int]:
    a_mask = b_mask = 0
    for q in qubits:
        digit = pauli_index % 4  # 0=I, 1=X, 2=Y, 3=Z
        pauli_index //= 4
        weight = 1 << (n - 1 - q)
        if digit in (1, 2):
            a_mask |= weight
        if digit in (2, 3):
            b_mask |= weight
    return a_mask, b_mask


def _proq_trajectories(
    ops, n: int, backend: BackendConfig, shots: int
) -> list[SegmentFrequencies]:
    """Per-shot trajectory ensemble with projective collapse at measurements.

    Depolarizing noise is unravelled stochastically: after each gate every
    trajectory draws a uniform nontrivial Pauli on the gate's qubits with
    the gate-class probability.  Readout flips apply to recorded bits only.
    """
    dim = 1 << n
    rng = child_rng(backend, 1)
    idx = np.arange(dim)
    arr = np.zeros((dim, shots), dtype=complex)
    arr[0, :] = 1.0
    results = []
    for op in ops:
        if isinstance(op, _MeasureOp):
            m = len(op.qubits)
            probs = (np.abs(arr) ** 2).reshape([2] * n + [shots])
            marg = probs.sum(axis=tuple(i for i in range(n) if i not in op.qubits))
            marg = marg.reshape(1 << m, shots)
            marg /= marg.sum(axis=0, keepdims=True)
            u = rng.random(shots)
            outcome = (np.cumsum(marg, axis=0) > u[None, :]).argmax(axis=0)
            packed = _measured_bit_index(op.qubits, n)
            arr = arr * (packed[:, None] == outcome[None, :])
            norms = np.sqrt((np.abs(arr) ** 2).sum(axis=0))
            arr /= norms[None, :]
            recorded = outcome.copy()
            if backend.p_readout > 0.0:
                flips = rng.random((m, shots)) < backend.p_readout
                for pos in range(m):
                    recorded ^= flips[pos].astype(int) << (m - 1 - pos)
            expected_int = int(op.expected, 2)
            joint = _snap(float((recorded == expected_int).mean()))
            per_qubit = []
            for pos, q in enumerate(op.qubits):
                bit = (recorded >> (m - 1 - pos)) & 1
                per_qubit.append((q, _snap(float((bit == int(op.expected[pos])).mean()))))
            results.append(SegmentFrequencies(op.k, joint, tuple(per_qubit), op.expected))
        else:
            arr = apply_gate(arr, op, n)
            if backend.is_noisy:
                qs = op.qubits()
                p = backend.p1 if len(qs) == 1 else backend.p2
                if p > 0.0:
                    hits = np.flatnonzero(rng.random(shots) < p)
                    for t_idx in hits:
                        pauli_index = int(rng.integers(1, 4 ** len(qs)))
                        a_mask, b_mask = _pauli_masks(pauli_index, qs, n)
                        arr[:, t_idx] = _apply_pauli_vec(arr[:, t_idx], a_mask, b_mask, idx)
    return results


@dataclass
class ProqTrace:
    k_total: int
    shots: int
    depth: int
    cost_ms: float
    segments: list[SegmentFrequencies]

    def verdict_at(self, t: float) -> LocalizationVerdict:
        thr = 1.0 - validate_threshold(t) / 100.0
        outcomes = []
        fail_seg: SegmentFrequencies | None = None
        for seg in self.segments:
            failed = seg.joint < thr
            if failed and fail_seg is None:
                fail_seg = seg
            q_attr = seg.per_qubit[0][0]
            if failed:
                below = [q for q, freq in seg.per_qubit if freq < thr]
                q_attr = below[0] if below else min(seg.per_qubit, key=lambda e: e[1])[0]
            outcomes.append(
                AssertionOutcome(q_attr, seg.k, seg.joint, "fail" if failed else "pass")
            )
        return LocalizationVerdict(
            result="faulty" if fail_seg is not None else "clean",
            segment=None if fail_seg is None else fail_seg.k,
            qubit=None if fail_seg is None else next(
                o.q for o in outcomes if o.k == fail_seg.k
            ),
            segments_executed=self.k_total,
            shots_used=self.shots,
            depth_executed=self.depth,
            assertions=tuple(outcomes),
        )

    def runtime_ms_at(self, t: float) -> float:
        return self.cost_ms  # the instrumented circuit always runs in full


def measure_proq(c: Circuit, backend: BackendConfig, shots: int) -> ProqTrace:
    ops = build_instrumented_ops(c)
    depth = dag_depth(
        op.qubits if isinstance(op, _MeasureOp) else op.qubits() for op in ops
    )
    start = time.perf_counter()
    if shots == ANALYTIC_SHOTS:
        segments = _proq_analytic(ops, c.n, backend)
    else:
        if shots < 1:
            raise ValueError("shots must be >= 1 or the analytic sentinel 0")
        segments = _proq_trajectories(ops, c.n, backend, shots)
    cost = (time.perf_counter() - start) * 1000.0
    return ProqTrace(c.num_segments, shots, depth, cost, segments)


def run_proq(c: Circuit, backend: BackendConfig, shots: int, t: float) -> LocalizationVerdict:
    """Proq localization: full instrumented run, first failing segment wins."""
    validate_threshold(t)
    return measure_proq(c, backend, shots).verdict_at(t)


# ---------------------------------------------------------------------------
# Fault-equivalent matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FaultUnitary:
    """Unitary F with F expected F^dagger = measured.

    ``degenerate`` flags repeated spectra, where F is not unique.
    """

    matrix: np.ndarray
    degenerate: bool


def _sorted_eig(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    evals, vecs = np.linalg.eigh(rho)
    order = np.argsort(evals)[::-1]
    evals, vecs = evals[order], vecs[:, order]
    for i in range(vecs.shape[1]):
        col = vecs[:, i]
        lead = np.argmax(np.abs(col))
        phase = col[lead] / abs(col[lead]) if abs(col[lead]) > 0 else 1.0
        vecs[:, i] = col / phase
    return evals, vecs


def infer_fault_unitary(
    measured: np.ndarray, expected: np.ndarray, tol: float = 1e-6
) -> FaultUnitary | None:
    """Reconstruct the fault-equivalent matrix from eigenbases.

    Returns None when the spectra differ beyond ``tol`` (no unitary can
    relate the states).  Eigenvector global phases are fixed by making the
    largest-magnitude component real positive, so F is deterministic.
    """
    measured = np.asarray(measured, dtype=complex)
    expected = np.asarray(expected, dtype=complex)
    ev_m, vec_m = _sorted_eig(measured)
    ev_e, vec_e = _sorted_eig(expected)
    if np.abs(ev_m - ev_e).max() > tol:
        return None
    degenerate = bool(
        np.diff(ev_m).size and (np.abs(np.diff(ev_m)).min() < tol or np.abs(np.diff(ev_e)).min() < tol)
    )
    return FaultUnitary(vec_m @ vec_e.conj().T, degenerate)


_NAMED_GATES = (
    ("x", PAULI_X),
    ("y", PAULI_Y),
    ("z", PAULI_Z),
    ("s", np.array([[1, 0], [0, 1j]], dtype=complex)),
    ("h", np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)),
)


def identify_fault_gate(
    measured: np.ndarray, expected: np.ndarray, tol: float = 1e-8
) -> str | None:
    """Name the first single-qubit fault-set gate whose conjugation maps the
    expected state onto the measured one, or None."""
    for name, u in _NAMED_GATES:
        if np.abs(u @ expected @ u.conj().T - measured).max() < tol:
            return name
    return None
