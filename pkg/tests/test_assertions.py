import math

import numpy as np
import pytest

from blochloc.assertions import (
    AssertionOutcome,
    bloq_segment_assess,
    bloq_single_assess,
    build_proq_plan,
    identify_fault_gate,
    infer_fault_unitary,
    instrumented_depth,
    iter_bloq_assertions,
    measure_bloq,
    measure_proq,
    run_bloq,
    run_proq,
)
from blochloc.circuits import (
    build_grover,
    build_qft,
    circuit_depth,
    h,
    rz,
    truncate_to_segment,
)
from blochloc.faults import FaultSpec, inject
from blochloc.linalg import (
    PAULI_X,
    PAULI_Y,
    basis_state,
    density_from_bloch,
    outer,
)
from blochloc.schemes import build_scheme
from blochloc.simulator import BackendConfig, estimate_pauli, gate_matrix_1q

IDEAL = BackendConfig.ideal()
KET0 = outer(basis_state("0"))


def rho_with_z(z):
    return density_from_bloch((0.0, 0.0, z))


def test_single_assess_boundaries():
    # F(|0><0|, rho(z)) = (1+z)/2, so z = 0.92 gives fidelity 0.96 exactly
    assert bloq_single_assess(KET0, KET0, 0).verdict == "pass"
    out = bloq_single_assess(rho_with_z(0.92), KET0, 3)
    assert out.fidelity == pytest.approx(0.96, abs=1e-12)
    assert out.verdict == "fail"  # 0.96 < 0.97
    out = bloq_single_assess(rho_with_z(0.94), KET0, 3)
    assert out.fidelity == pytest.approx(0.97, abs=1e-12)
    assert out.verdict == "pass"  # boundary is not strictly below
    with pytest.raises(ValueError):
        bloq_single_assess(KET0, KET0, 101)


@pytest.mark.invariant
def test_assess_monotone_in_threshold():
    rng = np.random.default_rng(13)
    for _ in range(50):
        z = rng.uniform(-1, 1)
        previous = None
        for t in range(0, 26):
            verdict = bloq_single_assess(rho_with_z(z), KET0, t).verdict
            if previous == "pass":
                assert verdict == "pass"  # pass at t implies pass at every t' > t
            previous = verdict


def test_segment_assess():
    mk = lambda v: AssertionOutcome(0, 0, 1.0, v)
    assert bloq_segment_assess([mk("pass"), mk("pass"), mk("pass")]) == "pass"
    assert bloq_segment_assess([mk("pass"), mk("fail")]) == "fail"
    assert bloq_segment_assess([mk("fail")]) == "fail"
    with pytest.raises(ValueError):
        bloq_segment_assess([])


def test_run_bloq_fault_free_clean():
    c = build_qft(3, "101")
    verdict = run_bloq(c, build_scheme(c.program), IDEAL, 0, 0)
    assert verdict.result == "clean"
    assert verdict.segments_executed == 3
    assert verdict.shots_used == 0
    assert all(a.verdict == "pass" for a in verdict.assertions)


def test_run_bloq_localizes_added_x():
    c = build_grover(2, "11")
    mutant = inject(c, FaultSpec("add", "x", 0, (1,), len(c.segments[0])))
    verdict = run_bloq(mutant, build_scheme(c.program), IDEAL, 8192, 6)
    assert verdict.result == "faulty"
    assert (verdict.segment, verdict.qubit) == (0, 1)
    assert verdict.assertions[-1].fidelity < 0.1
    # 1-based reporting in the wire format
    assert verdict.to_dict()["segment"] == 1


def test_run_bloq_early_exit():
    c = build_grover(3, "111")
    for seg in range(c.num_segments):
        mutant = inject(c, FaultSpec("add", "y", seg, (0,), len(c.segments[seg])))
        verdict = run_bloq(mutant, build_scheme(c.program), IDEAL, 0, 6)
        assert verdict.result == "faulty"
        assert verdict.segment == seg
        assert verdict.segments_executed <= seg + 1


@pytest.mark.invariant
def test_early_exit_never_reports_earlier_segment():
    # analytic ideal: prefixes before the faulted segment match the scheme exactly
    for n, kind in ((3, "grover"), (4, "qft")):
        c = build_grover(n, "1" * n) if kind == "grover" else build_qft(n, "1" * n)
        scheme = build_scheme(c.program)
        for seg in range(c.num_segments):
            q = seg if kind == "qft" else 0
            mutant = inject(c, FaultSpec("add", "h", seg, (q,), len(c.segments[seg])))
            verdict = run_bloq(mutant, scheme, IDEAL, 0, 1)
            if verdict.result == "faulty":
                assert verdict.segment >= seg


@pytest.mark.invariant
def test_bloq_trace_matches_estimate_pauli_path():
    # The incremental engine must agree exactly with the public estimator
    c = build_grover(2, "10")
    backend = BackendConfig.noisy(seed=99)
    trace = measure_bloq(c, build_scheme(c.program), backend, 4096)
    for a in trace.assertions:
        prefix = truncate_to_segment(c, a.k)
        values = [
            estimate_pauli(prefix, a.q, axis, 4096, backend).value for axis in "XYZ"
        ]
        r = np.array(values)
        norm = np.linalg.norm(r)
        if norm > 1:
            r = r / norm
        assert np.abs(a.measured.as_array() - r).max() == 0.0


def test_bloq_trace_verdicts_match_run_bloq():
    c = build_grover(3, "010")
    mutant = inject(c, FaultSpec("add", "x", 1, (2,), len(c.segments[1])))
    scheme = build_scheme(c.program)
    backend = IDEAL.with_seed(5)
    trace = measure_bloq(mutant, scheme, backend, 2048)
    for t in (0, 3, 6, 25):
        assert trace.verdict_at(t) == run_bloq(mutant, scheme, backend, 2048, t)


def test_proq_plan_qft():
    prog = build_qft(2, "00").program
    plan = build_proq_plan(prog, 1)
    assert plan.uncompute == (h(1),)  # theta = 0 collapses to a bare Hadamard
    assert plan.measured == (1,)
    assert plan.expected == "0"
    prog = build_qft(2, "01").program
    plan = build_proq_plan(prog, 0)
    assert plan.uncompute[0].kind == "rz"
    assert plan.uncompute[0].angle == pytest.approx(-math.pi / 2)
    assert plan.expected == "0"
    assert plan.recompute == tuple(g.adjoint() for g in reversed(plan.uncompute))


def test_proq_plan_qft_expects_input_bit():
    prog = build_qft(3, "110").program
    for k in range(3):
        assert build_proq_plan(prog, k).expected == prog.input[k]


def test_proq_plan_grover():
    prog = build_grover(2, "11").program
    plan = build_proq_plan(prog, 0)
    seg_gates = len(build_grover(2, "11").segments[0])
    assert len(plan.uncompute) == seg_gates + 2  # + the initial Hadamard layer
    assert plan.measured == (0, 1)
    assert plan.expected == "00"


@pytest.mark.invariant
def test_proq_plan_recompute_inverts_uncompute():
    from blochloc.circuits import Circuit
    from blochloc.simulator import run_statevector

    for prog in (build_qft(3, "101").program, build_grover(3, "011").program):
        for k in range(2):
            plan = build_proq_plan(prog, k)
            n = prog.n
            circuit = Circuit(n, (), (plan.uncompute + plan.recompute,))
            psi = run_statevector(circuit)
            assert abs(psi[0]) == pytest.approx(1.0, abs=1e-10)


def test_run_proq_fault_free_clean():
    c = build_qft(3, "011")
    verdict = run_proq(c, IDEAL.with_seed(21), 8192, 3)
    assert verdict.result == "clean"
    assert all(a.fidelity == 1.0 for a in verdict.assertions)
    assert verdict.segments_executed == 3  # no early exit


@pytest.mark.invariant
def test_proq_fault_free_frequencies_exact():
    for c in (build_qft(3, "110"), build_grover(3, "100")):
        trace = measure_proq(c, IDEAL.with_seed(4), 8192)
        for seg in trace.segments:
            assert seg.joint == 1.0
            assert all(f == 1.0 for _, f in seg.per_qubit)


def test_run_proq_detects_x_before_first_assertion():
    c = build_qft(3, "000")
    mutant = inject(c, FaultSpec("add", "x", 0, (0,), 0))
    verdict = run_proq(mutant, IDEAL.with_seed(2), 8192, 3)
    assert verdict.result == "faulty"
    assert (verdict.segment, verdict.qubit) == (0, 0)


def test_instrumented_depth_exceeds_bare_depth():
    for c in (build_qft(3, "010"), build_grover(3, "101")):
        assert instrumented_depth(c) > circuit_depth(c)


def test_proq_analytic_matches_sampled_mean():
    c = build_grover(2, "01")
    mutant = inject(c, FaultSpec("add", "h", 0, (0,), 3))
    exact = measure_proq(mutant, IDEAL, 0).segments[0].joint
    sampled = measure_proq(mutant, IDEAL.with_seed(31), 8192).segments[0].joint
    assert abs(sampled - exact) < 5 * math.sqrt(0.25 / 8192) + 1e-9


def test_proq_noisy_trajectories_run():
    c = build_grover(2, "10")
    verdict = run_proq(c, BackendConfig.noisy(seed=11), 2048, 6)
    assert verdict.result in ("clean", "faulty")
    assert verdict.shots_used == 2048


# ---------------------------------------------------------------------------
# fault-equivalent matrix
# ---------------------------------------------------------------------------


def test_fault_unitary_worked_example():
    sigma = 0.5 * (np.eye(2) + PAULI_X)
    rho = 0.5 * (np.eye(2) - PAULI_X)
    result = infer_fault_unitary(rho, sigma)
    assert result is not None and not result.degenerate
    f = result.matrix
    assert np.abs(f @ sigma @ f.conj().T - rho).max() < 1e-8
    assert np.abs(f @ f.conj().T - np.eye(2)).max() < 1e-8
    # the conjugation action matches a Y-gate fault (the X-axis flip)
    assert identify_fault_gate(rho, sigma) == "y"
    assert np.abs(PAULI_Y @ sigma @ PAULI_Y.conj().T - rho).max() < 1e-12


def test_fault_unitary_identity_case():
    rho = density_from_bloch((0.3, 0.2, 0.1))
    result = infer_fault_unitary(rho, rho)
    assert np.abs(result.matrix - np.eye(2)).max() < 1e-8


def test_fault_unitary_spectra_mismatch():
    sigma = 0.5 * (np.eye(2) + PAULI_X)  # pure
    assert infer_fault_unitary(np.eye(2) / 2, sigma) is None


def test_fault_unitary_degenerate_flag():
    result = infer_fault_unitary(np.eye(2) / 2, np.eye(2) / 2)
    assert result is not None and result.degenerate


@pytest.mark.invariant
def test_fault_unitary_is_unitary_whenever_returned():
    rng = np.random.default_rng(41)
    for _ in range(50):
        evals = np.sort(rng.dirichlet((1, 1)))[::-1]
        u1, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        u2, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        sigma = u1 @ np.diag(evals) @ u1.conj().T
        rho = u2 @ np.diag(evals) @ u2.conj().T
        result = infer_fault_unitary(rho, sigma)
        assert result is not None
        f = result.matrix
        assert np.abs(f @ f.conj().T - np.eye(2)).max() < 1e-8
        assert np.abs(f @ sigma @ f.conj().T - rho).max() < 1e-6
