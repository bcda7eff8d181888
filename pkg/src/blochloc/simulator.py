"""Circuit execution: ideal statevector and noisy density-matrix backends.

The noise model is a uniform depolarizing channel applied after every gate
(p1 for one-qubit gates, p2 for multi-qubit gates) plus independent
per-qubit readout flips.  The channel over the m qubits a gate acts on is

    rho -> (1 - p) rho + p / (4^m - 1) * sum_P P rho P

over the 4^m - 1 nontrivial Pauli strings P, evaluated through the
equivalent twirl form (1 - q) rho + q (Tr_M rho) (x) I/2^m with
q = p 4^m / (4^m - 1).

Shot sampling is seeded and deterministic.  ``shots = 0`` is the analytic
sentinel: expectation values are returned exactly (readout error folded in
analytically, no sampling), which keeps sampling noise out of oracle tests.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, replace

import numpy as np

from .circuits import Circuit, Gate
from .linalg import BlochVector, basis_state, density_from_bloch, outer

ANALYTIC_SHOTS = 0

DEFAULT_P1 = 2e-4
DEFAULT_P2 = 7e-3
DEFAULT_P_READOUT = 1e-2

_AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class BackendConfig:
    """Execution backend: ideal (noise-free) or depolarizing + readout noise."""

    mode: str = "ideal"
    p1: float = 0.0
    p2: float = 0.0
    p_readout: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("ideal", "noisy"):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        for name in ("p1", "p2", "p_readout"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")
        if self.mode == "ideal" and (self.p1 or self.p2 or self.p_readout):
            raise ValueError("ideal mode forces p1 = p2 = p_readout = 0")

    @classmethod
    def ideal(cls, seed: int = 0) -> "BackendConfig":
        return cls("ideal", seed=seed)

    @classmethod
    def noisy(
        cls,
        p1: float = DEFAULT_P1,
        p2: float = DEFAULT_P2,
        p_readout: float = DEFAULT_P_READOUT,
        seed: int = 0,
    ) -> "BackendConfig":
        return cls("noisy", p1, p2, p_readout, seed)

    @property
    def is_noisy(self) -> bool:
        return self.mode == "noisy"

    def with_seed(self, seed: int) -> "BackendConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "p1": self.p1,
            "p2": self.p2,
            "p_readout": self.p_readout,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BackendConfig":
        return cls(
            d.get("mode", "ideal"),
            float(d.get("p1", 0.0)),
            float(d.get("p2", 0.0)),
            float(d.get("p_readout", 0.0)),
            int(d.get("seed", 0)),
        )


@dataclass
class ShotCounts:
    """Histogram of measured bitstrings; counts sum to ``total``."""

    counts: dict[str, int]
    total: int

    def frequency(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.total


@dataclass(frozen=True)
class PauliEstimate:
    axis: str
    value: float
    shots: int


_SQRT2_INV = 1.0 / math.sqrt(2.0)
_MATRICES_1Q = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "h": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
}


def gate_matrix_1q(gate: Gate) -> np.ndarray:
    if gate.kind == "rz":
        return np.array([[1, 0], [0, np.exp(1j * gate.angle)]], dtype=complex)
    return _MATRICES_1Q[gate.kind]


def apply_gate(arr: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply a gate along the state index of ``arr``.

    ``arr`` has shape (2**n, *rest); trailing axes ride along unchanged,
    which lets the same kernel drive state vectors (rest empty), density
    matrix rows (rest = columns) and trajectory ensembles (rest = shots).
    """
    shape = arr.shape
    if gate.kind in _MATRICES_1Q or gate.kind == "rz":
        q = gate.targets[0]
        u = gate_matrix_1q(gate)
        a = arr.reshape(1 << q, 2, -1)
        return np.einsum("ab,ibk->iak", u, a).reshape(shape)
    tensor = arr.reshape([2] * n + [-1])
    if gate.kind == "cnot":
        control, target = gate.controls[0], gate.targets[0]
        out = tensor.copy()
        sl = [slice(None)] * (n + 1)
        sl[control] = 1
        sub_axis = target if target < control else target - 1
        out[tuple(sl)] = np.flip(tensor[tuple(sl)], axis=sub_axis)
        return out.reshape(shape)
    if gate.kind == "cphase":
        out = tensor.copy()
        sl = [slice(None)] * (n + 1)
        sl[gate.controls[0]] = 1
        sl[gate.targets[0]] = 1
        out[tuple(sl)] = out[tuple(sl)] * np.exp(1j * gate.angle)
        return out.reshape(shape)
    if gate.kind == "mcz":
        out = tensor.copy()
        sl = [slice(None)] * (n + 1)
        for q in gate.qubits():
            sl[q] = 1
        out[tuple(sl)] = -out[tuple(sl)]
        return out.reshape(shape)
    raise ValueError(f"unsupported gate kind {gate.kind!r}")


def apply_gate_density(rho: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """U rho U^dagger via two row-space applications of the gate kernel."""
    left = apply_gate(rho, gate, n)
    return apply_gate(left.conj().T, gate, n).conj().T


def _replace_with_mixed(rho: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """(Tr_M rho) tensored with I/2^m reinserted at the positions in M."""
    m = len(qubits)
    keep = [i for i in range(n) if i not in qubits]
    letters = list(string.ascii_letters)
    ket = [letters[i] for i in range(n)]
    bra = [letters[n + i] for i in range(n)]
    for q in qubits:
        bra[q] = ket[q]
    reduced_out = "".join(ket[i] for i in keep) + "".join(bra[i] for i in keep)
    reduced = np.einsum(
        "".join(ket) + "".join(bra) + "->" + reduced_out, rho.reshape([2] * (2 * n))
    )
    ident = (np.eye(1 << m, dtype=complex) / (1 << m)).reshape([2] * (2 * m))
    ket2 = list(ket)
    bra2 = [letters[n + i] for i in range(n)]
    ident_sub = "".join(ket2[q] for q in qubits) + "".join(bra2[q] for q in qubits)
    full_out = "".join(ket2) + "".join(bra2)
    out = np.einsum(reduced_out + "," + ident_sub + "->" + full_out, reduced, ident)
    return out.reshape(rho.shape)


def depolarize(rho: np.ndarray, qubits: tuple[int, ...], p: float, n: int) -> np.ndarray:
    """Uniform depolarizing channel over ``qubits`` with Pauli-error weight p."""
    if p <= 0.0:
        return rho
    m = len(qubits)
    four_m = 4 ** m
    q_eff = p * four_m / (four_m - 1)
    return (1.0 - q_eff) * rho + q_eff * _replace_with_mixed(rho, qubits, n)


def _gate_noise_p(gate: Gate, backend: BackendConfig) -> float:
    if not backend.is_noisy:
        return 0.0
    return backend.p1 if len(gate.qubits()) == 1 else backend.p2


def run_statevector(c: Circuit) -> np.ndarray:
    """Exact unitary evolution of |0...0> through the whole circuit."""
    if c.n > 12:
        raise ValueError("statevector backend supports at most 12 qubits")
    psi = basis_state("0" * c.n)
    for gate in c.gates:
        psi = apply_gate(psi, gate, c.n)
    return psi


def run_density(c: Circuit, backend: BackendConfig) -> np.ndarray:
    """Density-matrix evolution; after each gate the depolarizing channel
    for the gate's qubits is applied (a no-op on the ideal backend)."""
    if c.n > 10:
        raise ValueError("density backend supports at most 10 qubits")
    rho = outer(basis_state("0" * c.n))
    for gate in c.gates:
        rho = apply_gate_density(rho, gate, c.n)
        p = _gate_noise_p(gate, backend)
        if p > 0.0:
            rho = depolarize(rho, gate.qubits(), p, c.n)
    return rho


def born_probabilities(state: np.ndarray) -> np.ndarray:
    """Measurement probabilities of a state vector or density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        probs = np.abs(state) ** 2
    elif state.ndim == 2:
        probs = np.diag(state).real.copy()
    else:
        raise ValueError("state must be a vector or a square matrix")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_counts(
    state: np.ndarray, shots: int, p_readout: float = 0.0, seed: int = 0
) -> ShotCounts:
    """Multinomial sampling from Born probabilities with readout bit flips."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = born_probabilities(state)
    n = int(probs.size).bit_length() - 1
    rng = np.random.default_rng(seed)
    idx = rng.choice(probs.size, size=shots, p=probs)
    if p_readout > 0.0:
        flips = rng.random((shots, n)) < p_readout
        weights = 1 << (n - 1 - np.arange(n))
        idx = idx ^ (flips * weights).sum(axis=1)
    values, counts = np.unique(idx, return_counts=True)
    return ShotCounts(
        {format(int(v), f"0{n}b"): int(cnt) for v, cnt in zip(values, counts)},
        shots,
    )


def basis_change_gates(q: int, axis: str) -> tuple[Gate, ...]:
    """Gates rotating the measurement axis onto Z before a Z-basis readout.

    X: H.  Y: S-dagger then H (checked against the Y eigenvectors).  Z: none.
    """
    from . import circuits as cg

    axis = axis.upper()
    if axis == "X":
        return (cg.h(q),)
    if axis == "Y":
        return (cg.sdg(q), cg.h(q))
    if axis == "Z":
        return ()
    raise ValueError(f"unknown Pauli axis {axis!r}")


def _marginal_one(state: np.ndarray, q: int, n: int) -> float:
    """Probability that qubit q reads 1."""
    probs = born_probabilities(state).reshape([2] * n)
    axes = tuple(i for i in range(n) if i != q)
    return float(probs.sum(axis=axes)[1])


def child_rng(backend: BackendConfig, *key: int) -> np.random.Generator:
    """Deterministic child stream so early exit never shifts later draws."""
    return np.random.default_rng((backend.seed,) + key)


def pauli_stream_key(k: int, q: int, axis: str) -> tuple[int, int, int, int]:
    return (0, k, q, _AXES.index(axis.upper()))


def estimate_pauli(
    prefix: Circuit, q: int, axis: str, shots: int, backend: BackendConfig
) -> PauliEstimate:
    """Single-qubit Pauli expectation via basis change + Z-basis readout.

    The prefix is executed, the basis change is appended on qubit q (those
    gates see the same per-gate noise as any other), and the qubit is read
    out.  Sampled mode draws the one-bit counts from the exact marginal,
    which is distributed identically to per-shot measurement; analytic mode
    (shots = 0) returns the exact expectation with readout error folded in.
    """
    if not 0 <= q < prefix.n:
        raise ValueError(f"qubit {q} out of range for {prefix.n} qubits")
    axis = axis.upper()
    gates = basis_change_gates(q, axis)
    if backend.is_noisy:
        state = run_density(prefix, backend)
        for gate in gates:
            state = apply_gate_density(state, gate, prefix.n)
            state = depolarize(state, gate.qubits(), backend.p1, prefix.n)
    else:
        state = run_statevector(prefix)
        for gate in gates:
            state = apply_gate(state, gate, prefix.n)
    p_one = _marginal_one(state, q, prefix.n)
    f = backend.p_readout
    p_obs = min(max(p_one * (1.0 - f) + (1.0 - p_one) * f, 0.0), 1.0)
    if shots == ANALYTIC_SHOTS:
        return PauliEstimate(axis, 1.0 - 2.0 * p_obs, 0)
    k = prefix.num_segments - 1
    rng = child_rng(backend, *pauli_stream_key(k, q, axis))
    ones = int(rng.binomial(shots, p_obs))
    return PauliEstimate(axis, (shots - 2 * ones) / shots, shots)


def measured_bloch(
    prefix: Circuit, q: int, shots: int, backend: BackendConfig
) -> tuple[BlochVector, np.ndarray]:
    """Reconstruct qubit q's Bloch vector from three Pauli estimates.

    Uses 3 x shots in total.  Sampled vectors that land outside the Bloch
    sphere are rescaled to unit norm before forming the density matrix.
    """
    estimates = [estimate_pauli(prefix, q, axis, shots, backend) for axis in _AXES]
    r = np.array([e.value for e in estimates])
    norm = float(np.linalg.norm(r))
    if norm > 1.0:
        r = r / norm
    bloch = BlochVector(float(r[0]), float(r[1]), float(r[2]))
    return bloch, density_from_bloch(bloch)
