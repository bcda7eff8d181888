"""Dense linear algebra for quantum states.

Density matrices are plain complex ndarrays of shape (2**n, 2**n) and state
vectors are ndarrays of shape (2**n,).  Qubit 0 is the most significant bit
of a basis-state index throughout the package, so the bitstring "011" maps
to index 3 on three qubits.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

import numpy as np

ATOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_PAULIS = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def pauli(axis: str) -> np.ndarray:
    """Return the standard 2x2 Pauli matrix for axis "X", "Y" or "Z"."""
    try:
        return _PAULIS[axis.upper()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def num_qubits(dim: int) -> int:
    """Qubit count for a Hilbert-space dimension; rejects non powers of two."""
    n = dim.bit_length() - 1
    if dim < 2 or dim != 1 << n:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def basis_state(bits: str) -> np.ndarray:
    """Computational basis state vector for a bitstring (qubit 0 first)."""
    if not bits or any(b not in "01" for b in bits):
        raise ValueError(f"invalid bitstring {bits!r}")
    psi = np.zeros(1 << len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def outer(psi: np.ndarray) -> np.ndarray:
    """Density matrix |psi><psi| of a state vector."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class BlochVector:
    """Triple of Pauli expectation values (<X>, <Y>, <Z>) of one qubit."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return float(math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z))


def check_density(rho: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Validate the structural invariants of a density matrix.

    Hermitian within ``atol``, unit trace, eigenvalues >= -atol and
    Tr rho^2 <= 1 + atol.  Returns the (unchanged) matrix for chaining.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits(rho.shape[0])
    if np.abs(rho - rho.conj().T).max() > atol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix trace {tr} != 1")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -atol:
        raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")
    if purity(rho) > 1.0 + atol:
        raise ValueError("density matrix purity exceeds 1")
    return rho


def expectation(rho: np.ndarray, obs: np.ndarray) -> float:
    """Expectation value Tr(obs . rho); the tiny imaginary residue is dropped."""
    rho = np.asarray(rho, dtype=complex)
    obs = np.asarray(obs, dtype=complex)
    if rho.shape != obs.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {obs.shape}")
    return float(np.trace(obs @ rho).real)


def bloch_of(rho: np.ndarray) -> BlochVector:
    """Bloch vector (Tr rho X, Tr rho Y, Tr rho Z) of a single-qubit state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 density matrix, got shape {rho.shape}")
    return BlochVector(
        expectation(rho, PAULI_X),
        expectation(rho, PAULI_Y),
        expectation(rho, PAULI_Z),
    )


def density_from_bloch(b) -> np.ndarray:
    """Single-qubit density matrix (1/2)(I + x X + y Y + z Z).

    Norms up to 1 + 1e-9 are rescaled onto the Bloch sphere; anything larger
    is rejected as an invalid state.
    """
    if isinstance(b, BlochVector):
        r = b.as_array()
    else:
        r = np.asarray(b, dtype=float)
        if r.shape != (3,):
            raise ValueError("Bloch vector must have three components")
    norm = float(np.linalg.norm(r))
    if norm > 1.0 + 1e-9:
        raise ValueError(f"invalid state: Bloch norm {norm} > 1")
    if norm > 1.0:
        r = r / norm
    return 0.5 * (IDENTITY_2 + r[0] * PAULI_X + r[1] * PAULI_Y + r[2] * PAULI_Z)


def purity(rho: np.ndarray) -> float:
    """Tr rho^2; equals 1 for pure states and (1 + |R|^2)/2 on one qubit."""
    rho = np.asarray(rho, dtype=complex)
    return float(np.trace(rho @ rho).real)


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    evals, vecs = np.linalg.eigh(rho)
    if evals.min() < -1e-8:
        raise ValueError(f"matrix is not positive semidefinite ({evals.min()})")
    evals = np.clip(evals, 0.0, None)
    return (vecs * np.sqrt(evals)) @ vecs.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """State fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    The square roots come from Hermitian eigendecompositions with
    marginally negative eigenvalues clamped to zero; the trace is then
    evaluated as the trace norm of sqrt(sigma) sqrt(rho) (identical by
    A = sqrt(sigma) sqrt(rho), Tr sqrt(A^dagger A) = sum of singular
    values), which is well-conditioned near zero eigenvalues and exactly
    symmetric under swapping the arguments.  Values within 1e-9 of 1 are
    snapped to exactly 1.0 so identical states compare equal despite
    double-precision eigensolver noise.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    scale = max(np.abs(rho).max(), 1.0)
    if np.abs(rho - rho.conj().T).max() > 1e-8 * scale:
        raise ValueError("rho is not Hermitian")
    if np.abs(sigma - sigma.conj().T).max() > 1e-8 * scale:
        raise ValueError("sigma is not Hermitian")
    product = _psd_sqrt(sigma) @ _psd_sqrt(rho)
    f = float(np.linalg.svd(product, compute_uv=False).sum() ** 2)
    f = min(max(f, 0.0), 1.0)
    if f > 1.0 - 1e-9:
        f = 1.0
    return f


def partial_trace(rho: np.ndarray, keep: int) -> np.ndarray:
    """Reduced 2x2 density matrix of qubit ``keep``.

    Implemented as an index summation: the 2^n x 2^n matrix is reshaped to
    a rank-2n tensor and every qubit except ``keep`` is contracted between
    its ket and bra axes.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    n = num_qubits(rho.shape[0])
    if not 0 <= keep < n:
        raise ValueError(f"qubit index {keep} out of range for {n} qubits")
    letters = iter(string.ascii_lowercase)
    out_ket, out_bra = next(letters), next(letters)
    ket = [""] * n
    bra = [""] * n
    for i in range(n):
        if i == keep:
            ket[i], bra[i] = out_ket, out_bra
        else:
            shared = next(letters)
            ket[i] = bra[i] = shared
    subscript = "".join(ket) + "".join(bra) + "->" + out_ket + out_bra
    tensor = rho.reshape([2] * (2 * n))
    return np.einsum(subscript, tensor)
