"""Independent reference implementations used as test oracles.

Everything here is deliberately written against the definitions rather
than reusing the library's code paths: brute-force basis projections for
the partial trace, the product formula for the QFT state, the rotation
closed form for Grover, and combination enumeration for the exact
Mann-Whitney U distribution.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np


def brute_force_partial_trace(rho: np.ndarray, keep: int, n: int) -> np.ndarray:
    """Sum of basis projections <a e| rho |b e> over the traced qubits."""
    out = np.zeros((2, 2), dtype=complex)
    others = [i for i in range(n) if i != keep]
    for a in (0, 1):
        for b in (0, 1):
            for env in range(1 << (n - 1)):
                bits_a = [0] * n
                bits_b = [0] * n
                bits_a[keep], bits_b[keep] = a, b
                for pos, qubit in enumerate(others):
                    bit = (env >> (len(others) - 1 - pos)) & 1
                    bits_a[qubit] = bits_b[qubit] = bit
                ia = int("".join(map(str, bits_a)), 2)
                ib = int("".join(map(str, bits_b)), 2)
                out[a, b] += rho[ia, ib]
    return out


def qft_product_state(j: str) -> np.ndarray:
    """Tensor product of per-qubit phase states with exact binary fractions.

    Without a final swap layer, qubit k carries the fraction built from the
    input bits k..n-1.
    """
    n = len(j)
    vec = np.array([1.0 + 0j])
    for k in range(n):
        frac = sum(
            (Fraction(1, 1 << (m + 1)) for m in range(n - k) if j[k + m] == "1"),
            Fraction(0),
        )
        theta = 2.0 * math.pi * float(frac)
        vec = np.kron(vec, np.array([1.0, np.exp(1j * theta)]) / math.sqrt(2.0))
    return vec


def grover_state_after(n: int, marked: str, k: int) -> np.ndarray:
    """cos(phi_k)|alpha> + sin(phi_k)|beta> for k applied iterations."""
    big_n = 1 << n
    theta = 2.0 * math.asin(1.0 / math.sqrt(big_n))
    phi = (2 * k + 1) / 2.0 * theta
    w = int(marked, 2)
    alpha = np.ones(big_n) / math.sqrt(big_n - 1)
    alpha[w] = 0.0
    beta = np.zeros(big_n)
    beta[w] = 1.0
    return math.cos(phi) * alpha + math.sin(phi) * beta


def exact_mwu_p(a, b) -> float:
    """Two-sided exact Mann-Whitney p by enumerating every assignment of
    the pooled values to the first sample (ties counted half)."""
    pooled = list(a) + list(b)
    na = len(a)
    total_positions = range(len(pooled))

    def u_of(selection: tuple[int, ...]) -> float:
        sel = set(selection)
        a_vals = [pooled[i] for i in selection]
        b_vals = [pooled[i] for i in total_positions if i not in sel]
        u = 0.0
        for av in a_vals:
            for bv in b_vals:
                if av > bv:
                    u += 1.0
                elif av == bv:
                    u += 0.5
        return u

    nm = na * (len(pooled) - na)
    observed = abs(u_of(tuple(range(na))) - nm / 2.0)
    count = 0
    total = 0
    for sel in combinations(total_positions, na):
        total += 1
        if abs(u_of(sel) - nm / 2.0) >= observed - 1e-12:
            count += 1
    return count / total


def single_qubit_fidelity(r: np.ndarray, s: np.ndarray) -> float:
    """Closed-form 2x2 fidelity from Bloch vectors:
    F = (1 + r.s + sqrt((1-|r|^2)(1-|s|^2))) / 2."""
    rr = float(np.dot(r, r))
    ss = float(np.dot(s, s))
    return 0.5 * (1.0 + float(np.dot(r, s)) + math.sqrt(max(1 - rr, 0) * max(1 - ss, 0)))
