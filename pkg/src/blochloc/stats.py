"""Nonparametric statistics kernels for the evaluation harness.

Mann-Whitney U switches to exact enumeration (a tie-aware DP over the
permutation distribution) for combined samples of at most 20 values and
otherwise uses the normal approximation with tie and continuity
corrections.  Effect sizes use the Vargha-Delaney A12 statistic with the
usual four-bin magnitude scale on 2*(A12 - 0.5).
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from math import comb

import numpy as np
from scipy.stats import rankdata

EXACT_LIMIT = 20

MAGNITUDE_NEGLIGIBLE = "N"
MAGNITUDE_SMALL = "S"
MAGNITUDE_MEDIUM = "M"
MAGNITUDE_LARGE = "L"


def _doubled_u(a, b) -> int:
    """2 * (#{a_i > b_j} + 0.5 #{a_i = b_j}) as an exact integer."""
    b_sorted = np.sort(np.asarray(b, dtype=float))
    a_arr = np.asarray(a, dtype=float)
    below = np.searchsorted(b_sorted, a_arr, side="left").sum()
    upto = np.searchsorted(b_sorted, a_arr, side="right").sum()
    return int(below + upto)


def _exact_p(a, b) -> float:
    """Two-sided exact p over all assignments of the pooled values."""
    na, nb = len(a), len(b)
    groups = sorted(Counter(list(a) + list(b)).items())
    dist: dict[tuple[int, int], int] = {(0, 0): 1}
    processed = 0
    for _, t in groups:
        new: dict[tuple[int, int], int] = defaultdict(int)
        for (a_used, u2), ways in dist.items():
            b_before = processed - a_used
            for ka in range(min(t, na - a_used) + 1):
                delta = 2 * ka * b_before + ka * (t - ka)
                new[(a_used + ka, u2 + delta)] += ways * comb(t, ka)
        processed += t
        dist = new
    center = na * nb  # doubled-U mean
    observed_dev = abs(_doubled_u(a, b) - center)
    tail = sum(
        ways for (a_used, u2), ways in dist.items()
        if a_used == na and abs(u2 - center) >= observed_dev
    )
    return tail / comb(na + nb, na)


def _normal_p(a, b) -> float:
    na, nb = len(a), len(b)
    total = na + nb
    pooled = np.concatenate([np.asarray(a, float), np.asarray(b, float)])
    ranks = rankdata(pooled)
    u = float(ranks[:na].sum()) - na * (na + 1) / 2.0
    mu = na * nb / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts ** 3 - tie_counts).sum())
    sigma2 = na * nb / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    if sigma2 <= 0.0:
        return 1.0
    dev = max(abs(u - mu) - 0.5, 0.0)  # continuity correction toward the mean
    z = dev / math.sqrt(sigma2)
    return min(math.erfc(z / math.sqrt(2.0)), 1.0)


def mann_whitney_u(a, b) -> float:
    """Two-sided Mann-Whitney U p-value."""
    a, b = list(a), list(b)
    if not a or not b:
        raise ValueError("mann_whitney_u needs two non-empty samples")
    if len(a) + len(b) <= EXACT_LIMIT:
        return _exact_p(a, b)
    return _normal_p(a, b)


def magnitude_of(a12: float) -> str:
    """Four-bin magnitude of the scaled effect size 2*(A12 - 0.5)."""
    scaled = abs(2.0 * (a12 - 0.5))
    for edge in (0.147, 0.33, 0.474):  # exact boundary semantics despite float dust
        if abs(scaled - edge) < 1e-12:
            scaled = edge
    if scaled < 0.147:
        return MAGNITUDE_NEGLIGIBLE
    if scaled <= 0.33:
        return MAGNITUDE_SMALL
    if scaled < 0.474:
        return MAGNITUDE_MEDIUM
    return MAGNITUDE_LARGE


def vargha_delaney(a, b) -> tuple[float, str]:
    """A12 = P(a > b) + 0.5 P(a = b), with its magnitude class."""
    a, b = list(a), list(b)
    if not a or not b:
        raise ValueError("vargha_delaney needs two non-empty samples")
    m, n = len(a), len(b)
    ranks = rankdata(np.concatenate([np.asarray(a, float), np.asarray(b, float)]))
    r1 = float(ranks[:m].sum())
    a12 = (2.0 * r1 - m * (m + 1)) / (2.0 * m * n)
    return a12, magnitude_of(a12)


def bootstrap_ci(
    values, level: float = 0.99, resamples: int = 10000, seed: int = 0
) -> tuple[float, float]:
    """Seeded percentile bootstrap of the mean."""
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        raise ValueError("bootstrap_ci needs a non-empty sample")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[idx].mean(axis=1)
    lo, hi = np.percentile(means, [(1.0 - level) / 2.0 * 100.0, (1.0 + level) / 2.0 * 100.0])
    return float(lo), float(hi)
