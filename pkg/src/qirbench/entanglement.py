"""Entanglement-of-formation lower bound for noisy maximally entangled qudit pairs."""

import itertools
import math

import numpy as np

from .core import ValidationError, as_density_matrix


def _check(m, p_n):
    if int(m) != m or m < 2:
        raise ValidationError(f"local dimension must be an integer >= 2, got {m}")
    if not 0.0 <= p_n <= 1.0:
        raise ValidationError(f"p_n must lie in [0, 1], got {p_n}")


def pair_index(j: int, k: int, m: int) -> int:
    """Index of the product basis state |j, k> in the m*m dimensional space."""
    return j * m + k


def build_noisy_pair(m: int, p_n: float) -> np.ndarray:
    """``(1 - p_n)|Psi_m><Psi_m| + p_n I/m**2`` with ``|Psi_m> = sum_i |i,i>/sqrt(m)``."""
    _check(m, p_n)
    psi = np.zeros(m * m, dtype=complex)
    psi[[pair_index(i, i, m) for i in range(m)]] = 1.0 / math.sqrt(m)
    return (1.0 - p_n) * np.outer(psi, psi.conj()) + p_n * np.eye(m * m) / (m * m)


def all_pairs(m: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(m), 2))


def _bound_from_b(b: float) -> float:
    b = max(b, 0.0)
    if b * b >= 2.0:
        raise ValidationError(f"B^2 = {b * b:.6g} >= 2; not a valid state")
    return -math.log2(1.0 - b * b / 2.0)


def eof_lower_bound(rho, m: int, pair_set=None) -> float:
    """Certified lower bound (ebits) on the entanglement of formation of ``rho``.

    ``pair_set`` is a collection of mode pairs ``(j, k)`` with ``j != k``; all
    ``m(m-1)/2`` pairs are used when omitted.  A negative witness value
    certifies nothing and is reported as 0.
    """
    if int(m) != m or m < 2:
        raise ValidationError(f"local dimension must be an integer >= 2, got {m}")
    rho = as_density_matrix(rho)
    if rho.shape[0] != m * m:
        raise ValidationError(f"state has dimension {rho.shape[0]}, expected {m * m}")
    pairs = all_pairs(m) if pair_set is None else [tuple(sorted(p)) for p in pair_set]
    if not pairs:
        raise ValidationError("pair_set must be nonempty")
    if len(set(pairs)) != len(pairs):
        raise ValidationError("pair_set contains duplicate pairs")
    total = 0.0
    for j, k in pairs:
        if j == k or not (0 <= j < m and 0 <= k < m):
            raise ValidationError(f"invalid mode pair ({j}, {k}) for m = {m}")
        coherence = abs(rho[pair_index(j, j, m), pair_index(k, k, m)])
        cross = rho[pair_index(j, k, m), pair_index(j, k, m)].real \
            * rho[pair_index(k, j, m), pair_index(k, j, m)].real
        total += coherence - math.sqrt(max(cross, 0.0))
    b = 2.0 / math.sqrt(len(pairs)) * total
    return _bound_from_b(b)


def eof_closed_form_depolarizing(m: int, p_n: float, pair_count: int | None = None) -> float:
    """Same bound evaluated analytically for ``build_noisy_pair(m, p_n)``."""
    _check(m, p_n)
    max_pairs = m * (m - 1) // 2
    pair_count = max_pairs if pair_count is None else pair_count
    if not 1 <= pair_count <= max_pairs:
        raise ValidationError(f"pair_count must lie in [1, {max_pairs}], got {pair_count}")
    per_pair = (1.0 - p_n) / m - p_n / (m * m)
    return _bound_from_b(2.0 * math.sqrt(pair_count) * per_pair)
