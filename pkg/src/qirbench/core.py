"""Small dense linear-algebra helpers shared by the state-level modules.

States are plain complex ``numpy`` arrays: density matrices are ``(d, d)``
and pure states are ``(d,)`` vectors.  The helpers here validate them and
implement the handful of operations the rest of the package needs.
"""

import numpy as np

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10
SQRT_ASYMMETRY_ATOL = 1e-8


class ValidationError(ValueError):
    """Raised when an input violates an operation's preconditions."""


def as_density_matrix(rho, *, atol_herm=HERMITIAN_ATOL, atol_trace=TRACE_ATOL,
                      atol_psd=PSD_ATOL) -> np.ndarray:
    """Return ``rho`` as a complex array after checking it is a valid state.

    Raises:
        ValidationError: if the matrix is not square, Hermitian, unit-trace
            or positive semidefinite within the given tolerances.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
        raise ValidationError(f"density matrix must be square, got shape {rho.shape}")
    # real matrices take the cheaper real-valued checks
    work = rho.real if not rho.imag.any() else rho
    if np.max(np.abs(work - work.conj().T)) > atol_herm:
        raise ValidationError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > atol_trace:
        raise ValidationError(f"density matrix trace is {tr.real:.12g}, expected 1")
    if not _is_psd(work, atol_psd):
        raise ValidationError("density matrix has a negative eigenvalue")
    return rho


def _is_psd(m, atol):
    # Cholesky of the shifted matrix is much cheaper than a full eigensolve.
    try:
        np.linalg.cholesky(m + atol * np.eye(m.shape[0]))
        return True
    except np.linalg.LinAlgError:
        return np.linalg.eigvalsh(m).min() >= -atol


def as_pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise ValidationError(f"pure state must be a 1-D vector, got shape {psi.shape}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise ValidationError("pure state is not normalized")
    return psi


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi) -> np.ndarray:
    """|psi><psi| for a (not necessarily validated) state vector."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def matrix_sqrt_psd(m) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix.

    Uses an eigendecomposition; eigenvalues down to ``-1e-10`` are treated as
    round-off and clipped to zero.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > SQRT_ASYMMETRY_ATOL:
        raise ValidationError("matrix is not Hermitian")
    herm = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    if w.size and w.min() < -PSD_ATOL:
        raise ValidationError(f"matrix has eigenvalue {w.min():.3g} < 0")
    w = np.clip(w, 0.0, None)
    r = (v * np.sqrt(w)) @ v.conj().T
    return (r + r.conj().T) / 2


def uhlmann_fidelity(a, b) -> float:
    """Uhlmann fidelity ``[Tr sqrt(sqrt(a) b sqrt(a))]**2`` of two density matrices."""
    a = as_density_matrix(a)
    b = as_density_matrix(b)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    # Tr sqrt(sqrt(a) b sqrt(a)) is the trace norm of sqrt(a) sqrt(b); singular values
    # avoid the sqrt(eps) error that square-rooting round-off eigenvalues would add.
    s = np.linalg.svd(matrix_sqrt_psd(a) @ matrix_sqrt_psd(b), compute_uv=False)
    f = float(np.sum(s) ** 2)
    return min(max(f, 0.0), 1.0)


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def depolarize(rho, p_n: float) -> np.ndarray:
    """Depolarizing channel ``(1 - p_n) rho + p_n I / d``."""
    if not 0.0 <= p_n <= 1.0:
        raise ValidationError(f"p_n must lie in [0, 1], got {p_n}")
    rho = as_density_matrix(rho)
    dim = rho.shape[0]
    return (1.0 - p_n) * rho + p_n * maximally_mixed(dim)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble random state, used by tests and synthetic data."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)
