"""Maximum-likelihood qubit tomography from projective photon counts."""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import ValidationError, as_density_matrix, uhlmann_fidelity

_S = 1 / math.sqrt(2)

# Six single-qubit states in the two-mode subspace {l1, l2}.
BASIS_STATES = {
    "L1": np.array([1, 0], dtype=complex),
    "L2": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "M": np.array([_S, -_S], dtype=complex),
    "L": np.array([_S, 1j * _S], dtype=complex),
    "R": np.array([_S, -1j * _S], dtype=complex),
}

TOMO_FIELDS = ("basis_label", "counts", "exposure")


class ReconstructionError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectiveMeasurement:
    basis_label: str
    counts: int
    exposure: float = 1.0

    def __post_init__(self):
        if self.basis_label not in BASIS_STATES:
            raise ValidationError(f"unknown basis label {self.basis_label!r}")
        if int(self.counts) != self.counts or self.counts < 0:
            raise ValidationError(f"{self.basis_label}: counts must be a nonnegative integer")
        if not self.exposure > 0:
            raise ValidationError(f"{self.basis_label}: exposure must be positive")

    @property
    def projector(self) -> np.ndarray:
        return BASIS_STATES[self.basis_label]


@dataclass(frozen=True)
class TomographyResult:
    rho: np.ndarray
    log_likelihood: float
    converged: bool = True
    fidelity_vs_target: float | None = None
    fidelity_sigma: float | None = None


def _bloch_vector(psi) -> np.ndarray:
    rho = np.outer(psi, psi.conj())
    return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def _design(measurements):
    """Bloch vectors of the projectors, counts and exposures as arrays."""
    dirs = np.array([_bloch_vector(m.projector) for m in measurements])
    counts = np.array([m.counts for m in measurements], dtype=float)
    exposure = np.array([m.exposure for m in measurements], dtype=float)
    return dirs, counts, exposure


def _check_design(dirs):
    # rates f(1 + r.n)/2 are linear in (f, f r): need rank 4 to identify flux and state
    a = np.hstack([np.ones((len(dirs), 1)), dirs])
    if len(dirs) < 4 or np.linalg.matrix_rank(a) < 4:
        raise ValidationError("measurement set is not informationally complete "
                              "(need projectors spanning flux and all Bloch axes)")


def rho_from_bloch(r) -> np.ndarray:
    x, y, z = r
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])


def _rho_from_params(t) -> np.ndarray:
    # lower-triangular T with real diagonal; rho = T T^dag / Tr
    a = np.array([[t[0], 0.0], [t[2] + 1j * t[3], t[1]]])
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def _params_from_rho(rho) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    rho = (v * np.clip(w, 1e-6, None)) @ v.conj().T
    rho /= np.trace(rho).real
    c = np.linalg.cholesky(rho)
    return np.array([c[0, 0].real, c[1, 1].real, c[1, 0].real, c[1, 0].imag])


def _probabilities(rho, dirs) -> np.ndarray:
    x = 2 * rho[0, 1].real
    y = -2 * rho[0, 1].imag
    z = (rho[0, 0] - rho[1, 1]).real
    return np.clip(0.5 * (1 + dirs @ np.array([x, y, z])), 0.0, 1.0)


def poisson_log_likelihood(rho, dirs, counts, exposure) -> float:
    """Poisson log-likelihood with the unknown flux profiled out analytically.

    For rates ``f * e_i * p_i`` the flux maximizing the likelihood is
    ``sum(n) / sum(e p)``; constant ``log n!`` terms are dropped.
    """
    ep = exposure * _probabilities(rho, dirs)
    total = ep.sum()
    if total <= 0:
        return -math.inf
    flux = counts.sum() / total
    rate = flux * ep
    mask = counts > 0
    if np.any(rate[mask] <= 0):
        return -math.inf
    return float(np.sum(counts[mask] * np.log(rate[mask])) - rate.sum())


def linear_inversion(measurements) -> np.ndarray:
    """Least-squares Bloch-vector estimate, projected onto the unit ball."""
    dirs, counts, exposure = _design(measurements)
    _check_design(dirs)
    a = np.hstack([np.ones((len(dirs), 1)), dirs]) / 2
    sol, *_ = np.linalg.lstsq(a, counts / exposure, rcond=None)
    flux = sol[0]
    r = sol[1:] / flux if flux > 0 else np.zeros(3)
    norm = np.linalg.norm(r)
    if norm > 1:
        r = r / norm
    return rho_from_bloch(r)


def mle_reconstruct(measurements, tol: float = 1e-8, max_iter: int = 5000,
                    restarts: int = 5, seed: int = 0) -> TomographyResult:
    """Maximum-likelihood qubit state from projective counts.

    The state is parameterized as ``T T^dag / Tr`` with lower-triangular ``T``
    so every candidate is physical.  Nelder-Mead runs from the linear-inversion
    estimate plus ``restarts`` random starting points; the best optimum wins.
    """
    measurements = list(measurements)
    dirs, counts, exposure = _design(measurements)
    _check_design(dirs)
    if counts.sum() == 0:
        raise ReconstructionError("no counts recorded")

    dx, dy, dz = (dirs[:, k].tolist() for k in range(3))
    n = counts.tolist()
    e = exposure.tolist()
    n_total = float(counts.sum())
    n_logn = [(i, c) for i, c in enumerate(n) if c > 0]

    def nll(t):
        # closed-form Bloch vector of T T^dag / Tr for T = [[a, 0], [c + i d, b]]
        a, b, c, d = t
        tr = a * a + b * b + c * c + d * d
        if tr == 0:
            return math.inf
        x, y, z = 2 * a * c / tr, 2 * a * d / tr, (a * a - b * b - c * c - d * d) / tr
        ep = [ei * min(max(0.5 * (1 + x * u + y * v + z * w), 0.0), 1.0)
              for ei, u, v, w in zip(e, dx, dy, dz)]
        total = sum(ep)
        if total <= 0:
            return math.inf
        flux = n_total / total
        ll = -n_total
        for i, ci in n_logn:
            rate = flux * ep[i]
            if rate <= 0:
                return math.inf
            ll += ci * math.log(rate)
        return -ll

    rng = np.random.default_rng(seed)
    starts = [_params_from_rho(linear_inversion(measurements))]
    starts += [rng.normal(size=4) for _ in range(restarts)]
    best = None
    for x0 in starts:
        res = minimize(nll, x0, method="Nelder-Mead",
                       options={"xatol": tol, "fatol": tol, "maxiter": max_iter,
                                "maxfev": 2 * max_iter})
        if best is None or res.fun < best.fun:
            best = res
    rho = _rho_from_params(best.x)
    rho = as_density_matrix((rho + rho.conj().T) / 2)
    return TomographyResult(rho, -float(best.fun), bool(best.success))


def target_state(label: str) -> np.ndarray:
    if label not in BASIS_STATES:
        raise ValidationError(f"unknown target state {label!r}")
    psi = BASIS_STATES[label]
    return np.outer(psi, psi.conj())


def storage_fidelity(before: TomographyResult, after: TomographyResult) -> float:
    return uhlmann_fidelity(before.rho, after.rho)


def synthetic_counts(rho, labels, total_per_basis: float, rng, exposure=None):
    """Poisson counts with mean ``total_per_basis * e * <pi|rho|pi>`` per projector."""
    out = []
    for i, label in enumerate(labels):
        e = 1.0 if exposure is None else exposure[i]
        psi = BASIS_STATES[label]
        p = max(float(np.real(psi.conj() @ rho @ psi)), 0.0)
        out.append(ProjectiveMeasurement(label, int(rng.poisson(total_per_basis * e * p)), e))
    return out


def _bootstrap_one(args):
    measurements, target, child_seed = args
    rng = np.random.default_rng(child_seed)
    resampled = [ProjectiveMeasurement(m.basis_label, int(rng.poisson(m.counts)), m.exposure)
                 for m in measurements]
    try:
        res = mle_reconstruct(resampled, restarts=0)
    except (ValidationError, ReconstructionError):
        return None
    return uhlmann_fidelity(res.rho, target)


def poisson_bootstrap(measurements, target, n_resamples: int = 1000, seed: int = 0,
                      workers: int = 1) -> float:
    """Standard deviation of the fidelity to ``target`` under Poisson resampling.

    Each resample gets its own child seed spawned from ``seed``, so the result
    does not depend on ``workers``.
    """
    if n_resamples < 100:
        raise ValidationError("n_resamples must be at least 100")
    target = as_density_matrix(target)
    measurements = list(measurements)
    seeds = np.random.SeedSequence(seed).spawn(n_resamples)
    jobs = [(measurements, target, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            fids = list(pool.map(_bootstrap_one, jobs, chunksize=32))
    else:
        fids = [_bootstrap_one(j) for j in jobs]
    ok = np.array([f for f in fids if f is not None])
    failures = n_resamples - ok.size
    if failures > 0.1 * n_resamples:
        raise ReconstructionError(f"{failures} of {n_resamples} resamples failed to reconstruct")
    return float(np.std(ok, ddof=1))


def read_tomo_file(path):
    measurements = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(line for line in fh if not line.lstrip().startswith("#")))
    if not rows or tuple(h.strip() for h in rows[0]) != TOMO_FIELDS:
        raise ValidationError(f"{path}:1: header must be {','.join(TOMO_FIELDS)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            if len(row) != 3:
                raise ValidationError(f"expected 3 fields, got {len(row)}")
            counts = float(row[1])
            if counts != int(counts):
                raise ValidationError(f"count {row[1]!r} is not an integer")
            measurements.append(ProjectiveMeasurement(row[0].strip(), int(counts), float(row[2])))
        except (ValueError, ValidationError) as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return measurements
