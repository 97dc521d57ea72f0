"""Estimators reducing raw photon-counter tallies to memory figures of merit.

All counts are assumed independent and Poissonian; the ``*_sigma`` helpers
propagate that to one-standard-deviation errors with the first-order delta
method.
"""

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ValidationError, as_density_matrix


class EstimatorError(ArithmeticError):
    """An estimator is undefined for the given counts (e.g. division by zero)."""


class InconsistentDataError(ValueError):
    """Measured quantities are jointly incompatible with the excitation model."""


COUNT_FIELDS = ("label", "n1", "n2", "n3", "n23", "window_ns", "accidental")


@dataclass(frozen=True)
class CountRecord:
    """Single-photon-counter tallies for one setting.

    ``n1`` are heralding (Stokes) detections, ``n2``/``n3`` the two anti-Stokes
    detectors, ``n23`` their coincidences and ``accidental`` the estimated
    accidental counts inside the correlation window.
    """

    label: str
    n1: int
    n2: int
    n3: int
    n23: int
    window_ns: float = 800.0
    accidental: int = 0

    def __post_init__(self):
        for name in ("n1", "n2", "n3", "n23", "accidental"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValidationError(f"{self.label}: {name} must be a nonnegative integer")
        if not self.window_ns > 0:
            raise ValidationError(f"{self.label}: window_ns must be positive")
        if self.n23 > min(self.n2, self.n3):
            raise ValidationError(f"{self.label}: n23 exceeds single-detector counts")


@dataclass(frozen=True)
class ExcitationDecomposition:
    p0: float
    p1: float
    p2: float


@dataclass
class ModeSet:
    """Per-mode heralding data for the qudit fidelity bound."""

    modes: list
    heralding_before: np.ndarray
    heralding_after: np.ndarray | None = None
    population_before: np.ndarray | None = None
    population_after: np.ndarray | None = None
    q_f: float = 0.0
    g2: float = 0.0

    def __post_init__(self):
        m = len(self.modes)
        for name in ("heralding_before", "heralding_after", "population_before",
                     "population_after"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            if v.shape != (m,):
                raise ValidationError(f"{name} must have length {m}")
            if np.any(v < 0):
                raise ValidationError(f"{name} must be nonnegative")
            setattr(self, name, v)
        if self.q_f < 0 or self.g2 < 0:
            raise ValidationError("q_f and g2 must be nonnegative")


def g2_zero(rec: CountRecord) -> float:
    """Heralded anti-correlation ``N1 N23 / (N2 N3)``."""
    if rec.n2 == 0 or rec.n3 == 0:
        raise EstimatorError(f"{rec.label}: g2 undefined with zero counts on a detector")
    return rec.n1 * rec.n23 / (rec.n2 * rec.n3)


def g2_zero_sigma(rec: CountRecord) -> float:
    g2 = g2_zero(rec)
    if rec.n23 == 0:
        # one-count upper-limit scale instead of a zero error bar
        return rec.n1 / (rec.n2 * rec.n3)
    rel = 1 / rec.n1 + 1 / rec.n23 + 1 / rec.n2 + 1 / rec.n3
    return g2 * math.sqrt(rel)


def heralding_rate(rec: CountRecord, subtract_accidentals: bool = False) -> float:
    """Anti-Stokes detections per herald, optionally minus accidentals."""
    if rec.n1 == 0:
        raise EstimatorError(f"{rec.label}: heralding rate undefined with no herald counts")
    signal = rec.n2 + rec.n3 - (rec.accidental if subtract_accidentals else 0)
    if signal < 0:
        warnings.warn(f"{rec.label}: accidental subtraction went negative; flooring at 0",
                      stacklevel=2)
        signal = 0
    return signal / rec.n1


def heralding_rate_sigma(rec: CountRecord, subtract_accidentals: bool = False) -> float:
    h = heralding_rate(rec, subtract_accidentals)
    var_signal = rec.n2 + rec.n3 + (rec.accidental if subtract_accidentals else 0)
    return math.sqrt(var_signal / rec.n1 ** 2 + h * h / rec.n1)


def storage_efficiency(h_after: float, h_before: float) -> float:
    """Ratio of heralding rates after and before storage.

    Values above one are returned unchanged with a warning; they indicate a
    statistical fluctuation rather than gain.
    """
    if h_before <= 0:
        raise EstimatorError("storage efficiency undefined for zero input heralding rate")
    if h_after < 0:
        raise ValidationError("heralding rate must be nonnegative")
    eta = h_after / h_before
    if eta > 1.0:
        warnings.warn(f"storage efficiency {eta:.4f} > 1 (statistical fluctuation?)",
                      stacklevel=2)
    return eta


def storage_efficiency_sigma(h_after, sigma_after, h_before, sigma_before) -> float:
    eta = storage_efficiency(h_after, h_before)
    rel = (sigma_before / h_before) ** 2
    if h_after > 0:
        rel += (sigma_after / h_after) ** 2
        return eta * math.sqrt(rel)
    return sigma_after / h_before


def crosstalk_matrix(counts) -> np.ndarray:
    """Crosstalk errors ``2 N_ij / (N_ii + N_jj)`` from an input-by-output count grid."""
    n = np.asarray(counts, dtype=float)
    if n.ndim != 2 or n.shape[0] != n.shape[1]:
        raise ValidationError("crosstalk counts must form a square matrix")
    if np.any(n < 0):
        raise ValidationError("counts must be nonnegative")
    d = np.diag(n)
    norm = d[:, None] + d[None, :]
    if np.any(norm == 0):
        i, j = np.argwhere(norm == 0)[0]
        raise EstimatorError(f"crosstalk undefined for cell ({i}, {j}): zero diagonal counts")
    ce = 2.0 * n / norm
    np.fill_diagonal(ce, 1.0)
    return ce


def crosstalk_summary(ce, labels=None) -> dict:
    """Mean and maximum off-diagonal crosstalk, with the location of the maximum."""
    ce = np.asarray(ce, dtype=float)
    m = ce.shape[0]
    labels = list(range(m)) if labels is None else list(labels)
    off = ~np.eye(m, dtype=bool)
    masked = np.where(off, ce, -np.inf)
    i, j = np.unravel_index(np.argmax(masked), ce.shape)
    return {"mean": float(ce[off].mean()), "max": float(ce[i, j]),
            "max_in": labels[i], "max_out": labels[j]}


def solve_excitations(sum_q_over_h: float, g2: float) -> ExcitationDecomposition:
    """Split detected excitation into zero/one/two-photon probabilities.

    Solves ``p1 + 2 p2 = S`` with ``g2 = 2 p2 / p1**2`` and ``p0 + p1 + p2 = 1``.
    """
    s = sum_q_over_h
    if s < 0 or g2 < 0:
        raise ValidationError("excitation sum and g2 must be nonnegative")
    if g2 == 0:
        p1, p2 = s, 0.0
    else:
        # 2 p2 = g2 p1^2  =>  g2 p1^2 + p1 - S = 0, positive root in cancellation-free form
        p1 = 2.0 * s / (1.0 + math.sqrt(1.0 + 4.0 * g2 * s))
        p2 = g2 * p1 * p1 / 2.0
    p0 = 1.0 - p1 - p2
    if p0 < -1e-9:
        raise InconsistentDataError(
            f"excitation sum {s:.6g} and g2 {g2:.6g} imply p0 = {p0:.3g} < 0")
    return ExcitationDecomposition(max(p0, 0.0), p1, p2)


def qudit_fidelity_bound(ms: ModeSet, decomp: ExcitationDecomposition,
                         heralding=None) -> float:
    """Lower bound on the heralded qudit fidelity from per-mode heralding rates.

    ``heralding`` defaults to ``ms.heralding_before``; pass the after-storage
    rates to bound the retrieved state.
    """
    h = ms.heralding_before if heralding is None else np.asarray(heralding, dtype=float)
    m = len(ms.modes)
    if h.shape != (m,):
        raise ValidationError(f"need {m} heralding rates")
    if np.any(h <= 0):
        raise EstimatorError("qudit bound undefined with a zero heralding rate")
    if decomp.p1 <= 0:
        raise EstimatorError("qudit bound undefined for p1 = 0")
    # work with rates relative to the largest one so the uniform case is exact
    h_max = h.max()
    w = h / h_max
    mean_heralding = h_max * w.sum() / m
    t_prime = w / w.sum()
    overlap = np.sum(np.sqrt(t_prime)) ** 2 / m
    f = decomp.p1 / (decomp.p1 + 2 * decomp.p2) * (ms.q_f / mean_heralding) * overlap
    return float(min(max(f, 0.0), 1.0))


def mixture_state(decomp: ExcitationDecomposition, rho0, rho1, rho2) -> np.ndarray:
    rhos = [as_density_matrix(r) for r in (rho0, rho1, rho2)]
    if len({r.shape for r in rhos}) != 1:
        raise ValidationError("mixture components must share a dimension")
    probs = np.array([decomp.p0, decomp.p1, decomp.p2])
    if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > 1e-9:
        raise ValidationError("excitation probabilities must form a distribution")
    probs = np.clip(probs, 0.0, None)
    return sum(p * r for p, r in zip(probs / probs.sum(), rhos))


def state_fidelity(rho, psi) -> float:
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ rho @ psi))


# -- count files ---------------------------------------------------------------

def parse_label(label: str) -> tuple[str | None, str, str | None]:
    """Split ``[stage/]kind[:mode]`` into its parts.

    ``stage`` is ``before``/``after`` (or None), ``kind`` is ``h``, ``q``,
    ``qf`` or any free-form name.
    """
    stage = None
    rest = label
    if "/" in label:
        stage, rest = label.split("/", 1)
    kind, _, mode = rest.partition(":")
    return stage, kind, (mode or None)


def read_count_file(path, lenient: bool = False):
    """Read a count file; returns ``(records, errors)``.

    ``errors`` lists ``(line_number, message)`` for rows rejected in lenient
    mode; in strict mode the first bad row raises ``ValidationError``.
    """
    records, errors = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(line for line in fh if not line.lstrip().startswith("#")))
    if not rows:
        raise ValidationError(f"{path}: empty count file (header required)")
    header = [h.strip() for h in rows[0]]
    if tuple(header) != COUNT_FIELDS:
        raise ValidationError(f"{path}:1: header must be {','.join(COUNT_FIELDS)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if len(row) != len(COUNT_FIELDS):
                raise ValidationError(f"expected {len(COUNT_FIELDS)} fields, got {len(row)}")
            label = row[0].strip()
            ints = [_parse_count(c) for c in row[1:5]]
            rec = CountRecord(label, *ints, window_ns=float(row[5]),
                              accidental=_parse_count(row[6]))
        except (ValueError, ValidationError) as exc:
            msg = f"{path}:{lineno}: {exc}"
            if not lenient:
                raise ValidationError(msg) from exc
            errors.append((lineno, msg))
            continue
        records.append(rec)
    return records, errors


def _parse_count(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValidationError(f"count {text!r} is not an integer")
    return int(v)


def write_count_file(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNT_FIELDS)
        for r in records:
            w.writerow([r.label, r.n1, r.n2, r.n3, r.n23, r.window_ns, r.accidental])


def build_mode_set(records, stage: str | None = None) -> ModeSet:
    """Assemble a ModeSet from ``h:<mode>``, ``q:<mode>`` and ``qf`` records of one stage.

    Heralding rates are accidental-subtracted; ``g2`` is taken from the ``qf``
    record.
    """
    h, q, qf = {}, {}, None
    for rec in records:
        st, kind, mode = parse_label(rec.label)
        if st != stage:
            continue
        if kind == "h" and mode is not None:
            h[mode] = rec
        elif kind == "q" and mode is not None:
            q[mode] = rec
        elif kind == "qf":
            qf = rec
    if not h:
        raise ValidationError(f"no h:<mode> records for stage {stage!r}")
    if set(q) != set(h):
        raise ValidationError(f"stage {stage!r}: q and h records cover different modes")
    if qf is None:
        raise ValidationError(f"stage {stage!r}: missing qf record")
    modes = list(h)
    return ModeSet(
        modes=modes,
        heralding_before=np.array([heralding_rate(h[k], True) for k in modes]),
        population_before=np.array([heralding_rate(q[k], True) for k in modes]),
        q_f=heralding_rate(qf, True),
        g2=g2_zero(qf),
    )


def qudit_pipeline(ms: ModeSet) -> dict:
    """Excitation decomposition and fidelity bound for one stage's ModeSet."""
    s = float(np.sum(ms.population_before / ms.heralding_before))
    decomp = solve_excitations(s, ms.g2)
    return {
        "modes": ms.modes,
        "sum_q_over_h": s,
        "g2": ms.g2,
        "q_f": ms.q_f,
        "mean_heralding": float(ms.heralding_before.mean()),
        "p0": decomp.p0, "p1": decomp.p1, "p2": decomp.p2,
        "fidelity_bound": qudit_fidelity_bound(ms, decomp),
    }
