"""Information capacity of a multimode memory viewed as a discrete channel.

Two routes are provided: the closed form for the symmetric depolarizing
channel, and a Blahut-Arimoto maximizer that works for any conditional
distribution ``p(y|x)``.  The test-suite uses each as an oracle for the other.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import ValidationError

ROW_SUM_ATOL = 1e-9


@dataclass(frozen=True)
class ChannelMatrix:
    """Conditional distribution ``p(y|x)``; rows are inputs, columns outputs."""

    p_cond: np.ndarray

    def __post_init__(self):
        p = np.array(self.p_cond, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise ValidationError(f"channel matrix must be 2-D, got shape {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise ValidationError("channel probabilities must lie in [0, 1]")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > ROW_SUM_ATOL:
            raise ValidationError("every channel row must sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "p_cond", p)

    @property
    def m_in(self) -> int:
        return self.p_cond.shape[0]

    @property
    def m_out(self) -> int:
        return self.p_cond.shape[1]


@dataclass(frozen=True)
class CapacityResult:
    capacity_bits: float
    optimal_input: np.ndarray
    iterations: int
    converged: bool
    # mutual information (bits) after each iteration, only when requested
    history: tuple = field(default=(), repr=False)


def _check_m_pn(m, p_n):
    if int(m) != m or m < 2:
        raise ValidationError(f"mode count must be an integer >= 2, got {m}")
    if not 0.0 <= p_n <= 1.0:
        raise ValidationError(f"p_n must lie in [0, 1], got {p_n}")


def depolarizing_channel(m: int, p_n: float) -> ChannelMatrix:
    """Crosstalk matrix of an ``m``-mode memory under depolarizing noise ``p_n``."""
    _check_m_pn(m, p_n)
    off = p_n / m
    p = np.full((m, m), off)
    np.fill_diagonal(p, 1.0 - (m - 1) * off)
    return ChannelMatrix(p)


def fidelity_to_pn(f: float, m: int) -> float:
    """Invert ``F = 1 - (m-1) p_n / m`` for the depolarizing noise strength.

    Fidelities below ``1/m`` cannot be produced by the depolarizing family and
    are rejected rather than clamped.
    """
    if int(m) != m or m < 2:
        raise ValidationError(f"mode count must be an integer >= 2, got {m}")
    if f > 1.0:
        raise ValidationError(f"fidelity must be <= 1, got {f}")
    floor = 1.0 / m
    if f < floor - 1e-15:
        raise ValidationError(
            f"fidelity {f} is below the depolarizing-model floor 1/m = {floor:.6g}")
    p_n = m * (1.0 - f) / (m - 1)
    return min(max(p_n, 0.0), 1.0)


def _xlog2x(x: float) -> float:
    return x * np.log2(x) if x > 0 else 0.0


def capacity_depolarizing(m: int, p_n: float) -> float:
    """Closed-form capacity (bits) of the ``m``-mode depolarizing channel."""
    _check_m_pn(m, p_n)
    diag = 1.0 - (m - 1) * p_n / m
    off = p_n / m
    c = np.log2(m) + _xlog2x(diag) + (m - 1) * _xlog2x(off)
    return float(min(max(c, 0.0), np.log2(m)))


def _kl_rows_bits(p_cond, q_out):
    """D(p(.|x) || q) in bits for every input row, with 0 log 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p_cond > 0, p_cond / q_out, 1.0)
        terms = np.where(p_cond > 0, p_cond * np.log2(ratio), 0.0)
    return terms.sum(axis=1)


def mutual_information(ch: ChannelMatrix, p_in) -> float:
    """I(X;Y) in bits for input distribution ``p_in``."""
    p_in = np.asarray(p_in, dtype=float)
    q_out = p_in @ ch.p_cond
    used = p_in > 0  # unused inputs may have infinite divergence
    return float(p_in[used] @ _kl_rows_bits(ch.p_cond[used], q_out))


def capacity_blahut_arimoto(ch: ChannelMatrix, tol: float = 1e-9, max_iter: int = 10000,
                            record_history: bool = False) -> CapacityResult:
    """Maximize I(X;Y) over input distributions with Blahut-Arimoto.

    Iteration stops once the gap between the standard upper bound
    ``max_x D(p(.|x)||q)`` and lower bound ``log2 sum_x p(x) 2**D(...)`` drops
    below ``tol`` bits.  Running out of iterations is reported through
    ``converged=False`` rather than raised.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    p_cond = ch.p_cond
    p_in = np.full(ch.m_in, 1.0 / ch.m_in)
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        q_out = p_in @ p_cond
        d = _kl_rows_bits(p_cond, q_out)
        if record_history:
            history.append(float(p_in @ d))
        # shift by the max before exponentiating to keep 2**d finite
        dmax = d.max()
        w = p_in * np.exp2(d - dmax)
        lower = dmax + np.log2(w.sum())
        if dmax - lower < tol:
            converged = True
            break
        p_in = w / w.sum()
    cap = mutual_information(ch, p_in)
    cap = min(max(cap, 0.0), np.log2(ch.m_in) + tol)
    return CapacityResult(cap, p_in, iterations, converged, tuple(history))
