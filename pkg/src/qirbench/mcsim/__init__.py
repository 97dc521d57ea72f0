"""Monte-Carlo simulation of the nested repeater protocol.

Protocol, in elementary slots of ``L0/c``: every segment attempts
entanglement once per slot and succeeds with ``P0 = 1 - (1 - p eta_L0 eta_d)**N``.
Two neighbouring links are swapped as soon as both exist; the swap succeeds
with ``p_s (eta_s eta_d)**2`` and a failure discards both.  With a cutoff, a
link that waits more than ``cutoff_slots`` for its partner is discarded and
regenerated.

The trial loop runs in a compiled extension when it is available and in an
identical pure-Python kernel otherwise (or when ``QIRBENCH_PURE_PYTHON=1``).
Each trial draws from its own splitmix64 stream derived from
``(seed, trial_index)``, so results do not depend on how trials are split
between workers.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core import ValidationError
from ..repeater import InfeasibleError, MemorySpec, RepeaterConfig, segment_transmission, t_tot
from . import _kernel_py

if os.environ.get("QIRBENCH_PURE_PYTHON") == "1":
    _kernel = _kernel_py
    BACKEND = "python"
else:
    try:
        from . import _kernel
        BACKEND = "compiled"
    except ImportError:
        _kernel = _kernel_py
        BACKEND = "python"

SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class SimConfig:
    cfg: RepeaterConfig
    mem: MemorySpec
    trials: int = 100_000
    seed: int = 0
    cutoff_slots: int | None = None
    p0_override: float | None = None

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValidationError("trials must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed <= SEED_MASK:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.cutoff_slots is not None and (int(self.cutoff_slots) != self.cutoff_slots
                                              or self.cutoff_slots < 0):
            raise ValidationError("cutoff_slots must be a nonnegative integer")
        if self.p0_override is not None and not 0.0 <= self.p0_override <= 1.0:
            raise ValidationError("p0 must lie in [0, 1]")


@dataclass(frozen=True)
class SimResult:
    mean_time_s: float
    std_error_s: float
    trials: int
    mean_attempts_per_segment: float
    mean_slots: float
    std_error_slots: float
    slots: np.ndarray | None = None


def elementary_success(sc: SimConfig) -> float:
    if sc.p0_override is not None:
        return sc.p0_override
    single = (sc.mem.pair_probability
              * segment_transmission(sc.cfg.segment_length_km, sc.cfg.attenuation_length_km)
              * sc.cfg.detection_efficiency)
    return 1.0 - (1.0 - single) ** sc.mem.multiplex_n


def swap_success(sc: SimConfig) -> float:
    eta = sc.mem.storage_efficiency * sc.cfg.detection_efficiency
    return sc.cfg.swap_probability * eta * eta


def run_slots(nesting: int, p0: float, swap_p: float, trials: int, seed: int,
              cutoff_slots: int | None = None, workers: int = 1, kernel=None):
    """Completion slot of every trial plus the total elementary attempts."""
    if p0 <= 0:
        raise InfeasibleError("elementary success probability is zero; no progress possible")
    if swap_p <= 0:
        raise InfeasibleError("swap success probability is zero; no progress possible")
    kernel = _kernel if kernel is None else kernel
    cutoff = -1 if cutoff_slots is None else int(cutoff_slots)
    if workers <= 1 or trials < 2 * workers:
        return kernel.run_trials(nesting, p0, swap_p, cutoff, seed, 0, trials)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    args = [(nesting, p0, swap_p, cutoff, seed, int(a), int(b - a))
            for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(kernel.__name__,) + a for a in args]))
    return np.concatenate([p[0] for p in parts]), sum(p[1] for p in parts)


def _run_chunk(args):
    import importlib
    kernel = importlib.import_module(args[0])
    return kernel.run_trials(*args[1:])


def simulate(sc: SimConfig, workers: int = 1, keep_slots: bool = False) -> SimResult:
    """Mean end-to-end distribution time over ``sc.trials`` independent trials."""
    p0 = elementary_success(sc)
    slots, attempts = run_slots(sc.cfg.nesting_n, p0, swap_success(sc), sc.trials, sc.seed,
                                sc.cutoff_slots, workers)
    n = slots.size
    mean = float(slots.mean())
    sem = float(slots.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    slot_s = sc.cfg.slot_s
    segments = 2 ** sc.cfg.nesting_n
    return SimResult(mean * slot_s, sem * slot_s, n, attempts / (n * segments), mean, sem,
                     slots if keep_slots else None)


def compare_analytic(sc: SimConfig, workers: int = 1) -> float:
    """Ratio of the simulated mean time to the closed-form distribution time."""
    if sc.cutoff_slots is not None:
        raise ValidationError("compare_analytic requires an infinite cutoff")
    return simulate(sc, workers).mean_time_s / t_tot(sc.cfg, sc.mem)


def expected_max_two_geometric(p0: float) -> float:
    """E[max(K1, K2)] for i.i.d. geometric K on {1, 2, ...} with success ``p0``."""
    return (3.0 - 2.0 * p0) / (p0 * (2.0 - p0))
