"""Pure-Python nested-repeater trial kernel.

Reference twin of ``_kernel.pyx``; both must produce bit-identical output for
the same arguments.  Random numbers come from a splitmix64 stream per trial,
seeded by ``mix64(seed + (trial + 1) * GOLDEN)``.
"""

import math

import numpy as np

MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int, trial: int):
        self.state = mix64((seed + (trial + 1) * GOLDEN) & MASK)

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)


class _Trial:
    __slots__ = ("rng", "log_q", "p0", "swap_p", "cutoff", "attempts")

    def __init__(self, rng, p0, swap_p, cutoff):
        self.rng = rng
        self.p0 = p0
        self.log_q = math.log1p(-p0) if p0 < 1.0 else 0.0
        self.swap_p = swap_p
        self.cutoff = cutoff
        self.attempts = 0

    def link(self, level: int, start: int) -> int:
        """Slot at which a level-``level`` link first becomes available."""
        if level == 0:
            if self.p0 >= 1.0:
                k = 1
            else:
                k = 1 + int(math.floor(math.log1p(-self.rng.uniform()) / self.log_q))
            self.attempts += k
            return start + k
        t1 = self.link(level - 1, start)
        t2 = self.link(level - 1, start)
        while True:
            if self.cutoff >= 0:
                # a link that waited past the cutoff is discarded and regenerated
                while abs(t1 - t2) > self.cutoff:
                    if t1 < t2:
                        t1 = self.link(level - 1, t1 + self.cutoff)
                    else:
                        t2 = self.link(level - 1, t2 + self.cutoff)
            t = t1 if t1 > t2 else t2
            if self.rng.uniform() < self.swap_p:
                return t
            t1 = self.link(level - 1, t)
            t2 = self.link(level - 1, t)


def run_trials(nesting: int, p0: float, swap_p: float, cutoff: int, seed: int,
               first_trial: int, count: int):
    """Simulate trials ``first_trial .. first_trial + count - 1``.

    Returns ``(slots, attempts)``: completion slot of each trial as an int64
    array and the total number of elementary attempts.
    """
    out = np.empty(count, dtype=np.int64)
    attempts = 0
    for i in range(count):
        tr = _Trial(SplitMix64(seed, first_trial + i), p0, swap_p, cutoff)
        out[i] = tr.link(nesting, 0)
        attempts += tr.attempts
    return out, attempts
