"""Analytic timing and rate model for nested quantum repeaters.

Times are in seconds internally; rates are reported in bits per minute.
"""

import enum
import math
from dataclasses import dataclass, replace

from .capacity import capacity_depolarizing, fidelity_to_pn
from .core import ValidationError


class InfeasibleError(ArithmeticError):
    """The model has no finite answer for these parameters."""


class SourceKind(str, enum.Enum):
    SINGLE_PHOTON_ABSORPTIVE = "single_photon_absorptive"
    WEAK_PULSE_ABSORPTIVE = "weak_pulse_absorptive"
    DLCZ_EMISSIVE = "dlcz_emissive"
    CAVITY_QED = "cavity_qed"


# Pair-generation probability conventions used for the memory comparison table.
DEFAULT_PAIR_PROBABILITY = {
    SourceKind.SINGLE_PHOTON_ABSORPTIVE: 0.7,
    SourceKind.WEAK_PULSE_ABSORPTIVE: 0.7,
    SourceKind.DLCZ_EMISSIVE: 0.1,
    SourceKind.CAVITY_QED: 0.7,
}


@dataclass(frozen=True)
class RepeaterConfig:
    total_length_km: float = 1000.0
    nesting_n: int = 2
    segment_length_km: float = 250.0
    attenuation_length_km: float = 22.0
    light_speed_km_per_s: float = 2.0e5
    detection_efficiency: float = 1.0
    swap_probability: float = 1.0
    entangle_probability: float = 0.7

    def __post_init__(self):
        for name in ("total_length_km", "segment_length_km", "attenuation_length_km",
                     "light_speed_km_per_s"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("detection_efficiency", "swap_probability", "entangle_probability"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValidationError(f"{name} must lie in (0, 1], got {v}")
        if int(self.nesting_n) != self.nesting_n or self.nesting_n < 0:
            raise ValidationError("nesting_n must be a nonnegative integer")

    @property
    def slot_s(self) -> float:
        """Elementary communication time L0/c."""
        return self.segment_length_km / self.light_speed_km_per_s


@dataclass(frozen=True)
class MemorySpec:
    """Benchmark parameters of one quantum memory.

    ``qubit_fidelity`` is a storage fidelity measured in a ``fidelity_dim``
    dimensional subspace (qubits by default); it is converted to a depolarizing
    strength with that dimension before being applied to all ``mode_count_m``
    modes.
    """

    name: str
    storage_efficiency: float
    lifetime_s: float
    multiplex_n: int
    mode_count_m: int
    qubit_fidelity: float
    source_kind: SourceKind = SourceKind.SINGLE_PHOTON_ABSORPTIVE
    pair_probability: float | None = None
    fidelity_dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "source_kind", SourceKind(self.source_kind))
        if self.pair_probability is None:
            object.__setattr__(self, "pair_probability",
                               DEFAULT_PAIR_PROBABILITY[self.source_kind])
        if not 0.0 <= self.storage_efficiency <= 1.0:
            raise ValidationError(f"{self.name}: storage_efficiency must lie in [0, 1]")
        if not 0.0 <= self.qubit_fidelity <= 1.0:
            raise ValidationError(f"{self.name}: qubit_fidelity must lie in [0, 1]")
        if not self.lifetime_s >= 0:
            raise ValidationError(f"{self.name}: lifetime_s must be >= 0")
        if int(self.multiplex_n) != self.multiplex_n or self.multiplex_n < 1:
            raise ValidationError(f"{self.name}: multiplex_n must be an integer >= 1")
        if int(self.mode_count_m) != self.mode_count_m or self.mode_count_m < 1:
            raise ValidationError(f"{self.name}: mode_count_m must be an integer >= 1")
        if not 0.0 < self.pair_probability <= 1.0:
            raise ValidationError(f"{self.name}: pair_probability must lie in (0, 1]")
        if int(self.fidelity_dim) != self.fidelity_dim or self.fidelity_dim < 2:
            raise ValidationError(f"{self.name}: fidelity_dim must be an integer >= 2")


@dataclass(frozen=True)
class RateResult:
    t_tot_s: float
    t_tau_s: float
    capacity_bits: float
    r_qm_bits_per_min: float
    r_tau_bits_per_min: float


def segment_transmission(l0_km: float, l_att_km: float) -> float:
    """Fiber transmission ``exp(-L0 / (2 L_att))`` of one elementary segment."""
    if not l0_km > 0 or not l_att_km > 0:
        raise ValidationError("segment and attenuation lengths must be positive")
    return math.exp(-l0_km / (2.0 * l_att_km))


def t_tot(cfg: RepeaterConfig, mem: MemorySpec) -> float:
    """Expected entanglement distribution time (s) of an n-level nested repeater."""
    n = cfg.nesting_n
    eta = mem.storage_efficiency * cfg.detection_efficiency
    eta_l0 = segment_transmission(cfg.segment_length_km, cfg.attenuation_length_km)
    denom = mem.multiplex_n * mem.pair_probability * eta_l0 * cfg.detection_efficiency * eta ** 4
    if denom <= 0:
        raise InfeasibleError(f"{mem.name}: zero overall efficiency, distribution time is infinite")
    prod = 1.0
    for k in range(1, n + 1):
        prod *= 2 ** k - (2 ** k - 1) * eta
    return 3 ** (n + 1) * cfg.slot_s * prod / denom


def lifetime_slots(cfg: RepeaterConfig, lifetime_s: float) -> float:
    """Memory lifetime as a whole number of elementary slots (``inf`` stays ``inf``)."""
    if math.isinf(lifetime_s):
        return math.inf
    return math.floor(lifetime_s / cfg.slot_s)


def t_tau(cfg: RepeaterConfig, mem: MemorySpec, t_tot_s: float) -> float:
    """Distribution time (s) corrected for a finite memory lifetime."""
    if not t_tot_s > 0:
        raise ValidationError("t_tot_s must be positive")
    p_e = cfg.entangle_probability
    p_s = cfg.swap_probability
    q = 1.0 - p_e
    slots = lifetime_slots(cfg, mem.lifetime_s)
    factor = 0.0 if math.isinf(slots) else q ** (slots + 1) / (1.0 - p_e / 2.0)
    if factor >= 1.0:
        raise InfeasibleError("finite-lifetime correction factor >= 1; model out of range")
    numerator = t_tot_s - (1.0 + p_e) / (p_e * p_s) * factor
    if numerator <= 0:
        raise InfeasibleError("finite-lifetime correction exceeds T_tot; model out of range")
    return numerator / (1.0 - factor)


def qir(capacity_bits: float, time_s: float) -> float:
    """Quantum interconnect rate in bits per minute."""
    if not time_s > 0:
        raise ValidationError("time_s must be positive")
    return capacity_bits * 60.0 / time_s


def memory_capacity(mem: MemorySpec) -> float:
    if mem.mode_count_m < 2:
        return 0.0
    p_n = fidelity_to_pn(mem.qubit_fidelity, mem.fidelity_dim)
    return capacity_depolarizing(mem.mode_count_m, p_n)


def evaluate_memory(cfg: RepeaterConfig, mem: MemorySpec) -> RateResult:
    capacity = memory_capacity(mem)
    tt = t_tot(cfg, mem)
    ttau = t_tau(cfg, mem, tt)
    return RateResult(tt, ttau, capacity, qir(capacity, tt), qir(capacity, ttau))


def sweep_fig1b(m_range, eta_range, p_n_list, cfg: RepeaterConfig | None = None,
                pair_probability: float = 1.0) -> list[tuple[float, int, float, float]]:
    """Grid of ``(p_n, M, eta_s, R_qm)`` for a single-mode-multiplexed memory.

    ``p_n`` is applied directly to all ``M`` modes.  ``M = 1`` carries no
    information and yields zero rate.
    """
    cfg = RepeaterConfig() if cfg is None else cfg
    m_range, eta_range, p_n_list = list(m_range), list(eta_range), list(p_n_list)
    if not m_range or not eta_range or not p_n_list:
        raise ValidationError("sweep ranges must be nonempty")
    rows = []
    for p_n in p_n_list:
        for m in m_range:
            cap = 0.0 if m < 2 else capacity_depolarizing(m, p_n)
            for eta_s in eta_range:
                mem = MemorySpec(name="sweep", storage_efficiency=eta_s, lifetime_s=math.inf,
                                 multiplex_n=1, mode_count_m=m, qubit_fidelity=1.0,
                                 pair_probability=pair_probability)
                rows.append((p_n, m, eta_s, qir(cap, t_tot(cfg, mem))))
    return rows


def with_pair_probability(mem: MemorySpec, p: float) -> MemorySpec:
    return replace(mem, pair_probability=p)
