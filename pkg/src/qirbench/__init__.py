"""Quantum interconnect rate (QIR) benchmarking for multimode quantum memories."""

from .capacity import (CapacityResult, ChannelMatrix, capacity_blahut_arimoto,
                       capacity_depolarizing, depolarizing_channel, fidelity_to_pn)
from .core import ValidationError, depolarize, matrix_sqrt_psd, uhlmann_fidelity
from .entanglement import build_noisy_pair, eof_closed_form_depolarizing, eof_lower_bound
from .repeater import (InfeasibleError, MemorySpec, RateResult, RepeaterConfig, SourceKind,
                       evaluate_memory, qir, segment_transmission, sweep_fig1b, t_tau, t_tot)

__version__ = "0.1.0"
