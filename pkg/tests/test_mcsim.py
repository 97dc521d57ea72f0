import math

import numpy as np
import pytest

from qirbench import mcsim
from qirbench.core import ValidationError
from qirbench.mcsim import (SimConfig, _kernel_py, compare_analytic, elementary_success,
                            expected_max_two_geometric, run_slots, simulate)
from qirbench.repeater import InfeasibleError, MemorySpec, RepeaterConfig, segment_transmission

CFG0 = RepeaterConfig(total_length_km=250.0, nesting_n=0)


def mem(eta_s=1.0, n=1, p=0.7):
    return MemorySpec("sim", eta_s, 1.0, n, 2, 0.99, pair_probability=p)


def test_certain_success_is_one_slot():
    res = simulate(SimConfig(CFG0, mem(), trials=1000, p0_override=1.0))
    assert res.mean_time_s == CFG0.slot_s
    assert res.std_error_s == 0.0
    assert res.mean_attempts_per_segment == 1.0


def test_geometric_mean_at_one_million_trials():
    res = simulate(SimConfig(CFG0, mem(), trials=10 ** 6, seed=1, p0_override=0.01))
    assert abs(res.mean_slots - 100.0) < 3 * res.std_error_slots
    assert res.mean_time_s == pytest.approx(100 * CFG0.slot_s, rel=0.02)


def test_two_link_wait_matches_max_of_geometrics():
    # with certain swaps, the n=1 completion slot is max(K1, K2)
    for p0 in (0.01, 0.05, 0.3):
        slots, _ = run_slots(1, p0, 1.0, 200_000, seed=5)
        assert slots.mean() == pytest.approx(expected_max_two_geometric(p0), rel=0.05)
    assert expected_max_two_geometric(0.001) * 0.001 == pytest.approx(1.5, rel=1e-3)


def test_expected_max_oracle_by_summation():
    p = 0.2
    # E[max] = sum_{k>=0} P(max > k) = sum 1 - (1 - q^k)^2
    q = 1 - p
    brute = sum(1 - (1 - q ** k) ** 2 for k in range(2000))
    assert expected_max_two_geometric(p) == pytest.approx(brute, rel=1e-12)


def test_n0_ratio_reflects_heralding_prefactor():
    ratio = compare_analytic(SimConfig(CFG0, mem(), trials=200_000, seed=2))
    assert 0.3 <= ratio <= 0.4


def test_ratio_invariant_under_multiplexing():
    ratios = [compare_analytic(SimConfig(CFG0, mem(n=n), trials=200_000, seed=3))
              for n in (1, 2, 4)]
    # relative standard error of each estimate is ~1/sqrt(trials)
    tol = 4 * math.sqrt(2 / 200_000)
    assert max(ratios) / min(ratios) - 1 < tol + 0.005  # small-P0 expansion term


def test_n1_ratio_stable_across_p0():
    cfg = RepeaterConfig(total_length_km=100.0, nesting_n=1, segment_length_km=50.0)
    eta_l0 = segment_transmission(50.0, 22.0)
    ratios = []
    for p0 in (0.001, 0.005, 0.01):
        sc = SimConfig(cfg, mem(eta_s=0.9, p=p0 / eta_l0), trials=100_000, seed=4)
        assert elementary_success(sc) == pytest.approx(p0)
        ratios.append(compare_analytic(sc))
    assert max(ratios) / min(ratios) < 1.2
    # pinned empirical value of the simulation/closed-form ratio for this protocol
    assert np.mean(ratios) == pytest.approx(0.123, abs=0.005)


def test_worker_count_invariance():
    sc = SimConfig(RepeaterConfig(), mem(eta_s=0.8), trials=20_000, seed=9)
    a = simulate(sc, workers=1)
    b = simulate(sc, workers=3)
    assert a == b


@pytest.mark.skipif(mcsim.BACKEND != "compiled", reason="extension not built")
def test_python_and_compiled_kernels_agree():
    for args in ((0, 0.01, 1.0, -1), (2, 0.05, 0.7, -1), (1, 0.02, 0.8, 30)):
        py = _kernel_py.run_trials(*args, 17, 0, 300)
        ref = mcsim._kernel.run_trials(*args, 17, 0, 300)
        np.testing.assert_array_equal(py[0], ref[0])
        assert py[1] == ref[1]


def test_chunked_trials_match_single_run():
    whole, att = _kernel_py.run_trials(1, 0.1, 0.5, -1, 123, 0, 50)
    a, att_a = _kernel_py.run_trials(1, 0.1, 0.5, -1, 123, 0, 20)
    b, att_b = _kernel_py.run_trials(1, 0.1, 0.5, -1, 123, 20, 30)
    np.testing.assert_array_equal(whole, np.concatenate([a, b]))
    assert att == att_a + att_b


def test_mean_time_decreases_with_multiplexing_and_efficiency():
    cfg = RepeaterConfig(nesting_n=1, total_length_km=500.0)
    t_n = [simulate(SimConfig(cfg, mem(eta_s=0.8, n=n), trials=20_000, seed=6)).mean_time_s
           for n in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(t_n, t_n[1:]))
    t_eta = [simulate(SimConfig(cfg, mem(eta_s=e), trials=20_000, seed=6)).mean_time_s
             for e in (0.4, 0.6, 0.8, 1.0)]
    assert all(b < a for a, b in zip(t_eta, t_eta[1:]))


def test_cutoff_never_faster_than_infinite_memory():
    cfg = RepeaterConfig(nesting_n=2)
    base = simulate(SimConfig(cfg, mem(eta_s=0.9), trials=5000, seed=8, p0_override=0.05))
    for cutoff in (0, 5, 20, 100):
        cut = simulate(SimConfig(cfg, mem(eta_s=0.9), trials=5000, seed=8, cutoff_slots=cutoff,
                                 p0_override=0.05))
        assert cut.mean_slots >= base.mean_slots
    # a huge cutoff is never triggered and reproduces the infinite case exactly
    huge = simulate(SimConfig(cfg, mem(eta_s=0.9), trials=5000, seed=8, cutoff_slots=10 ** 9,
                              p0_override=0.05))
    assert huge == base


def test_cutoff_zero_needs_simultaneous_links():
    # n=1, cutoff 0: both links must herald in the same slot, so waiting is geometric in p0^2
    slots, _ = run_slots(1, 0.3, 1.0, 200_000, seed=1, cutoff_slots=0)
    assert slots.mean() == pytest.approx(1 / 0.09, rel=0.02)


def test_determinism_and_seed_sensitivity():
    sc = SimConfig(RepeaterConfig(), mem(eta_s=0.9), trials=2000, seed=42)
    assert simulate(sc) == simulate(sc)
    other = SimConfig(RepeaterConfig(), mem(eta_s=0.9), trials=2000, seed=43)
    assert simulate(other).mean_slots != simulate(sc).mean_slots


def test_errors():
    with pytest.raises(InfeasibleError):
        simulate(SimConfig(CFG0, mem(), trials=10, p0_override=0.0))
    with pytest.raises(InfeasibleError):
        simulate(SimConfig(RepeaterConfig(nesting_n=1), mem(eta_s=0.0), trials=10))
    with pytest.raises(ValidationError):
        SimConfig(CFG0, mem(), trials=0)
    with pytest.raises(ValidationError):
        SimConfig(CFG0, mem(), seed=-1)
    with pytest.raises(ValidationError):
        compare_analytic(SimConfig(CFG0, mem(), trials=10, cutoff_slots=3))


def test_pure_python_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, QIRBENCH_PURE_PYTHON="1")
    proc = subprocess.run([sys.executable, "-c", "from qirbench import mcsim; print(mcsim.BACKEND)"],
                          capture_output=True, text=True, env=env)
    assert proc.stdout.strip() == "python"
