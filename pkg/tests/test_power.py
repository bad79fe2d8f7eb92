import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermocage import (DomainError, PowerTrace, PulseSpec, WorkloadSpec, benign_workload,
                        compile_pulses, superpose, total_energy)

DT = 1e-4


def test_default_vertical_pulse():
    trace = compile_pulses([PulseSpec(41, 0.0, 0.020, 1.0)], DT, 0.05, 128)
    col = trace.values[:, 41]
    assert np.array_equal(col[:200], np.ones(200))
    assert np.all(col[200:] == 0)
    assert np.count_nonzero(trace.values) == 200
    assert total_energy(trace) == pytest.approx(0.02, rel=1e-12)


def test_misaligned_pulse_splits_energy():
    trace = compile_pulses([PulseSpec(0, 0.5e-4, 1e-4, 1.0)], DT, 1e-3, 1)
    np.testing.assert_allclose(trace.values[:2, 0], [0.5, 0.5], rtol=1e-12)
    assert np.all(trace.values[2:] == 0)


def test_zero_duration_is_noop():
    trace = compile_pulses([PulseSpec(0, 1e-3, 0.0, 3.0)], DT, 1e-2, 2)
    assert not trace.values.any()


def test_truncation_is_reported():
    trace = compile_pulses([PulseSpec(0, 0.0, 0.02, 1.0)], DT, 0.01, 1)
    assert total_energy(trace) == pytest.approx(0.01)
    assert trace.truncated_energy == pytest.approx(0.01)


def test_bank_out_of_range():
    with pytest.raises(DomainError):
        compile_pulses([PulseSpec(5, 0, 1e-3, 1)], DT, 1e-2, 5)


def test_pulse_validation():
    with pytest.raises(DomainError):
        PulseSpec(0, -1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        PulseSpec(0, 0.0, 1.0, -1.0)


def test_square_wave_without_jitter():
    spec = WorkloadSpec(banks=(3, 7), burst_duration=5e-3, cooldown_duration=5e-3, amplitude=1.0)
    pulses = benign_workload(spec, 0.020)
    for bank in (3, 7):
        mine = [p for p in pulses if p.bank == bank]
        assert [p.t_start for p in mine] == pytest.approx([0.0, 0.010])
        assert all(p.duration == pytest.approx(5e-3) for p in mine)


def test_workload_is_deterministic():
    spec = WorkloadSpec(banks=(0, 1, 2), seed=1234, duty_jitter=0.4)
    assert benign_workload(spec, 0.2) == benign_workload(spec, 0.2)
    other = WorkloadSpec(banks=(0, 1, 2), seed=1235, duty_jitter=0.4)
    assert benign_workload(other, 0.2) != benign_workload(spec, 0.2)


@pytest.mark.parametrize("jitter", [0.0, 0.1, 0.3])
def test_workload_energy_tracks_duty_cycle(jitter):
    spec = WorkloadSpec(banks=(0,), seed=7, burst_duration=5e-3, cooldown_duration=5e-3,
                        amplitude=0.5, duty_jitter=jitter)
    horizon = 2.0
    energy = sum(p.energy for p in benign_workload(spec, horizon))
    nominal = spec.amplitude * horizon * 0.5
    # extreme per-cycle duty ratios when burst and cooldown jitter in opposite directions
    lo = (1 - jitter) / ((1 - jitter) + (1 + jitter))
    hi = (1 + jitter) / ((1 + jitter) + (1 - jitter))
    slack = spec.amplitude * spec.burst_duration * (1 + jitter)  # one partial cycle
    assert spec.amplitude * horizon * lo - slack <= energy <= spec.amplitude * horizon * hi + slack
    if jitter == 0:
        assert energy == pytest.approx(nominal, rel=1e-9)
    else:
        assert energy == pytest.approx(nominal, rel=0.1)


def test_superpose():
    a = compile_pulses([PulseSpec(0, 0, 2e-3, 1.0)], DT, 1e-2, 3)
    b = compile_pulses([PulseSpec(2, 1e-3, 3e-3, 0.5)], DT, 1e-2, 3)
    zero = PowerTrace.zeros(DT, a.steps, 3)
    assert np.array_equal(superpose(a, zero).values, a.values)
    assert np.array_equal(superpose(a, b).values, superpose(b, a).values)
    assert total_energy(superpose(a, b)) == pytest.approx(total_energy(a) + total_energy(b))
    assert total_energy(zero) == 0.0
    with pytest.raises(DomainError):
        superpose(a, PowerTrace.zeros(DT, a.steps + 1, 3))
    with pytest.raises(DomainError):
        superpose(a, PowerTrace.zeros(2 * DT, a.steps, 3))


pulse = st.builds(PulseSpec,
                  bank=st.integers(0, 3),
                  t_start=st.floats(0, 0.02, allow_nan=False),
                  duration=st.floats(0, 0.01, allow_nan=False),
                  amplitude=st.floats(0, 5, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(st.lists(pulse, max_size=6), st.lists(pulse, max_size=6))
def test_energy_conservation_and_linearity(first, second):
    horizon = 0.04  # every pulse ends before 0.03
    a = compile_pulses(first, DT, horizon, 4)
    b = compile_pulses(second, DT, horizon, 4)
    both = compile_pulses(first + second, DT, horizon, 4)
    expected = sum(p.energy for p in first)
    assert total_energy(a) == pytest.approx(expected, rel=1e-9, abs=1e-15)
    np.testing.assert_allclose(both.values, superpose(a, b).values, rtol=1e-12, atol=1e-15)
