import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermocage import (DomainError, MaterialParams, ModelError, NumericalError, OracleError,
                        PowerTrace, PulseSpec, SolverConfig, StackGeometry, build_network,
                        compile_pulses, reference_simulate, simulate, steady_state, step)
from thermocage.solver import energy_residual, pcg

DT = 1e-4
CFG = SolverConfig()


def test_zero_power_steady_state(stack_net):
    assert not steady_state(stack_net, np.zeros(128)).any()


def test_single_bank_steady_state():
    net = build_network(StackGeometry(1, 1, 1), MaterialParams(r_sink=5.0))
    assert steady_state(net, np.array([2.0]))[0] == pytest.approx(10.0, rel=1e-12)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_vertical_pair_steady_state(method):
    # hand solve: 0.15 a - 0.05 b = 0, -0.05 a + 0.05 b = 1  ->  a = 10, b = 30
    net = build_network(StackGeometry(1, 1, 2), MaterialParams(r_sink=10.0, r_vert=20.0))
    theta = steady_state(net, np.array([0.0, 1.0]), SolverConfig(method=method))
    np.testing.assert_allclose(theta, [10.0, 30.0], rtol=1e-9)


def test_steady_state_needs_a_sink():
    net = build_network(StackGeometry(1, 1, 3), sink_layers=())
    with pytest.raises(ModelError):
        steady_state(net, np.ones(3))


def test_steady_state_shape_check(stack_net):
    with pytest.raises(DomainError):
        steady_state(stack_net, np.ones(3))


def test_cg_nonconvergence_reports_residual(stack_net):
    with pytest.raises(NumericalError) as info:
        steady_state(stack_net, np.ones(128), SolverConfig(method="cg", max_iterations=2))
    assert info.value.residual > CFG.linear_tolerance


def test_pcg_matches_dense_solve():
    rng = np.random.default_rng(3)
    net = build_network(StackGeometry(3, 3, 3))
    b = rng.uniform(0, 1, 27)
    x, relres, iters = pcg(net.conductance, b, tol=1e-12)
    np.testing.assert_allclose(x, np.linalg.solve(net.dense(), b), rtol=1e-9)
    assert relres <= 1e-12 and iters > 0


def test_scalar_implicit_step():
    net = build_network(StackGeometry(1, 1, 1), MaterialParams(c_bank=5e-3, r_sink=10.0))
    got = step(net, np.zeros(1), np.ones(1), DT)[0]
    assert got == pytest.approx((DT * 1 / 5e-3) / (1 + DT / (10.0 * 5e-3)), rel=1e-14)
    assert got == pytest.approx(0.02 / 1.002, rel=1e-14)


def test_zero_is_a_fixed_point(stack_net):
    assert not step(stack_net, np.zeros(128), np.zeros(128), DT).any()


def test_steady_state_is_a_fixed_point(stack_net):
    theta_star = np.linspace(0, 3, 128)
    p = stack_net.conductance @ theta_star
    np.testing.assert_allclose(step(stack_net, theta_star, p, DT), theta_star, rtol=1e-10, atol=1e-12)


def test_zero_power_trace_is_zero(stack_net):
    trace = simulate(stack_net, PowerTrace.zeros(DT, 300, 128))
    assert trace.values.shape == (301, 128)
    assert not trace.values.any()


def test_long_constant_power_reaches_steady_state():
    net = build_network(StackGeometry(2, 2, 3))
    lam = np.linalg.eigvalsh(net.dense())[0] / net.capacitance[0]
    horizon = 10 / lam  # ten slowest time constants
    p = np.arange(1, 13) / 10
    steps = int(math.ceil(horizon / 1e-3))
    cfg = SolverConfig(dt=1e-3)
    trace = simulate(net, PowerTrace(1e-3, np.tile(p, (steps, 1))), cfg=cfg)
    target = steady_state(net, p)
    assert np.max(np.abs(trace.values[-1] - target)) <= 1e-3 * np.max(target)


def test_vertical_pulse_reaches_victim_late(stack_net):
    power = compile_pulses([PulseSpec(41, 0, 0.02, 1.0)], DT, 0.1, 128)
    v = simulate(stack_net, power).values[:, 25]
    assert np.argmax(np.diff(v)) > 10  # steepest rise is delayed, not at onset
    assert np.argmax(v) * DT > 0.02


def test_simulate_dimension_checks(stack_net):
    with pytest.raises(DomainError):
        simulate(stack_net, PowerTrace.zeros(DT, 10, 127))
    with pytest.raises(DomainError):
        simulate(stack_net, PowerTrace.zeros(2 * DT, 10, 128))
    with pytest.raises(DomainError):
        simulate(stack_net, PowerTrace.zeros(DT, 10, 128), theta0=np.zeros(5))


def test_simulate_is_bit_reproducible(stack_net):
    power = compile_pulses([PulseSpec(9, 0, 0.02, 1.0), PulseSpec(24, 0.003, 0.005, 1.0)],
                           DT, 0.05, 128)
    a = simulate(stack_net, power).values
    b = simulate(stack_net, power).values
    assert a.tobytes() == b.tobytes()


def test_cg_stepper_agrees_with_direct():
    net = build_network(StackGeometry(3, 3, 3))
    power = compile_pulses([PulseSpec(13, 0, 0.01, 1.0)], DT, 0.02, 27)
    a = simulate(net, power).values
    b = simulate(net, power, cfg=SolverConfig(method="cg", linear_tolerance=1e-12)).values
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


# -- reference oracle ---------------------------------------------------------

def test_reference_single_bank_decay():
    p = MaterialParams()
    net = build_network(StackGeometry(1, 1, 1), p)
    trace = reference_simulate(net, PowerTrace.zeros(DT, 500, 1), np.array([1.0]), refinement=10_000)
    exact = np.exp(-trace.times / (p.r_sink * p.c_bank))
    np.testing.assert_allclose(trace.values[:, 0], exact, rtol=1e-6)


def test_reference_zero_power():
    net = build_network(StackGeometry(2, 2, 2))
    assert not reference_simulate(net, PowerTrace.zeros(DT, 20, 8), refinement=100).values.any()


def test_reference_block_equals_literal_stepping():
    net = build_network(StackGeometry(2, 1, 2))
    power = compile_pulses([PulseSpec(1, 0, 5e-4, 1.0)], DT, 1e-3, 4)
    a = reference_simulate(net, power, refinement=128).values
    b = reference_simulate(net, power, refinement=128, literal=True).values
    np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-16)


def test_reference_stability_guard():
    net = build_network(StackGeometry(2, 2, 2), MaterialParams(c_bank=1e-7))
    with pytest.raises(OracleError, match="refinement"):
        reference_simulate(net, PowerTrace.zeros(DT, 2, 8), refinement=100)


def test_reference_size_limit(stack_net):
    with pytest.raises(DomainError):
        reference_simulate(stack_net, PowerTrace.zeros(DT, 2, 128), refinement=100)


def test_first_order_convergence_on_small_stack():
    net = build_network(StackGeometry(2, 2, 2))
    pulses = [PulseSpec(0, 0.0, 0.01, 1.0), PulseSpec(7, 0.004, 0.008, 0.6)]
    horizon = 0.03
    ref = reference_simulate(net, compile_pulses(pulses, DT / 2, horizon, 8), refinement=10_000).values
    coarse = simulate(net, compile_pulses(pulses, DT, horizon, 8)).values
    fine = simulate(net, compile_pulses(pulses, DT / 2, horizon, 8), cfg=SolverConfig(dt=DT / 2)).values
    e1 = np.abs(coarse - ref[::2]).max()
    e2 = np.abs(fine - ref).max()
    assert 1.7 <= e1 / e2 <= 2.3


# -- invariants -----------------------------------------------------------------

def _random_case(rng, n, steps):
    p = rng.uniform(0, 1, (steps, n)) * (rng.uniform(size=(steps, n)) < 0.2)
    return PowerTrace(DT, p), rng.uniform(0, 2, n)


dims = st.integers(1, 3)


@settings(max_examples=30, deadline=None)
@given(dims, dims, dims, st.integers(0, 2**32 - 1))
def test_energy_balance_and_positivity(w, d, l, seed):
    rng = np.random.default_rng(seed)
    net = build_network(StackGeometry(w, d, l))
    power, theta0 = _random_case(rng, net.n, 40)
    trace = simulate(net, power, theta0)
    assert trace.values.min() >= -10 * CFG.linear_tolerance * np.abs(trace.values).max()
    res = energy_residual(net, trace, power)
    rhs = np.linalg.norm(power.values, axis=1) + np.linalg.norm(
        net.capacitance / DT * trace.values[:-1], axis=1)
    assert np.all(res <= CFG.linear_tolerance * rhs + 1e-12)


@settings(max_examples=30, deadline=None)
@given(dims, dims, dims, st.integers(0, 2**32 - 1))
def test_monotone_decay(w, d, l, seed):
    rng = np.random.default_rng(seed)
    net = build_network(StackGeometry(w, d, l))
    trace = simulate(net, PowerTrace.zeros(DT, 60, net.n), rng.uniform(0, 5, net.n))
    norms = np.abs(trace.values).max(axis=1)
    assert np.all(np.diff(norms) <= 1e-15 * norms[0])


def test_superposition_and_scaling():
    rng = np.random.default_rng(11)
    net = build_network(StackGeometry(3, 2, 3))
    p1, _ = _random_case(rng, net.n, 80)
    p2, _ = _random_case(rng, net.n, 80)
    s1, s2 = simulate(net, p1).values, simulate(net, p2).values
    both = simulate(net, PowerTrace(DT, p1.values + p2.values)).values
    np.testing.assert_allclose(both, s1 + s2, rtol=0, atol=10 * CFG.linear_tolerance * both.max())
    scaled = simulate(net, PowerTrace(DT, 3.5 * p1.values)).values
    np.testing.assert_allclose(scaled, 3.5 * s1, rtol=0, atol=10 * CFG.linear_tolerance * scaled.max())


def test_depth_gradient_small_stack():
    net = build_network(StackGeometry(2, 2, 4))
    theta = steady_state(net, np.full(16, 0.1)).reshape(4, 4).mean(axis=1)
    assert np.all(np.diff(theta) > 0)
