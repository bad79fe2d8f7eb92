"""Plan a thermal cage around bank 25 and see what the staggering buys.

The planner measures how long heat takes to reach the victim from each
neighbour, delays the fast (lateral) attackers so every wave lands
together, and a short grid search then nudges the offsets further.
"""
from thermocage import (CageParams, StackGeometry, ThrottlePolicy, build_network, compile_pulses,
                        plan_cage, plan_to_pulses, propagation_delay, refine_offsets, simulate,
                        victim_impact)
from thermocage.attack import AttackEntry, LateralSet, victim_peak

geom = StackGeometry()
net = build_network(geom)
victim = 25

for bank in (9, 41, 24, 26):
    print(f"delay {bank:2d} -> {victim}: {propagation_delay(net, bank, victim) * 1e3:5.1f} ms")

plan = plan_cage(victim, geom, net, CageParams(lateral_set=LateralSet.ROW_PAIR))
print("\nplanned cage (cycle %.1f ms)" % (plan.cycle_period * 1e3))
for e in plan.entries:
    print(f"  bank {e.attacker:2d}: start {e.offset * 1e3:5.1f} ms for {e.duration * 1e3:4.1f} ms")

horizon = plan.cycle_period + 0.05
together = [AttackEntry(e.attacker, 0.0, e.duration, e.amplitude) for e in plan.entries]
print(f"\nvictim peak, staggered:    {victim_peak(net, victim, plan.entries, horizon):.4f} K")
print(f"victim peak, simultaneous: {victim_peak(net, victim, together, horizon):.4f} K")

refined = refine_offsets(net, plan, window=5e-3, grid=5e-4)
print(f"victim peak, refined:      {victim_peak(net, victim, refined.entries, horizon):.4f} K")

# Impact with a throttle threshold low enough for a 1 W cage to trip it.
trace = simulate(net, compile_pulses(plan_to_pulses(refined), 1e-4, horizon, net.n))
print(victim_impact(trace, victim, ThrottlePolicy(threshold=0.25, hysteresis=0.05)))
