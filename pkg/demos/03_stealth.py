"""How visible is the cage to coarse per-layer sensors?

Runs a bursty benign workload as the baseline, then the same workload
with the cage on top, and with a single lateral attacker scaled to give
the victim the same peak. Lower stealth scores mean the attack hides
better in the benign noise.
"""
from thermocage import (SensorModel, StackGeometry, WorkloadSpec, baseline_stats, benign_workload,
                        build_network, compile_pulses, plan_cage, plan_to_pulses, read_sensors,
                        simulate, stealth_score, superpose)
from thermocage.attack import AttackEntry, victim_peak
from thermocage.power import PulseSpec

geom = StackGeometry()
net = build_network(geom)
dt, horizon, victim = 1e-4, 0.15, 25

busy = WorkloadSpec(banks=tuple(range(16, 32)), seed=2024, amplitude=0.3, duty_jitter=0.3)
benign = compile_pulses(benign_workload(busy, horizon), dt, horizon, net.n)
sensors = SensorModel(sample_period=1e-3, noise_sigma=0.01)
stats = baseline_stats(read_sensors(simulate(net, benign), sensors, seed=1, geom=geom))

plan = plan_cage(victim, geom, net)
cage = compile_pulses(plan_to_pulses(plan), dt, horizon, net.n)
target = victim_peak(net, victim, plan.entries, horizon)

unit = [AttackEntry(24, 0.0, 0.02, 1.0)]
scale = target / victim_peak(net, victim, unit, horizon)
single = compile_pulses([PulseSpec(24, 0.0, 0.02, scale)], dt, horizon, net.n)

for name, attack in (("cage", cage), ("single bank", single)):
    trace = simulate(net, superpose(benign, attack))
    score = stealth_score(read_sensors(trace, sensors, seed=1, geom=geom), stats)
    energy = attack.values.sum() * dt
    print(f"{name:12s} energy {energy * 1e3:6.1f} mJ  stealth score {score:6.2f}")
