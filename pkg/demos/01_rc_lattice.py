"""Heat flow in the default 4x4x8 bank lattice.

Builds the RC network, prints the steady-state temperature profile under
uniform load, then drives one bank with a step and compares how fast its
in-plane and stacked neighbours warm up.
"""
import numpy as np

from thermocage import (PulseSpec, StackGeometry, build_network, compile_pulses, neighbors,
                        simulate, steady_state)

geom = StackGeometry(4, 4, 8)
net = build_network(geom)
print(f"{net.n} banks, {net.conductance.nnz} nonzeros in G")

# Uniform 0.1 W everywhere: layers further from the sink run hotter.
theta = steady_state(net, np.full(net.n, 0.1))
for layer, mean in enumerate(theta.reshape(geom.layers, -1).mean(axis=1)):
    print(f"layer {layer}: {mean:6.2f} K above ambient")

# A 1 W step on bank 21 (layer 1) for 50 ms.
src = 21
power = compile_pulses([PulseSpec(src, 0.0, 0.05, 1.0)], 1e-4, 0.05, net.n)
trace = simulate(net, power)
print(f"\nstep on bank {src}; rise of each neighbour after 5, 20 and 50 ms")
for bank, kind in neighbors(src, geom):
    rise = trace.values[[50, 200, 500], bank]
    print(f"  {kind.value:8s} bank {bank:3d}: " + "  ".join(f"{v:.4f} K" for v in rise))
