"""Plant three vortices, build the vortex balls, and print the annular energy ledger."""

import math

import numpy as np

from glvortex import Domain, GLParams, plant_configuration
from glvortex.vortex import find_zeros, grow_and_merge, initial_balls, ledger_slope

dom = Domain.unit_disk(128)
params = GLParams(0.02)
pts = [(0.3, 0.0), (-0.3, 0.05), (0.0, -0.4)]
u, A = plant_configuration(dom, pts, [1, 1, -1], params)

print("zeros (x, y, winding):")
for x, y, w in find_zeros(u, dom):
    print(f"  ({x:+.4f}, {y:+.4f})  {w:+d}")

balls = initial_balls(u, dom, params, guard=False)
print(f"initial balls: {len(balls.balls)}, total radius {balls.total_radius:.4f}")
grown, ledger = grow_and_merge(balls, 0.5, u, A, dom, params)
print(f"grown to total radius {grown.total_radius:.4f}, degree {grown.total_degree}")
for row in ledger[:: max(1, len(ledger) // 8)]:
    print(f"  t {row.t_in:.4f} -> {row.t_out:.4f}")

single, _ = plant_configuration(dom, [(0.013, 0.007)], [1], params)
_, led = grow_and_merge(initial_balls(single, dom, params, guard=False), 0.5, single, A, dom, params)
print(f"isolated vortex: ledger slope {ledger_slope(led):.4f} (pi = {math.pi:.4f})")
