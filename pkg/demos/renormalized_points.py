"""Minimizers of the point-interaction energies: w_n with a quadratic confinement and R
on the unit disk."""

import numpy as np

from glvortex import Domain, solve_xi0
from glvortex.renormalized import I_energy, disk_cloud, minimize_points

Q = np.eye(2)
for n in range(2, 7):
    cfg = minimize_points("w", n, Q=Q, restarts=12, seed=n)
    radii = np.sort(np.hypot(*cfg.points.T))
    print(f"w_{n}: value {cfg.value:9.5f}  radii {np.round(radii, 4).tolist()}")

dom = Domain.unit_disk(48)
xi0 = solve_xi0(dom)
for n in (1, 2, 3):
    cfg = minimize_points("R", n, h_ex=30.0, xi0=xi0, domain=dom, restarts=4, seed=n)
    print(f"R_{n} (h_ex = 30): value {cfg.value:9.4f}  points {np.round(cfg.points, 4).tolist()}")

e = I_energy(disk_cloud(3000))
print(f"log energy of the uniform unit-disk cloud: {e.value:.5f} (pi/4 = {np.pi / 4:.5f})")
