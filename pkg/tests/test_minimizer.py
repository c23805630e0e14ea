import math

import numpy as np
import pytest
from scipy.integrate import solve_bvp

from glvortex.grid import Domain, GLParams, full_energy
from glvortex.elliptic import meissner_potential, solve_phi
from glvortex.minimizer import (assemble_Z, check_gradient, energy_and_gradient, epsilon_sweep,
                                minimize_G, plant_configuration, radial_profile, seed_points,
                                zero_count)
from glvortex.elliptic import solve_xi0


@pytest.fixture(scope="module")
def profile():
    return radial_profile()


def bvp_profile(R=20.0):
    """Independent collocation solve of the degree-one profile ODE."""
    def rhs(r, y):
        f, g = y
        return np.vstack([g, -g / r + f / r ** 2 - f * (1 - f ** 2)])

    r = np.linspace(1e-4, R, 800)
    guess = np.vstack([r / np.sqrt(r ** 2 + 2), 2 / (r ** 2 + 2) ** 1.5])
    sol = solve_bvp(rhs, lambda a, b: np.array([a[0] - a[1] * 1e-4, b[0] - (1 - 0.5 / R ** 2)]),
                    r, guess, tol=1e-8, max_nodes=100000)
    assert sol.success
    return sol


def test_profile_matches_collocation(profile):
    sol = bvp_profile()
    for x in (0.5, 1.0, 2.0, 5.0):
        assert profile(x) == pytest.approx(float(sol.sol(x)[0]), abs=1e-4)


def test_profile_energy_slope_and_gamma(profile):
    assert profile.slope == pytest.approx(math.pi, rel=1e-2)
    # frozen from collocation with f(R) = 1 plus adaptive quadrature of the energy:
    # E(R) - pi log R = 1.19869 (R = 20), 1.19708 (R = 40), approaching 1.1966 as R^-2
    assert profile.gamma == pytest.approx(1.1966, abs=1e-3)
    assert profile(1e6) == pytest.approx(1.0)
    assert np.all(np.diff(profile.f) >= -1e-12)


def test_energy_gradient_matches_finite_differences(disk32):
    params = GLParams(0.15, 3.0)
    u, A = plant_configuration(disk32, [(0.2, 0.1)], [1], params)
    A = A + meissner_potential(disk32, 3.0)[0] * 0.5
    errs = check_gradient(u, A, disk32, params, n_dirs=6)
    assert max(errs) < 1e-6
    E, _, _ = energy_and_gradient(u, A, disk32, params)
    assert E == pytest.approx(full_energy(u, A, disk32, params), rel=1e-12)


def test_local_minimization_is_monotone_and_keeps_vortex():
    d = Domain.unit_disk(24)
    params = GLParams(0.15, 6.0)
    AM, _ = meissner_potential(d, 6.0)
    u, A = plant_configuration(d, [(0.05, 0.0)], [1], params, A=AM)
    res = minimize_G(u, A, d, params, tol=1e-5, max_iter=2000)
    assert np.all(np.diff(res.energies) <= 1e-12 * abs(res.energies[0]))
    assert zero_count(res.u, d) == (1, 1)
    assert res.converged and res.status == "converged"
    flow = minimize_G(u, A, d, params, method="flow", tol=1e-5, max_iter=300)
    assert flow.energies[-1] < flow.energies[0]


def test_global_restart_reports_restarts():
    d = Domain.unit_disk(12)
    params = GLParams(0.25, 1.0)
    u, A = plant_configuration(d, [], [], params)
    res = minimize_G(u, A, d, params, mode="global_restart", restarts=2, max_iter=200)
    assert len(res.restarts) == 3
    assert res.energy == pytest.approx(min(res.restarts))
    with pytest.raises(ValueError):
        minimize_G(u, A, d, params, mode="nope")


def test_plant_rejects_close_points(disk32):
    with pytest.raises(ValueError):
        plant_configuration(disk32, [(0.0, 0.0), (0.05, 0.0)], [1, 1], GLParams(0.1))
    with pytest.raises(ValueError):
        plant_configuration(disk32, [(1.5, 0.0)], [1], GLParams(0.1))


def test_assemble_Z_far_field(disk64):
    params = GLParams(0.05)
    pts = [(0.2, 0.0), (-0.2, 0.1)]
    u, _ = plant_configuration(disk64, pts, [1, 1], params)
    phi = solve_phi(disk64, pts)
    Z = assemble_Z(u, disk64, pts, [1, 1], 4.0, phi, params)
    assert Z.layout == "node"
    # outside the cores |Z| = |u| |grad Phi|
    i, j = np.argmin(np.abs(disk64.x + 0.5)), np.argmin(np.abs(disk64.y + 0.5))
    g = phi.grad(np.array([[disk64.x[i], disk64.y[j]]]))[0]
    assert math.hypot(abs(Z.x[i, j]), abs(Z.y[i, j])) == pytest.approx(abs(u[i, j]) * np.hypot(*g))
    with pytest.raises(ValueError):
        assemble_Z(u, disk64, [(0.0, 0.0), (0.1, 0.0)], [1, 1], 2.0, phi, params)


def test_seed_points_recipes(disk32):
    xi0 = solve_xi0(disk32)
    pts = seed_points("wn", 3, 20.0, xi0)
    assert pts.shape == (3, 2)
    ring = seed_points("ring", 4, 20.0, xi0)
    assert np.allclose(np.hypot(*(ring - xi0.p).T), 0.5 * math.sqrt(4 / 20.0))
    with pytest.raises(ValueError):
        seed_points("grid", 2, 20.0, xi0)


def test_sweep_records_failures():
    plan = {"runs": [{"epsilon": 0.1, "h_ex": 5.0, "n": 1, "grid_n": 20},
                     {"epsilon": 0.2, "h_ex": 5.0, "n": 1, "grid_n": 24}],
            "tolerances": {"grad": 1e-4, "max_iter": 200}}
    res, recs = epsilon_sweep(plan)
    assert "error" in recs[0] and res[0] is None
    assert recs[1]["zeros"] == 1 and res[1] is not None
