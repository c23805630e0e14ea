import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glvortex.grid import (Domain, GLParams, VectorField, coulomb_project, curl, divergence,
                           free_energy, full_energy, gauge_transform, link_gradient,
                           perp_gradient_plaquette, vorticity)
from glvortex.verify import random_smooth_configuration


def test_domain_counts():
    d = Domain.unit_disk(16)
    assert d.shape2 == (33, 33)
    assert d.h == pytest.approx(1 / 16)
    # discrete area approaches pi
    assert Domain.unit_disk(128).discrete_area() == pytest.approx(math.pi, rel=2e-2)


def test_domain_rejects_fractional_cells():
    with pytest.raises(ValueError):
        Domain.rectangle(1.03, 1.0, 10)
    with pytest.raises(ValueError):
        Domain("ellipse")


def test_curl_of_gradient_vanishes(disk32, rng):
    phi = rng.standard_normal(disk32.shape2)
    c = curl(link_gradient(phi, disk32), disk32)
    assert np.max(np.abs(c)) < 1e-10


def test_curl_of_perp_gradient_is_laplacian():
    d = Domain.rectangle(2.0, 2.0, 8)
    nx, ny = d.cells
    psi = np.zeros((nx, ny))
    psi[5, 7] = 1.0
    c = curl(perp_gradient_plaquette(psi, d), d)
    h2 = d.h ** 2
    assert c[5, 7] == pytest.approx(-4 / h2)
    assert c[4, 7] == pytest.approx(1 / h2)
    assert c[5, 8] == pytest.approx(1 / h2)


def test_uniform_state_energy(disk32):
    # u = 1, A = 0: only the magnetic term survives, 1/2 h_ex^2 per plaquette area
    u = np.ones(disk32.shape2, complex)
    A = VectorField.zeros(disk32)
    p = GLParams(0.1, 3.0)
    expect = 0.5 * 9.0 * disk32.plaquette_mask.sum() * disk32.h ** 2
    assert full_energy(u, A, disk32, p) == pytest.approx(expect, rel=1e-14)
    assert free_energy(u, A, disk32, 0.1) == 0.0


def test_coulomb_projection_is_divergence_free(disk32, rng):
    _, A, _ = random_smooth_configuration(disk32, rng)
    B, psi = coulomb_project(A, disk32, return_potential=True)
    assert np.max(np.abs(divergence(B, disk32))) < 1e-8 * (1 + np.max(np.abs(divergence(A, disk32))))
    assert np.allclose(curl(B, disk32), curl(A, disk32), atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), amp=st.floats(0.1, 20.0))
def test_gauge_invariance_property(seed, amp):
    d = Domain.unit_disk(12)
    r = np.random.default_rng(seed)
    u, A, _ = random_smooth_configuration(d, r)
    phi = amp * r.standard_normal(d.shape2)
    p = GLParams(0.2, 2.0)
    u2, A2 = gauge_transform(u, A, phi, d)
    G0, G1 = full_energy(u, A, d, p), full_energy(u2, A2, d, p)
    assert abs(G1 - G0) <= 1e-10 * (1 + abs(G0))
    m0, _ = vorticity(u, A, d)
    m1, _ = vorticity(u2, A2, d)
    assert np.allclose(m0, m1, atol=1e-8 * (1 + np.abs(m0).max()))
