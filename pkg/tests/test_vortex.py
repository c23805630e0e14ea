import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glvortex.grid import Domain, GLParams, VectorField
from glvortex.elliptic import solve_green, solve_ustar, uniform_disk_masses
from glvortex.minimizer import plant_configuration
from glvortex.vortex import (Ball, BallCollection, DegreeError, assemble_X, blowup_measure,
                             degree, degree_profile, enclosing_ball, find_zeros, grow_and_merge,
                             initial_balls, ledger_slope, plaquette_winding)


def test_zeros_and_windings(disk64):
    pts = [(0.31, 0.12), (-0.2, -0.33), (0.05, 0.4)]
    u, _ = plant_configuration(disk64, pts, [1, -1, 2], GLParams(0.05))
    z = find_zeros(u, disk64)
    assert sum(w for *_, w in z) == 2
    for (x, y), d in zip(pts, [1, -1, 2]):
        near = [w for zx, zy, w in z if math.hypot(zx - x, zy - y) < 2 * disk64.h]
        assert sum(near) == d


def test_zero_on_node_is_detected():
    d = Domain.unit_disk(16)
    X, Y = d.XY
    u = (X + 1j * Y).astype(complex)
    assert plaquette_winding(u, d).sum() == 1


def test_degree_on_circles(disk64):
    u, _ = plant_configuration(disk64, [(0.1, 0.0)], [-2], GLParams(0.05))
    for r in (0.2, 0.4, 0.6):
        res = degree(u, disk64, (0.1, 0.0), r)
        assert res.degree == -2 and res.residue < 1e-6
    assert degree(u, disk64, (-0.5, 0.0), 0.2).degree == 0
    with pytest.raises(DegreeError):
        degree(u, disk64, (0.1, 0.0), 0.003)


def test_ball_construction_invariants(disk128):
    params = GLParams(0.02)
    pts = [(0.3, 0.0), (-0.3, 0.05), (0.0, -0.4)]
    u, A = plant_configuration(disk128, pts, [1, 1, -1], params)
    balls = initial_balls(u, disk128, params, guard=False)
    assert balls.is_disjoint()
    assert sorted(b.degree for b in balls.balls) == [-1, 1, 1]
    X, Y = disk128.XY
    bad = (disk128.node_mask & (disk128.signed_distance(X, Y) > params.epsilon)
           & (np.abs(np.abs(u) - 1) >= params.epsilon ** (params.alpha / 4)))
    assert np.all(balls.union_mask(X, Y)[bad])
    grown, ledger = grow_and_merge(balls, 0.5, u, A, disk128, params)
    assert grown.total_radius == pytest.approx(0.5, abs=1e-14)
    assert grown.is_disjoint()
    assert grown.total_degree == 1
    assert all(r.t_out > r.t_in for r in ledger)


def test_ledger_slope_isolated_vortex(disk128):
    params = GLParams(0.02)
    u, A = plant_configuration(disk128, [(0.013, 0.007)], [1], params)
    balls = initial_balls(u, disk128, params, guard=False)
    _, ledger = grow_and_merge(balls, 0.5, u, A, disk128, params)
    assert ledger_slope(ledger) == pytest.approx(math.pi, rel=5e-2)


def test_initial_balls_guard_warns(disk32):
    params = GLParams(0.1)
    u = np.full(disk32.shape2, 0.1, complex)
    with pytest.warns(RuntimeWarning):
        with pytest.raises(ValueError):
            initial_balls(u, disk32, params)


def test_ball_json_round_trip(tmp_path):
    bc = BallCollection([Ball((0.1, 0.2), 0.05, 1, 0), Ball((-0.3, 0.0), 0.1, -1, 1, True)], "x")
    bc.to_json(tmp_path / "b.json")
    import json
    back = BallCollection.from_dict(json.loads((tmp_path / "b.json").read_text()))
    assert back.to_dict() == bc.to_dict()


@settings(max_examples=100, deadline=None)
@given(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 1)),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 1)))
def test_enclosing_ball_contains_both(a, b):
    b1, b2 = Ball(a[:2], a[2]), Ball(b[:2], b[2])
    c, r = enclosing_ball(b1, b2)
    for bb in (b1, b2):
        assert math.hypot(bb.center[0] - c[0], bb.center[1] - c[1]) + bb.radius <= r * (1 + 1e-9) + 1e-12
    assert r <= 0.5 * (math.hypot(a[0] - b[0], a[1] - b[1]) + a[2] + b[2]) + max(a[2], b[2]) + 1e-12


def test_degree_profile_and_blowup():
    balls = BallCollection([Ball((0.3, 0.0), 0.02, 1, 0), Ball((0.0, -0.5), 0.03, 1, 1),
                            Ball((0.05, 0.0), 0.01, 1, 2)])
    prof = degree_profile(balls, (0.0, 0.0), K=1.0, delta=0.8, h_ex=30.0)
    assert prof.n == 3
    assert prof.D_at(np.array([0.2, 0.4, 0.7])).tolist() == [1, 2, 3]
    assert prof.T_measure == pytest.approx(0.32 - prof.ell + 0.06)
    with pytest.raises(ValueError):
        degree_profile(BallCollection([Ball((0, 0), 0.1, 0)]), (0, 0), 1.0, 0.5, 10.0)
    pts, w = blowup_measure(balls, (0.0, 0.0), prof.ell, 4.0)
    assert w.sum() == pytest.approx(1.0)


def test_assemble_X_regions(disk64):
    params = GLParams(0.05, 20.0)
    u, _ = plant_configuration(disk64, [(0.0, 0.0)], [1], params)
    balls = initial_balls(u, disk64, params, guard=False)
    prof = degree_profile(balls, (0.0, 0.0), K=1.0, delta=0.6, h_ex=20.0)
    green = solve_green(disk64, (0.0, 0.0))
    sub = Domain.disk(1.0, 16)
    ust = solve_ustar(1.0, uniform_disk_masses(sub, 0.5), domain=sub)
    X = assemble_X(u, disk64, balls, prof, green, ust, params)
    assert X.layout == "node"
    # annulus: (1/n) D(t) tau / t with D = 1
    Xg, Yg = disk64.XY
    i, j = np.argmin(np.abs(disk64.x - 0.5)), np.argmin(np.abs(disk64.y - 0.0))
    assert X.y[i, j] == pytest.approx(1 / 0.5, rel=1e-9)
    with pytest.raises(ValueError, match="annulus"):
        assemble_X(u, disk64, balls, None, green, ust, params)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_total_winding_equals_boundary_degree(seed):
    # link-shared phase differences make plaquette windings telescope exactly
    d = Domain.rectangle(1.0, 0.75, 16)
    r = np.random.default_rng(seed)
    u = r.standard_normal(d.shape2) + 1j * r.standard_normal(d.shape2)
    w = plaquette_winding(u, d)
    assert np.all(np.abs(w - np.round(w)) < 1e-9)
    assert d.plaquette_mask.sum() == 16 * 12
    # over the whole rectangle, the sum equals the winding along its outer edge
    th = np.angle(u)
    wrap = lambda a: (a + np.pi) % (2 * np.pi) - np.pi
    edge = (wrap(np.diff(th[:, 0])).sum() + wrap(np.diff(th[-1, :])).sum()
            - wrap(np.diff(th[:, -1])).sum() - wrap(np.diff(th[0, :])).sum())
    assert w.sum() == pytest.approx(edge / (2 * np.pi), abs=1e-9)
