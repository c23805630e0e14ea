"""Vortex detection, winding degrees, the growth-merge ball construction, the annular
degree function D(t) and the comparison field X_eps."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

from .grid import Domain, GLParams, VectorField, covariant_gradient_sq
from .elliptic import bilinear


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


# zeros and degrees --------------------------------------------------------------------

def plaquette_winding(u, domain: Domain) -> np.ndarray:
    """Integer winding of u around each plaquette (0 outside the domain).

    Each link's wrapped phase difference is computed once and shared by its two
    plaquettes, so the windings always sum to the winding along the outer loop, even
    when a zero sits exactly on a node or a link.
    """
    th = np.angle(u)
    dx = _wrap(th[1:, :] - th[:-1, :])
    dy = _wrap(th[:, 1:] - th[:, :-1])
    w = dx[:, :-1] + dy[1:, :] - dx[:, 1:] - dy[:-1, :]
    out = np.zeros(domain.shape2, dtype=int)
    out[:-1, :-1] = np.rint(w / (2 * np.pi)).astype(int)
    return np.where(domain.plaquette_mask, out, 0)


def _bilinear_root(c00, c10, c01, c11):
    """Root of the bilinear interpolant on the unit square (Newton from the center)."""
    s, t = 0.5, 0.5
    for _ in range(30):
        f = (1 - s) * (1 - t) * c00 + s * (1 - t) * c10 + (1 - s) * t * c01 + s * t * c11
        fs = (1 - t) * (c10 - c00) + t * (c11 - c01)
        ft = (1 - s) * (c01 - c00) + s * (c11 - c10)
        J = np.array([[fs.real, ft.real], [fs.imag, ft.imag]])
        try:
            step = np.linalg.solve(J, [f.real, f.imag])
        except np.linalg.LinAlgError:
            break
        s, t = s - step[0], t - step[1]
        if not (-0.5 < s < 1.5 and -0.5 < t < 1.5):
            return 0.5, 0.5
        if abs(step[0]) + abs(step[1]) < 1e-13:
            break
    return float(np.clip(s, 0, 1)), float(np.clip(t, 0, 1))


def find_zeros(u, domain: Domain) -> list[tuple[float, float, int]]:
    """Zeros of u as (x, y, winding) from plaquettes with nonzero winding."""
    w = plaquette_winding(u, domain)
    out = []
    h = domain.h
    for i, j in zip(*np.nonzero(w)):
        s, t = _bilinear_root(u[i, j], u[i + 1, j], u[i, j + 1], u[i + 1, j + 1])
        out.append((float(domain.x[i] + s * h), float(domain.y[j] + t * h), int(w[i, j])))
    return out


@dataclass
class DegreeResult:
    degree: int
    raw: float
    residue: float
    samples: int


class DegreeError(ValueError):
    pass


def degree(u, domain: Domain, center, radius: float, n_samples: int | None = None,
           min_modulus: float = 0.1) -> DegreeResult:
    """Winding number of u on the circle |x - center| = radius."""
    if n_samples is None:
        n_samples = max(64, int(math.ceil(8 * 2 * math.pi * radius / domain.h)))
    ang = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    pts = np.stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1)
    vals = bilinear(u.real, domain, pts) + 1j * bilinear(u.imag, domain, pts)
    mod = np.abs(vals)
    if np.any(mod < min_modulus):
        bad = ang[mod < min_modulus]
        raise DegreeError(f"|u| < {min_modulus} on the arc theta in "
                          f"[{bad.min():.3f}, {bad.max():.3f}] of circle {tuple(center)}, r={radius}")
    th = np.angle(vals)
    raw = float(np.sum(_wrap(np.diff(np.append(th, th[0])))) / (2 * np.pi))
    d = int(round(raw))
    return DegreeResult(d, raw, abs(raw - d), n_samples)


# balls ----------------------------------------------------------------------------------

@dataclass
class Ball:
    center: tuple[float, float]
    radius: float
    degree: int = 0
    id: int = 0
    clipped: bool = False

    def contains(self, X, Y):
        return np.hypot(X - self.center[0], Y - self.center[1]) <= self.radius


@dataclass
class BallCollection:
    balls: list
    phase: str = "initial"

    @property
    def total_radius(self) -> float:
        return float(math.fsum(b.radius for b in self.balls))

    @property
    def n(self) -> int:
        return int(sum(abs(b.degree) for b in self.balls))

    @property
    def total_degree(self) -> int:
        return int(sum(b.degree for b in self.balls))

    def __len__(self):
        return len(self.balls)

    def union_mask(self, X, Y):
        m = np.zeros(np.shape(X), bool)
        for b in self.balls:
            m |= b.contains(X, Y)
        return m

    def is_disjoint(self) -> bool:
        bs = self.balls
        for i in range(len(bs)):
            for j in range(i):
                d = math.hypot(bs[i].center[0] - bs[j].center[0], bs[i].center[1] - bs[j].center[1])
                if d <= bs[i].radius + bs[j].radius:
                    return False
        return True

    def to_dict(self):
        return {"phase": self.phase, "total_radius": self.total_radius, "n": self.n,
                "balls": [{"id": b.id, "center": list(b.center), "radius": b.radius,
                           "degree": b.degree, "clipped": b.clipped} for b in self.balls]}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_dict(cls, d):
        balls = [Ball(tuple(b["center"]), float(b["radius"]), int(b["degree"]), int(b.get("id", k)),
                      bool(b.get("clipped", False))) for k, b in enumerate(d["balls"])]
        return cls(balls, d.get("phase", "initial"))


def enclosing_ball(b1: Ball, b2: Ball) -> tuple[tuple[float, float], float]:
    """Smallest disk containing two disks."""
    c1, c2 = np.array(b1.center), np.array(b2.center)
    d = float(np.hypot(*(c2 - c1)))
    if d + b2.radius <= b1.radius:
        return b1.center, b1.radius
    if d + b1.radius <= b2.radius:
        return b2.center, b2.radius
    R = 0.5 * (d + b1.radius + b2.radius)
    c = c1 + (R - b1.radius) * (c2 - c1) / d
    return (float(c[0]), float(c[1])), float(R)


class _DegreeContext:
    def __init__(self, u, domain, epsilon):
        self.u, self.domain, self.epsilon = u, domain, epsilon

    def inside_omega_eps(self, b: Ball) -> bool:
        return float(self.domain.signed_distance(*b.center)) - b.radius > self.epsilon

    def degree_of(self, b: Ball, fallback: int) -> int:
        if not self.inside_omega_eps(b):
            b.clipped = True
            return 0
        try:
            return degree(self.u, self.domain, b.center, b.radius).degree
        except DegreeError:
            return fallback


def _merge_all(balls: list, next_id: int, ctx: _DegreeContext | None):
    """Merge touching balls, closest pair first (ties: lowest indices)."""
    merges = []
    while True:
        best = None
        for i in range(len(balls)):
            for j in range(i + 1, len(balls)):
                bi, bj = balls[i], balls[j]
                gap = math.hypot(bi.center[0] - bj.center[0], bi.center[1] - bj.center[1]) \
                    - bi.radius - bj.radius
                if gap <= 0 and (best is None or gap < best[0]):
                    best = (gap, i, j)
        if best is None:
            return balls, next_id, merges
        _, i, j = best
        c, r = enclosing_ball(balls[i], balls[j])
        nb = Ball(c, r, balls[i].degree + balls[j].degree, next_id)
        if ctx is not None:
            nb.degree = ctx.degree_of(nb, nb.degree)
        merges.append((balls[i].id, balls[j].id, next_id))
        next_id += 1
        balls = [b for k, b in enumerate(balls) if k not in (i, j)] + [nb]


def initial_balls(u, domain: Domain, params: GLParams, A: VectorField | None = None,
                  guard: bool = True) -> BallCollection:
    """Disjoint disks covering {||u| - 1| >= eps^(alpha/4)} inside Omega_eps."""
    eps, alpha = params.epsilon, params.alpha
    X, Y = domain.XY
    h = domain.h
    if guard:
        F_mod = _modulus_energy(u, domain, eps)
        if F_mod > eps ** (alpha - 1):
            warnings.warn(f"F_eps(|u|) = {F_mod:.3g} exceeds eps^(alpha-1) = "
                          f"{eps ** (alpha - 1):.3g}", RuntimeWarning, stacklevel=2)
    omega_eps = domain.node_mask & (domain.signed_distance(X, Y) > eps)
    if not omega_eps.any():
        raise ValueError("Omega_eps is empty at this epsilon")
    bad = omega_eps & (np.abs(np.abs(u) - 1) >= eps ** (alpha / 4))
    if bad.any() and bad.sum() == omega_eps.sum():
        raise ValueError("bad set fills all of Omega_eps")
    lab, nlab = ndimage.label(bad, structure=np.ones((3, 3)))
    balls = []
    for k in range(1, nlab + 1):
        sel = lab == k
        px, py = X[sel], Y[sel]
        c = (float(px.mean()), float(py.mean()))
        r = float(np.max(np.hypot(px - c[0], py - c[1]))) + 0.5 * h
        balls.append(Ball(c, r, 0, k - 1))
    ctx = _DegreeContext(u, domain, eps)
    for b in balls:
        b.degree = ctx.degree_of(b, 0)
    balls, _, _ = _merge_all(balls, len(balls), ctx)
    return BallCollection(balls, "initial")


def _modulus_energy(u, domain: Domain, eps: float) -> float:
    from .grid import free_energy
    return free_energy(np.abs(u).astype(complex), VectorField.zeros(domain), domain, eps)


@dataclass
class LedgerRow:
    ball_id: int
    t_in: float
    t_out: float
    energy: float
    degree: int


def grow_and_merge(balls: BallCollection, target: float, u, A: VectorField, domain: Domain,
                   params: GLParams, step: float = 1.02, phase: str | None = None):
    """Grow all radii by a common factor, merging touching balls, until sum r = target.

    Returns the final collection and the ledger of annular energies
    1/2 int |grad_A u|^2 + (1 - |u|^2)^2/(4 eps^2) swept by each ball.
    """
    if not balls.balls:
        raise ValueError("no balls to grow")
    if target <= balls.total_radius:
        raise ValueError("target must exceed the current total radius")
    eps = params.epsilon
    X, Y = domain.XY
    dens = 0.5 * covariant_gradient_sq(u, A, domain) + np.where(
        domain.node_mask, (1 - np.abs(u) ** 2) ** 2, 0.0) / (4 * eps ** 2)
    dens = np.where(domain.node_mask, dens, 0.0)
    h2 = domain.h ** 2
    ctx = _DegreeContext(u, domain, eps)
    cur = [Ball(b.center, b.radius, b.degree, b.id, b.clipped) for b in balls.balls]
    next_id = max(b.id for b in cur) + 1
    ledger: list[LedgerRow] = []
    merges = []
    for _ in range(100000):
        total = math.fsum(b.radius for b in cur)
        if total >= target * (1 - 1e-15):
            break
        f = min(step, target / total)
        for b in cur:
            r0, r1 = b.radius, b.radius * f
            x0, x1 = _window(domain, b.center, r1)
            sub = np.hypot(X[x0, x1] - b.center[0], Y[x0, x1] - b.center[1])
            ann = (sub > r0) & (sub <= r1)
            e = float(np.sum(dens[x0, x1][ann])) * h2
            ledger.append(LedgerRow(b.id, r0, r1, e, b.degree))
            b.radius = r1
        for b in cur:
            if not ctx.inside_omega_eps(b):
                b.degree, b.clipped = 0, True
        cur, next_id, mg = _merge_all(cur, next_id, ctx)
        merges += mg
    # absorb rounding so that the radii sum to the target
    total = math.fsum(b.radius for b in cur)
    cur[-1].radius += target - total
    return BallCollection(cur, phase or f"large:{target:g}"), ledger


def _window(domain: Domain, c, r):
    x0, y0 = domain.origin
    h = domain.h
    i0 = max(int(math.floor((c[0] - r - x0) / h)) - 1, 0)
    i1 = min(int(math.ceil((c[0] + r - x0) / h)) + 2, domain.shape2[0])
    j0 = max(int(math.floor((c[1] - r - y0) / h)) - 1, 0)
    j1 = min(int(math.ceil((c[1] + r - y0) / h)) + 2, domain.shape2[1])
    return slice(i0, i1), slice(j0, j1)


def ledger_to_csv(ledger, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ball_id", "t_in", "t_out", "energy"])
        for row in ledger:
            w.writerow([row.ball_id, repr(row.t_in), repr(row.t_out), repr(row.energy)])


def ledger_slope(ledger, ball_id: int | None = None):
    """Least-squares slope of cumulative ledger energy against log(t_out)."""
    rows = [r for r in ledger if ball_id is None or r.ball_id == ball_id]
    if len(rows) < 3:
        return math.nan
    t = np.log([r.t_out for r in rows])
    e = np.cumsum([r.energy for r in rows])
    return float(np.polyfit(t, e, 1)[0])


# degree profile ----------------------------------------------------------------------------

@dataclass
class DegreeProfile:
    t: np.ndarray
    D: np.ndarray
    T: list
    K: float
    delta: float
    ell: float
    n: int
    p: tuple
    centers: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)

    @property
    def T_measure(self) -> float:
        return float(sum(b - a for a, b in self.T))

    def D_at(self, t):
        t = np.asarray(t, float)
        dist = np.hypot(self.centers[:, 0] - self.p[0], self.centers[:, 1] - self.p[1])
        return np.sum(np.where(dist[None, :] <= t.reshape(-1, 1), self.degrees[None, :], 0),
                      axis=1).reshape(t.shape)

    def in_T(self, t):
        t = np.asarray(t, float)
        out = np.zeros(t.shape, bool)
        for a, b in self.T:
            out |= (t > a) & (t < b)
        return out


def degree_profile(balls: BallCollection, p, K: float, delta: float, h_ex: float,
                   n: int | None = None, samples: int = 512) -> DegreeProfile:
    """D(t) = sum of degrees of balls centered within distance t of p, on (K ell, delta)."""
    n = balls.n if n is None else n
    if n == 0:
        raise ValueError("n = 0: the scale ell = sqrt(n/h_ex) is undefined")
    ell = math.sqrt(n / h_ex)
    if K * ell >= delta:
        raise ValueError("need K*ell < delta")
    p = (float(p[0]), float(p[1]))
    centers = np.array([b.center for b in balls.balls], float).reshape(-1, 2)
    degs = np.array([b.degree for b in balls.balls], int)
    lo, hi = K * ell, delta
    ivs = []
    for b in balls.balls:
        s = math.hypot(b.center[0] - p[0], b.center[1] - p[1])
        a, c = max(s - b.radius, lo), min(s + b.radius, hi)
        if c > a:
            ivs.append([a, c])
    ivs.sort()
    T = []
    for a, c in ivs:
        if T and a <= T[-1][1]:
            T[-1][1] = max(T[-1][1], c)
        else:
            T.append([a, c])
    t = np.linspace(lo, hi, samples)
    prof = DegreeProfile(t, np.zeros(samples, int), [tuple(x) for x in T], K, delta, ell, n, p,
                         centers, degs)
    prof.D = prof.D_at(t)
    return prof


# the comparison field X_eps ------------------------------------------------------------------

def _f_cap(x):
    return np.where(x <= 1, 1.0, 1.0 / np.maximum(x, 1e-300))


def assemble_X(u, domain: Domain, balls: BallCollection, profile: DegreeProfile, green,
               ustar, params: GLParams, core: float | None = None) -> VectorField:
    """Piecewise comparison field X_eps at nodes (layout 'node').

    * inside the balls: (1/n) sum d tau/|x-b| away from the core (|x-b| >= core) and
      where |u| <= 3/2;
    * annulus K ell <= |x-p| <= delta off the balls: (1/n) D(t) tau_p / t, zero for t in T;
    * |x-p| < K ell off the balls: f(|u|) ell^-1 grad-perp U_*((x-p)/ell);
    * elsewhere: -f(|u|) grad-perp G_p.
    """
    if profile is None:
        raise ValueError("missing degree profile (annulus region)")
    if green is None:
        raise ValueError("missing Green function (exterior region)")
    if ustar is None:
        raise ValueError("missing U_* solution (inner disk region)")
    core = params.epsilon if core is None else core
    X, Y = domain.XY
    n = profile.n
    p = profile.p
    ell, K, delta = profile.ell, profile.K, profile.delta
    modu = np.abs(u)
    fu = _f_cap(modu)
    rp = np.hypot(X - p[0], Y - p[1])
    Xx = np.zeros(domain.shape2)
    Xy = np.zeros(domain.shape2)
    inB = balls.union_mask(X, Y) if balls.balls else np.zeros(domain.shape2, bool)
    for b in balls.balls:
        m = b.contains(X, Y)
        dx, dy = X[m] - b.center[0], Y[m] - b.center[1]
        r = np.hypot(dx, dy)
        ok = (r >= core) & (modu[m] <= 1.5)
        amp = np.where(ok, b.degree / (n * np.maximum(r, 1e-150) ** 2), 0.0)
        Xx[m] = -dy * amp
        Xy[m] = dx * amp
    inner = (rp < K * ell) & ~inB
    if inner.any():
        pts = np.stack([(X[inner] - p[0]) / ell, (Y[inner] - p[1]) / ell], axis=1)
        v = ustar.perp_grad(pts) / ell
        Xx[inner] = fu[inner] * v[:, 0]
        Xy[inner] = fu[inner] * v[:, 1]
    ann = (rp >= K * ell) & (rp <= delta) & ~inB
    if ann.any():
        t = rp[ann]
        Dt = profile.D_at(t) * ~profile.in_T(t)
        amp = Dt / (n * t ** 2)
        Xx[ann] = -(Y[ann] - p[1]) * amp
        Xy[ann] = (X[ann] - p[0]) * amp
    outer = (rp > delta) & ~inB & domain.node_mask
    if outer.any():
        pts = np.stack([X[outer], Y[outer]], axis=1)
        g = green.grad(pts)
        Xx[outer] = -fu[outer] * (-g[:, 1])
        Xy[outer] = -fu[outer] * g[:, 0]
    Xx = np.where(domain.node_mask, Xx, 0.0)
    Xy = np.where(domain.node_mask, Xy, 0.0)
    return VectorField(Xx, Xy, "node")


def blowup_measure(balls: BallCollection, p, ell: float, K: float):
    """Points and weights of (1/n) sum d_i delta_{(b_i - p)/ell} restricted to B(0, K)."""
    pts, w = [], []
    for b in balls.balls:
        q = ((b.center[0] - p[0]) / ell, (b.center[1] - p[1]) / ell)
        if b.degree > 0 and math.hypot(*q) < K:
            pts.append(q)
            w.append(float(b.degree))
    if not pts:
        return np.zeros((0, 2)), np.zeros(0)
    w = np.array(w)
    return np.array(pts), w / w.sum()
