"""Decreasing rearrangements and Lorentz / Lorentz-Zygmund norms of grid fields.

Norm conventions (documented constants):

* ``lorentz_quasinorm(p, q)`` is ``(int_0^inf (t^{1/p} f*(t))^q dt/t)^{1/q}``.
* ``weak_l2_setsup_norm`` is ``sup_E |E|^{-1/2} int_E |f|``; for every step profile
  ``1 <= setsup / quasinorm(2, inf) <= 2``.
* The norm on L^{2,1} that is exactly dual to the set-sup L^{2,inf} norm equals
  ``quasinorm(2, 1) / 2`` (layer-cake argument); ``x_norm(..., convention="kothe")``
  returns that normalization, ``convention="quasi"`` the quasinorm itself.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .grid import Domain

# first zero of J_0, used in the Faber-Krahn Poincare constant
_J01 = 2.404825557695773


@dataclass(frozen=True)
class RearrangementProfile:
    """Step function f* : value ``values[k]`` on ``[t[k-1], t[k])``."""

    values: np.ndarray
    weights: np.ndarray
    t: np.ndarray = field(repr=False)
    cumint: np.ndarray = field(repr=False)

    @classmethod
    def from_steps(cls, values, weights) -> RearrangementProfile:
        values = np.asarray(values, float)
        weights = np.broadcast_to(np.asarray(weights, float), values.shape).copy()
        if values.size and np.any(np.diff(values) > 0):
            raise ValueError("step values must be non-increasing")
        if np.any(values < 0) or np.any(weights < 0):
            raise ValueError("values and weights must be nonnegative")
        with np.errstate(invalid="ignore"):
            t = np.cumsum(weights)
            cumint = np.cumsum(values * weights)
        return cls(values, weights, t, cumint)

    @property
    def measure(self) -> float:
        return float(self.t[-1]) if self.t.size else 0.0

    @property
    def integral(self) -> float:
        return float(self.cumint[-1]) if self.cumint.size else 0.0

    @property
    def t_left(self) -> np.ndarray:
        return np.concatenate(([0.0], self.t[:-1]))

    def __call__(self, t):
        """Right-continuous evaluation of f*(t)."""
        t = np.asarray(t, float)
        k = np.searchsorted(self.t, t, side="right")
        vals = np.append(self.values, 0.0)
        return vals[np.minimum(k, self.values.size)]

    def distribution(self, s):
        """lambda_f(s) = |{|f| > s}|."""
        s = np.asarray(s, float)
        k = np.searchsorted(-self.values, -s, side="left")
        t = np.concatenate(([0.0], self.t))
        return t[k]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_left", "t_right", "f_star"])
            for a, b, v in zip(self.t_left, self.t, self.values):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(v))])


def rearrange(magnitude, region=None, cell_area: float = 1.0) -> RearrangementProfile:
    """Decreasing rearrangement of |magnitude| over the cells selected by ``region``.

    Each cell contributes a step of width ``cell_area`` (a scalar or per-cell array).
    """
    mag = np.abs(np.asarray(magnitude, float))
    w = np.broadcast_to(np.asarray(cell_area, float), mag.shape)
    if region is not None:
        region = np.asarray(region, bool)
        mag, w = mag[region], w[region]
    mag, w = mag.ravel(), w.ravel()
    if mag.size == 0:
        raise ValueError("empty region")
    order = np.argsort(-mag, kind="stable")
    return RearrangementProfile.from_steps(mag[order], w[order])


def synthesize_profile(fstar, t_max: float, n_steps: int = 4000, t_min: float = 1e-10,
                       tail: bool = False) -> RearrangementProfile:
    """Step approximation of a given decreasing f* on geometric t-steps.

    Each step carries f* at its geometric midpoint; the initial segment [0, t_min]
    carries f*(t_min).  With ``tail=True`` a final step of infinite width with value
    f*(t_max) is appended.
    """
    edges = np.geomspace(t_min, t_max, n_steps + 1)
    mids = np.sqrt(edges[:-1] * edges[1:])
    vals = [float(fstar(t_min))] + [float(v) for v in fstar(mids)]
    widths = [t_min] + list(np.diff(edges))
    if tail:
        vals.append(float(fstar(t_max)))
        widths.append(np.inf)
    return RearrangementProfile.from_steps(np.array(vals), np.array(widths))


def _pow_increment(t0, w, a):
    """(t0 + w)^a - t0^a without cancellation."""
    t0 = np.asarray(t0, float)
    w = np.asarray(w, float)
    out = np.empty(np.broadcast(t0, w).shape)
    zero = t0 <= 0
    out[zero] = w[zero] ** a
    nz = ~zero
    out[nz] = t0[nz] ** a * np.expm1(a * np.log1p(w[nz] / t0[nz]))
    return out


def _as_profile(obj, region=None, cell_area=1.0) -> RearrangementProfile:
    if isinstance(obj, RearrangementProfile):
        return obj
    return rearrange(obj, region, cell_area)


def lorentz_quasinorm(profile: RearrangementProfile, p: float, q: float) -> float:
    """Exact step quadrature of the L^{p,q} quasinorm; +inf when it diverges."""
    if not (1 <= p <= np.inf and 1 <= q <= np.inf):
        raise ValueError("need 1 <= p, q <= inf")
    v, w = profile.values, profile.weights
    pos = v > 0
    if not pos.any():
        return 0.0
    v, w = v[pos], w[pos]
    t_right = np.cumsum(w)
    t_left = np.concatenate(([0.0], t_right[:-1]))
    if np.isinf(t_right[-1]) and np.isfinite(p):
        return math.inf
    if np.isinf(q):
        if np.isinf(p):
            return float(v[0])
        return float(np.max(t_right ** (1.0 / p) * v))
    if np.isinf(p):
        return math.inf
    a = q / p
    inc = _pow_increment(t_left, w, a)
    return float((np.sum(v ** q * inc) / a) ** (1.0 / q))


def weak_l2_setsup_norm(field, region=None, cell_area: float = 1.0) -> float:
    """sup_E |E|^{-1/2} int_E |f|; the sup is attained on superlevel sets."""
    prof = _as_profile(field, region, cell_area)
    if prof.values.size == 0 or prof.values[0] == 0:
        return 0.0
    return float(np.max(prof.cumint / np.sqrt(prof.t)))


def lp_norm(field, p: float, region=None, cell_area: float = 1.0) -> float:
    """Direct L^p norm of a grid field."""
    f = np.abs(np.asarray(field, float))
    w = np.broadcast_to(np.asarray(cell_area, float), f.shape)
    if region is not None:
        region = np.asarray(region, bool)
        f, w = f[region], w[region]
    if np.isinf(p):
        return float(f.max())
    return float(np.sum(f ** p * w) ** (1.0 / p))


# Lorentz-Zygmund ----------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _lz_weight(t, alpha):
    return np.log(np.e + 1.0 / t) ** alpha


def _lz_step_integrals(t_left, w, p, q, alpha, tol=1e-10):
    """int over [t_left, t_left + w] of t^{q/p - 1} log^{alpha q}(e + 1/t) dt, per step."""
    a = q / p
    t_right = t_left + w
    out = np.empty(t_left.size)
    # substitution s = t^a turns the power into a constant density
    ratio = np.where(t_left > 0, t_right / np.where(t_left > 0, t_left, 1.0), np.inf)
    smooth = ratio < 1.5
    if smooth.any():
        s0 = t_left[smooth] ** a
        half = 0.5 * _pow_increment(t_left[smooth], w[smooth], a)
        mid = s0 + half
        s = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = _lz_weight(s ** (1.0 / a), alpha * q)
        out[smooth] = (half * (vals @ _GL_W)) / a
    for k in np.nonzero(~smooth)[0]:
        lo, hi = t_left[k], t_right[k]
        if np.isinf(hi):
            out[k] = math.inf
            continue
        g = lambda s_: _lz_weight(s_ ** (1.0 / a), alpha * q) / a if s_ > 0 else 0.0
        s_lo = lo ** a
        s_hi = s_lo + _pow_increment(np.array([lo]), np.array([w[k]]), a)[0]
        val, _ = integrate.quad(g, s_lo, s_hi, epsabs=0.0, epsrel=tol, limit=200)
        out[k] = val
    return out


def _lz_sup_on_step(lo, hi, p, alpha):
    """max over t in (lo, hi] of t^{1/p} log^alpha(e + 1/t)."""
    g = lambda t: t ** (1.0 / p) * _lz_weight(t, alpha)
    best = g(hi)
    if alpha > 0 and hi > lo:
        # the log factor can make g non-monotone for positive alpha
        res = optimize.minimize_scalar(lambda t: -g(t), bounds=(max(lo, 1e-300), hi),
                                       method="bounded", options={"xatol": 1e-14 * hi})
        best = max(best, -res.fun)
    return best


def lorentz_zygmund_quasinorm(profile: RearrangementProfile, p: float, q: float,
                              alpha: float) -> float:
    """L^{p,q} log^alpha L quasinorm with weight log^alpha(e + 1/t)."""
    v, w = profile.values, profile.weights
    pos = v > 0
    if not pos.any():
        return 0.0
    v, w = v[pos], w[pos]
    t_right = np.cumsum(w)
    t_left = np.concatenate(([0.0], t_right[:-1]))
    if np.isinf(t_right[-1]):
        return math.inf
    if np.isinf(q):
        if alpha <= 0:
            return float(np.max(v * t_right ** (1.0 / p) * _lz_weight(t_right, alpha)))
        return float(max(vk * _lz_sup_on_step(lo, hi, p, alpha)
                         for vk, lo, hi in zip(v, t_left, t_right)))
    ints = _lz_step_integrals(t_left, w, p, q, alpha)
    return float((np.sum(v ** q * ints)) ** (1.0 / q))


# the space X of functions with gradient in L^{2,1} --------------------------------

def cell_gradient(f, domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the bilinear interpolant at plaquette centers (zero extension)."""
    domain.check_field(f, "f")
    h = domain.h
    f = np.where(domain.node_mask, f, 0.0)
    f00, f10 = f[:-1, :-1], f[1:, :-1]
    f01, f11 = f[:-1, 1:], f[1:, 1:]
    gx = (f10 - f00 + f11 - f01) / (2 * h)
    gy = (f01 - f00 + f11 - f10) / (2 * h)
    return gx, gy


def boundary_trace(f, domain: Domain) -> float:
    """max |f| on domain nodes adjacent to the exterior (or outside the domain)."""
    m = domain.node_mask
    pad = np.pad(m, 1, constant_values=False)
    inner = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:] & m
    edge = ~inner
    vals = np.abs(np.asarray(f, float))[edge]
    return float(vals.max()) if vals.size else 0.0


def x_norm(f, domain: Domain, convention: str = "quasi", check_boundary: bool = True) -> float:
    """||grad f||_{L^{2,1}} of a node function vanishing on the boundary."""
    if check_boundary:
        tr = boundary_trace(f, domain)
        if tr > 1e-8:
            raise ValueError(f"x_norm needs f = 0 on the boundary; trace is {tr:.3e}")
    gx, gy = cell_gradient(f, domain)
    prof = rearrange(np.hypot(gx, gy), cell_area=domain.h ** 2)
    val = lorentz_quasinorm(prof, 2, 1)
    return _convention_scale(val, convention)


def _convention_scale(val, convention):
    if convention == "quasi":
        return val
    if convention == "kothe":
        return 0.5 * val
    raise ValueError(f"unknown convention {convention!r}")


# test functions for the dual estimate ---------------------------------------------

def cone(X, Y, center, radius):
    r = np.hypot(X - center[0], Y - center[1])
    return np.clip(1.0 - r / radius, 0.0, None)


def log_bump(X, Y, center, radius, core):
    """Mollified Green bump: 1 on B(core), log(radius/r)/log(radius/core) outside."""
    r = np.hypot(X - center[0], Y - center[1])
    val = np.log(radius / np.maximum(r, core)) / np.log(radius / core)
    return np.clip(val, 0.0, 1.0)


@dataclass
class DualEstimate:
    lower: float
    upper: float | None
    convention: str
    best_test: dict = field(default_factory=dict)
    candidates: int = 0

    def to_dict(self):
        return {"lower": self.lower, "upper": self.upper, "convention": self.convention,
                "best_test": self.best_test, "candidates": self.candidates}


class _Distribution:
    """Signed point masses and/or a node density on a domain."""

    def __init__(self, domain, points=None, masses=None, density=None):
        self.domain = domain
        self.points = np.zeros((0, 2)) if points is None else np.atleast_2d(np.asarray(points, float))
        self.masses = np.zeros(0) if masses is None else np.asarray(masses, float).ravel()
        if self.points.shape[0] != self.masses.size:
            raise ValueError("points and masses differ in length")
        self.density = None if density is None else np.asarray(density, float)
        if self.density is not None:
            domain.check_field(self.density, "density")

    def is_zero(self):
        dz = self.density is None or not np.any(self.density)
        return dz and not np.any(self.masses)

    def pair(self, test):
        """<T, f> where test(x, y) evaluates the test function."""
        val = 0.0
        if self.masses.size:
            val += float(np.sum(self.masses * test(self.points[:, 0], self.points[:, 1])))
        if self.density is not None:
            X, Y = self.domain.XY
            f = test(X, Y)
            val += float(np.sum(np.where(self.domain.node_mask, self.density * f, 0.0))) \
                * self.domain.h ** 2
        return val

    def centers(self):
        pts = [tuple(p) for p in self.points]
        if self.density is not None and np.any(self.density):
            X, Y = self.domain.XY
            for sgn in (1, -1):
                d = np.where(self.domain.node_mask, sgn * self.density, 0.0)
                k = np.unravel_index(np.argmax(d), d.shape)
                if d[k] > 0:
                    pts.append((X[k], Y[k]))
        return pts

    def signs(self, centers):
        out = []
        for c in centers:
            out.append(self.pair(lambda x, y, c=c: cone(x, y, c, 4 * self.domain.h)))
        return np.sign(out)


def _perp_potential_magnitude(dist: _Distribution, domain: Domain):
    """|V| at plaquette centers for a field V with curl V = T (up to sign)."""
    Xc, Yc = domain.plaquette_centers
    Xc, Yc = Xc[:-1, :-1], Yc[:-1, :-1]
    vx = np.zeros_like(Xc)
    vy = np.zeros_like(Xc)
    for (px, py), m in zip(dist.points, dist.masses):
        dx, dy = Xc - px, Yc - py
        r2 = dx ** 2 + dy ** 2
        vx += m * dx / (2 * np.pi * r2)
        vy += m * dy / (2 * np.pi * r2)
    if dist.density is not None and np.any(dist.density):
        from .elliptic import solve_dirichlet
        psi = solve_dirichlet(domain, rhs=-dist.density, kappa=0.0)
        gx, gy = cell_gradient(psi, domain)
        vx += gx
        vy += gy
    return np.hypot(vx, vy)


def _cell_mask(domain: Domain):
    """Plaquettes whose center lies inside the domain."""
    Xc, Yc = domain.plaquette_centers
    return domain.contains(Xc[:-1, :-1], Yc[:-1, :-1])


def x_dual_estimate(domain: Domain, points=None, masses=None, density=None,
                    convention: str = "quasi", decomposition: str | None = "auto",
                    n_radii: int = 8, ascent_iters: int = 60) -> DualEstimate:
    """Two-sided estimate of ||T||_{X*} for T = sum m_i delta_{x_i} + density.

    Lower bound: best ratio <T,f>/||f||_X over cones, signed multi-cones and
    mollified Green bumps, followed by a Nelder-Mead ascent on the best candidate.
    Upper bound: with T = curl V (V built from the Newtonian kernel, or from a
    Dirichlet Poisson solve for densities) |<T,f>| <= C ||V||_{2,inf} ||f||_X with
    C = 1 for the (quasinorm, quasinorm) pair and for the (set-sup, kothe) pair.
    ``decomposition=None`` reports the upper bound as unknown.
    """
    dist = _Distribution(domain, points, masses, density)
    if dist.is_zero():
        return DualEstimate(0.0, 0.0, convention)
    X, Y = domain.XY
    h = domain.h
    inner = domain.interior_mask

    def ratio(make):
        f = np.where(inner, make(X, Y), 0.0)
        nrm = x_norm(f, domain, convention, check_boundary=False)
        if nrm <= 0:
            return -math.inf
        return abs(dist.pair(make)) / nrm

    centers = dist.centers()
    if not centers:
        centers = [tuple(domain.center)]
    cand = []
    dmax = [float(domain.signed_distance(*c)) - 2 * h for c in centers]
    for c, dm in zip(centers, dmax):
        if dm <= 4 * h:
            continue
        for rho in np.geomspace(4 * h, dm, n_radii):
            cand.append(("cone", (c,), float(rho)))
            cand.append(("bump", (c,), float(rho)))
    if len(centers) > 1:
        cs = np.array(centers)
        sep = min(np.hypot(*(cs[i] - cs[j])) for i in range(len(cs)) for j in range(i))
        top = min(min(dmax), 0.5 * sep - h)
        if top > 4 * h:
            for rho in np.geomspace(4 * h, top, n_radii):
                cand.append(("multicone", tuple(centers), float(rho)))
    signs = dist.signs(centers) if len(centers) > 1 else np.ones(1)

    def build(kind, cs, rho):
        if kind == "cone":
            return lambda x, y: cone(x, y, cs[0], rho)
        if kind == "bump":
            return lambda x, y: log_bump(x, y, cs[0], rho, max(rho / 8, h))
        return lambda x, y: sum(s * cone(x, y, c, rho) for s, c in zip(signs, cs))

    best = (-math.inf, None)
    for k, (kind, cs, rho) in enumerate(cand):
        r = ratio(build(kind, cs, rho))
        if r > best[0]:
            best = (r, k)
    lower = max(best[0], 0.0)
    info = {}
    if best[1] is not None:
        kind, cs, rho = cand[best[1]]
        info = {"kind": kind, "centers": [list(map(float, c)) for c in cs], "radius": rho}
        x0 = np.concatenate([np.ravel(cs), [math.log(rho)]])
        ncent = len(cs)

        def neg(z):
            cz = [tuple(z[2 * i:2 * i + 2]) for i in range(ncent)]
            rz = math.exp(z[-1])
            if any(domain.signed_distance(*c) - rz < 2 * h for c in cz) or rz < 3 * h:
                return 0.0
            if kind == "multicone" and ncent > 1:
                cs_ = np.array(cz)
                sep_ = min(np.hypot(*(cs_[i] - cs_[j])) for i in range(ncent) for j in range(i))
                if rz > 0.5 * sep_:
                    return 0.0
            return -ratio(build(kind, cz, rz))

        res = optimize.minimize(neg, x0, method="Nelder-Mead",
                                options={"maxfev": ascent_iters, "xatol": h / 4, "fatol": 1e-6,
                                         "initial_simplex": _simplex(x0, h)})
        if -res.fun > lower:
            lower = float(-res.fun)
            info = {"kind": kind, "radius": float(math.exp(res.x[-1])),
                    "centers": [list(map(float, res.x[2 * i:2 * i + 2])) for i in range(ncent)]}
    upper = None
    if decomposition is not None:
        vmag = _perp_potential_magnitude(dist, domain)
        cm = _cell_mask(domain)
        if convention == "quasi":
            upper = lorentz_quasinorm(rearrange(vmag, cm, h * h), 2, np.inf)
        else:
            upper = weak_l2_setsup_norm(vmag, cm, h * h)
    return DualEstimate(float(lower), None if upper is None else float(upper), convention,
                        info, len(cand))


def _simplex(x0, h):
    n = x0.size
    s = [x0]
    for i in range(n):
        e = x0.copy()
        e[i] += 2 * h if i < n - 1 else 0.1
        s.append(e)
    return np.array(s)


def poincare_constant(domain: Domain) -> float:
    """Faber-Krahn bound on the Dirichlet Poincare constant, sqrt(|Omega|/pi)/j_{0,1}."""
    return math.sqrt(domain.area / math.pi) / _J01


# CLI norm identifiers ----------------------------------------------------------------

def norm_by_name(name: str, field, region=None, cell_area: float = 1.0) -> float:
    """Evaluate one of 'L2', 'L21', 'L2w-quasi', 'L2w-setsup', 'LZ(2,inf,g)'."""
    prof = rearrange(field, region, cell_area)
    key = name.replace(" ", "")
    if key == "L2":
        return lorentz_quasinorm(prof, 2, 2)
    if key == "L21":
        return lorentz_quasinorm(prof, 2, 1)
    if key == "L2w-quasi":
        return lorentz_quasinorm(prof, 2, np.inf)
    if key == "L2w-setsup":
        return weak_l2_setsup_norm(prof)
    if key.startswith("LZ(2,inf,") and key.endswith(")"):
        g = float(key[len("LZ(2,inf,"):-1])
        return lorentz_zygmund_quasinorm(prof, 2, np.inf, g)
    raise ValueError(f"unknown norm identifier {name!r}")


NORM_NAMES = ("L2", "L21", "L2w-quasi", "L2w-setsup", "LZ(2,inf,g)")
