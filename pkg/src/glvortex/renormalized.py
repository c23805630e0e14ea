"""Leading-order energy f_eps(n), the renormalized energies R_{n,h_ex} and w_n, the
Coulomb-gas energy I(mu), and multistart minimization over point configurations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .grid import Domain, GLParams


@dataclass
class PointConfiguration:
    points: np.ndarray
    value: float
    weights: np.ndarray | None = None
    restarts: list = field(default_factory=list)
    seed: int = 0
    kind: str = "w"

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, float)).reshape(-1, 2)
        if self.weights is None:
            self.weights = np.ones(len(self.points))

    @property
    def n(self) -> int:
        return len(self.points)

    def min_separation(self) -> float:
        if self.n < 2:
            return math.inf
        d = self.points[:, None, :] - self.points[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        return float(r[~np.eye(self.n, dtype=bool)].min())

    def to_dict(self):
        return {"kind": self.kind, "points": self.points.tolist(), "value": self.value,
                "weights": np.asarray(self.weights).tolist(), "restarts": list(self.restarts),
                "seed": self.seed}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


@dataclass
class DiscreteMeasure:
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, float)).reshape(-1, 2)
        self.masses = np.asarray(self.masses, float).ravel()
        if len(self.masses) != len(self.points):
            raise ValueError("one mass per support point")
        if np.any(self.masses < 0):
            raise ValueError("masses must be nonnegative")
        if abs(self.masses.sum() - 1) > 1e-10:
            raise ValueError(f"masses sum to {self.masses.sum()!r}, expected 1")

    @classmethod
    def empirical(cls, points):
        pts = np.atleast_2d(np.asarray(points, float)).reshape(-1, 2)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)))


# f_eps --------------------------------------------------------------------------------

def f_eps(n: int, params: GLParams, xi0, green) -> float:
    """h^2 J_0 + pi n |log eps| + 2 pi n h xi_min + pi n^2 S(p,p) + pi (n^2 - n) log(1/ell)."""
    if n < 1:
        raise ValueError("f_eps needs n >= 1")
    h, eps = params.h_ex, params.epsilon
    if h <= 0:
        raise ValueError("f_eps needs h_ex > 0 (ell = sqrt(n / h_ex))")
    ell = math.sqrt(n / h)
    return (h ** 2 * xi0.J0 + math.pi * n * abs(math.log(eps)) + 2 * math.pi * n * h * xi0.min_value
            + math.pi * n ** 2 * green.S_pp + math.pi * (n ** 2 - n) * math.log(1 / ell))


# pair sums --------------------------------------------------------------------------

def _pair_log(points):
    """sum_{i != j} log|x_i - x_j| and its gradient; +inf (nan gradient) if two coincide."""
    x = np.atleast_2d(np.asarray(points, float))
    d = x[:, None, :] - x[None, :, :]
    r2 = d[..., 0] ** 2 + d[..., 1] ** 2
    off = ~np.eye(len(x), dtype=bool)
    if np.any(r2[off] == 0):
        return -math.inf, np.full(x.shape, np.nan)
    val = 0.5 * float(np.sum(np.log(r2[off])))
    inv = np.where(off, 1.0 / np.where(off, r2, 1.0), 0.0)
    grad = 2 * np.sum(d * inv[..., None], axis=1)
    return val, grad


def w_energy(points, Q, with_grad: bool = False):
    """w_n = -pi sum_{i!=j} log|x_i - x_j| + pi n sum_i x_i^T Q x_i."""
    x = np.atleast_2d(np.asarray(points, float)).reshape(-1, 2)
    Q = np.asarray(Q, float)
    n = len(x)
    lg, glg = _pair_log(x)
    if lg == -math.inf:
        return (math.inf, np.full(x.shape, np.nan)) if with_grad else math.inf
    quad = np.einsum("ij,jk,ik->i", x, Q, x)
    val = -math.pi * lg + math.pi * n * float(quad.sum())
    if not with_grad:
        return val
    grad = -math.pi * glg + math.pi * n * x @ (Q + Q.T)
    return val, grad


class RenormalizedR:
    """R_{n,h_ex} on a domain, with one regular-part solve per pole."""

    def __init__(self, domain: Domain, h_ex: float, xi0=None):
        from .elliptic import solve_xi0
        self.domain = domain
        self.h_ex = float(h_ex)
        self.xi0 = xi0 if xi0 is not None else solve_xi0(domain)
        self._cache: dict = {}

    def green(self, pole):
        from .elliptic import solve_green
        key = (float(pole[0]), float(pole[1]))
        g = self._cache.get(key)
        if g is None:
            if len(self._cache) > 256:
                self._cache.clear()
            g = solve_green(self.domain, np.array(key))
            self._cache[key] = g
        return g

    def __call__(self, points, with_grad: bool = False):
        x = np.atleast_2d(np.asarray(points, float)).reshape(-1, 2)
        lg, glg = _pair_log(x)
        if lg == -math.inf:
            return (math.inf, np.full(x.shape, np.nan)) if with_grad else math.inf
        greens = [self.green(p) for p in x]
        S = np.array([g.S(x) for g in greens])  # S[j, i] = S(x_i, x_j)
        xi = self.xi0.value_at(x)
        val = (-math.pi * lg + math.pi * float(S.sum()) + 2 * math.pi * self.h_ex * float(xi.sum()))
        if not with_grad:
            return val
        grad = -math.pi * glg + 2 * math.pi * self.h_ex * self.xi0.gradient_at(x)
        for j, g in enumerate(greens):
            grad += math.pi * g.grad_S(x)           # first argument at every x_i
            grad[j] += math.pi * np.sum(g.dS_dpole(x), axis=0)  # pole x_j
        return val, grad


def R_energy(points, h_ex: float, xi0, domain: Domain | None = None, with_grad: bool = False):
    """-pi sum_{i!=j} log|x_i-x_j| + pi sum_{i,j} S(x_i,x_j) + 2 pi h_ex sum xi_0(x_i)."""
    domain = domain or xi0.domain
    return RenormalizedR(domain, h_ex, xi0)(points, with_grad)


# I(mu) -------------------------------------------------------------------------------

def _log_self_energy(points, masses, eta, chunk=2048):
    x = points
    tot = 0.0
    for s in range(0, len(x), chunk):
        d = x[s:s + chunk, None, :] - x[None, :, :]
        r = np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2)
        tot += float(np.sum(masses[s:s + chunk, None] * masses[None, :]
                            * np.log(np.maximum(r, eta))))
    return tot


@dataclass
class IEnergy:
    value: float
    eta: float
    sensitivity: dict

    def __float__(self):
        return self.value


def I_energy(measure: DiscreteMeasure, Q=None, eta: float | None = None) -> IEnergy:
    """-pi sum_{ij} m_i m_j log(max(|x_i-x_j|, eta)) + pi sum m_i Q(x_i).

    ``eta`` defaults to n^{-1/2}/4; values at eta/2 and 2 eta are reported as sensitivity.
    """
    n = len(measure.points)
    eta = 0.25 / math.sqrt(n) if eta is None else float(eta)
    if eta <= 0:
        raise ValueError("eta must be positive")
    x, m = measure.points, measure.masses
    q = 0.0
    if Q is not None:
        q = float(np.sum(m * np.einsum("ij,jk,ik->i", x, np.asarray(Q, float), x)))

    def val(e):
        return -math.pi * _log_self_energy(x, m, e) + math.pi * q

    v = val(eta)
    sens = {"eta/2": val(eta / 2) - v, "2eta": val(2 * eta) - v} if n <= 20000 else {}
    return IEnergy(v, eta, sens)


def disk_cloud(n: int, radius: float = 1.0, center=(0.0, 0.0)) -> DiscreteMeasure:
    """Quasi-uniform n-point cloud on a disk (golden-angle spiral, cell-centered radii)."""
    k = np.arange(n)
    r = radius * np.sqrt((k + 0.5) / n)
    th = k * math.pi * (3 - math.sqrt(5))
    pts = np.stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)], axis=1)
    return DiscreteMeasure.empirical(pts)


# minimization ---------------------------------------------------------------------------

class MinimizationError(RuntimeError):
    pass


def minimize_points(kind: str, n: int, Q=None, h_ex: float | None = None, xi0=None,
                    domain: Domain | None = None, restarts: int = 16, seed: int = 0,
                    scale: float = 0.5, gtol: float = 1e-10) -> PointConfiguration:
    """Multistart L-BFGS on w_n (kind 'w') or R_{n,h_ex} (kind 'R') with analytic gradients."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    if kind == "w":
        if Q is None:
            raise ValueError("w_n needs the quadratic form Q")
        Q = np.asarray(Q, float)
        center = np.zeros(2)
        fun = lambda v: w_energy(v.reshape(-1, 2), Q, with_grad=True)
        bounds = None
        sc = scale
    elif kind == "R":
        if h_ex is None or xi0 is None:
            raise ValueError("R_{n,h_ex} needs h_ex and a xi_0 solution")
        domain = domain or xi0.domain
        Rf = RenormalizedR(domain, h_ex, xi0)
        center = np.asarray(xi0.p, float)
        fun = lambda v: Rf(v.reshape(-1, 2), with_grad=True)
        lo, hi = _inner_box(domain)
        bounds = [(lo[k % 2], hi[k % 2]) for k in range(2 * n)]
        sc = scale * min(1.0, math.sqrt(n / max(h_ex, 1e-12)))
    else:
        raise ValueError(f"unknown energy {kind!r}")

    def safe(v):
        val, g = fun(v)
        if not np.isfinite(val):
            return 1e300, np.zeros_like(v)
        return val, g.ravel()

    table = []
    best = None
    for k in range(max(restarts, 1)):
        x0 = center + sc * rng.standard_normal((n, 2))
        if n == 1 and k == 0:
            x0 = center[None, :].copy()
        if bounds is not None:
            x0 = np.clip(x0, [b[0] for b in bounds[:2]], [b[1] for b in bounds[:2]])
        res = optimize.minimize(safe, x0.ravel(), jac=True, method="L-BFGS-B", bounds=bounds,
                                options={"gtol": gtol, "ftol": 1e-15, "maxiter": 2000})
        v = float(res.fun)
        table.append(v if v < 1e299 else math.inf)
        if np.isfinite(table[-1]) and (best is None or v < best[0]):
            best = (v, res.x.reshape(-1, 2))
    if best is None:
        raise MinimizationError(f"all {len(table)} restarts diverged")
    return PointConfiguration(best[1], best[0], restarts=table, seed=seed, kind=kind)


def _inner_box(domain: Domain):
    m = 5 * domain.h
    cx, cy = domain.center
    if domain.shape == "disk":
        a = domain.radius / math.sqrt(2) - m
        return (cx - a, cy - a), (cx + a, cy + a)
    return ((cx - domain.width / 2 + m, cy - domain.height / 2 + m),
            (cx + domain.width / 2 - m, cy + domain.height / 2 - m))
