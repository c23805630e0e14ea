"""Auxiliary elliptic problems: xi_0, Green functions G_p, Phi, the hole function H, U_*.

All Dirichlet problems ``-Lap u + kappa u = f`` are discretized with the 5-point
stencil, using Shortley-Weller arms where a grid line is cut by a curved boundary,
and solved by a cached sparse LU factorization.

Green functions are never built from a discretized delta.  We split
``G_p = K_0(|x-p|) + R_p`` where ``K_0`` is the modified Bessel function (the exact
whole-plane solution of ``-Lap K + K = 2 pi delta``), so the regular part solves a
homogeneous equation with smooth boundary data ``R_p = -K_0(|x-p|)``.  The regular
part of the logarithmic splitting is then ``S(x, p) = K_0(r) + log r + R_p(x)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import special
from scipy.interpolate import RectBivariateSpline

from .grid import Domain

EULER_GAMMA = 0.5772156649015329


# geometry of boundary pieces -------------------------------------------------------

def _piece_sd(piece, X, Y):
    kind = piece[0]
    if kind == "disk_in":
        (cx, cy), R = piece[1], piece[2]
        return R - np.hypot(X - cx, Y - cy)
    if kind == "disk_out":
        (cx, cy), r = piece[1], piece[2]
        return np.hypot(X - cx, Y - cy) - r
    if kind == "rect_in":
        (cx, cy), w, hgt = piece[1], piece[2], piece[3]
        return np.minimum(w / 2 - np.abs(X - cx), hgt / 2 - np.abs(Y - cy))
    raise ValueError(f"unknown boundary piece {kind!r}")


def _piece_hit(piece, X, Y, axis, sign):
    """Distance along +-axis to where the piece boundary is crossed (inf if never)."""
    kind = piece[0]
    ex, ey = (sign, 0.0) if axis == 0 else (0.0, sign)
    if kind in ("disk_in", "disk_out"):
        (cx, cy), R = piece[1], piece[2]
        dx, dy = X - cx, Y - cy
        b = dx * ex + dy * ey
        c = dx ** 2 + dy ** 2 - R ** 2
        disc = b ** 2 - c
        sq = np.sqrt(np.maximum(disc, 0.0))
        if kind == "disk_in":
            t = -b + sq
        else:
            t = np.where((disc >= 0) & (-b - sq > 0), -b - sq, np.inf)
        return t
    (cx, cy), w, hgt = piece[1], piece[2], piece[3]
    if axis == 0:
        wall = cx + sign * w / 2
        return (wall - X) * sign
    wall = cy + sign * hgt / 2
    return (wall - Y) * sign


class DirichletOperator:
    """Factorized Shortley-Weller discretization of -Lap + kappa on a point grid."""

    def __init__(self, pieces, x, y, kappa):
        self.pieces = pieces
        self.x, self.y = x, y
        self.h = float(x[1] - x[0])
        h = self.h
        X, Y = np.meshgrid(x, y, indexing="ij")
        self.X, self.Y = X, Y
        sd = np.min([_piece_sd(pc, X, Y) for pc in pieces], axis=0)
        self.sd = sd
        interior = sd > 1e-6 * h
        self.interior = interior
        idx = -np.ones(X.shape, dtype=np.int64)
        n = int(interior.sum())
        idx[interior] = np.arange(n)
        self.idx = idx
        I, J = np.nonzero(interior)
        rows = idx[I, J]
        px, py = X[I, J], Y[I, J]
        diag = np.full(n, float(kappa))
        A_rows, A_cols, A_vals = [], [], []
        # boundary contributions: rhs += coef * g(bx, by, piece)
        b_rows, b_coef, b_x, b_y, b_piece = [], [], [], [], []
        arms = {}
        for axis in (0, 1):
            for sign in (1, -1):
                ni = I + (sign if axis == 0 else 0)
                nj = J + (sign if axis == 1 else 0)
                inside_grid = (ni >= 0) & (ni < X.shape[0]) & (nj >= 0) & (nj < X.shape[1])
                nbr_int = np.zeros(n, bool)
                nbr_int[inside_grid] = interior[ni[inside_grid], nj[inside_grid]]
                hits = np.array([_piece_hit(pc, px, py, axis, sign) for pc in pieces])
                which = np.argmin(hits, axis=0)
                dist = hits[which, np.arange(n)]
                cut = ~nbr_int
                arm = np.where(cut, np.clip(dist, 1e-6 * h, h), h)
                arms[(axis, sign)] = (arm, cut, which, ni, nj)
        for axis in (0, 1):
            ap, cutp, whp, nip, njp = arms[(axis, 1)]
            am, cutm, whm, nim, njm = arms[(axis, -1)]
            cp = 2.0 / (ap * (ap + am))
            cm = 2.0 / (am * (ap + am))
            diag += cp + cm
            for coef, cut, wh, ni, nj, arm, sign in ((cp, cutp, whp, nip, njp, ap, 1),
                                                     (cm, cutm, whm, nim, njm, am, -1)):
                ok = ~cut
                A_rows.append(rows[ok])
                A_cols.append(idx[ni[ok], nj[ok]])
                A_vals.append(-coef[ok])
                bx = px[cut] + (sign * arm[cut] if axis == 0 else 0.0)
                by = py[cut] + (sign * arm[cut] if axis == 1 else 0.0)
                b_rows.append(rows[cut])
                b_coef.append(coef[cut])
                b_x.append(bx)
                b_y.append(by)
                b_piece.append(wh[cut])
        A_rows.append(rows)
        A_cols.append(rows)
        A_vals.append(diag)
        M = sp.csc_matrix((np.concatenate(A_vals),
                           (np.concatenate(A_rows), np.concatenate(A_cols))), shape=(n, n))
        self.matrix = M
        self.lu = spla.splu(M)
        self.b_rows = np.concatenate(b_rows)
        self.b_coef = np.concatenate(b_coef)
        self.b_x = np.concatenate(b_x)
        self.b_y = np.concatenate(b_y)
        self.b_piece = np.concatenate(b_piece)
        self.n = n

    def boundary_values(self, g):
        """Evaluate boundary data g at the cut points; g is a number, a callable
        g(x, y) or a sequence (one entry per boundary piece)."""
        vals = np.zeros(self.b_x.size)
        items = g if isinstance(g, (list, tuple)) else [g] * len(self.pieces)
        for k, gk in enumerate(items):
            sel = self.b_piece == k
            if not sel.any():
                continue
            vals[sel] = gk(self.b_x[sel], self.b_y[sel]) if callable(gk) else float(gk)
        return vals

    def solve(self, rhs=0.0, g=0.0, fill=0.0, return_residual=False):
        """Return the full grid field; points outside the interior get ``fill``."""
        f = np.broadcast_to(np.asarray(rhs, float), self.X.shape)[self.interior].copy()
        bvals = self.boundary_values(g)
        np.add.at(f, self.b_rows, self.b_coef * bvals)
        sol = self.lu.solve(f)
        out = np.empty(self.X.shape)
        out[self.interior] = sol
        ext = ~self.interior
        if callable(fill):
            out[ext] = fill(self.X[ext], self.Y[ext])
        else:
            out[ext] = float(fill)
        if return_residual:
            res = self.matrix @ sol - f
            scale = max(1.0, float(np.max(np.abs(f))))
            return out, float(np.max(np.abs(res))) / scale
        return out


@lru_cache(maxsize=32)
def _operator(pieces, x0, y0, h, nx, ny, kappa):
    x = x0 + h * np.arange(nx)
    y = y0 + h * np.arange(ny)
    return DirichletOperator(pieces, x, y, kappa)


def dirichlet_operator(domain: Domain, kappa: float = 1.0, offset: float = 0.0,
                       holes=()) -> DirichletOperator:
    """Operator on the node grid (offset 0) or the plaquette-center grid (offset 0.5)."""
    pieces = tuple(domain.boundary_pieces()) + tuple(
        ("disk_out", (float(c[0]), float(c[1])), float(r)) for c, r in holes)
    x0, y0 = domain.origin
    nx, ny = domain.shape2
    if offset:
        nx, ny = nx - 1, ny - 1
    return _operator(pieces, x0 + offset * domain.h, y0 + offset * domain.h, domain.h,
                     nx, ny, float(kappa))


def solve_dirichlet(domain: Domain, rhs=0.0, g=0.0, kappa: float = 1.0, fill=0.0):
    """Solve -Lap u + kappa u = rhs in the domain with u = g on the boundary."""
    return dirichlet_operator(domain, kappa).solve(rhs, g, fill)


def spline(field, domain: Domain, offset: float = 0.0) -> RectBivariateSpline:
    x = domain.x[: field.shape[0]] + offset * domain.h
    y = domain.y[: field.shape[1]] + offset * domain.h
    return RectBivariateSpline(x, y, field, kx=3, ky=3, s=0)


def bilinear(field, domain: Domain, points, offset: float = 0.0):
    """Bilinear interpolation of a grid field at points (N,2)."""
    pts = np.atleast_2d(np.asarray(points, float))
    x0, y0 = domain.origin
    h = domain.h
    fx = (pts[:, 0] - x0) / h - offset
    fy = (pts[:, 1] - y0) / h - offset
    i = np.clip(np.floor(fx).astype(int), 0, field.shape[0] - 2)
    j = np.clip(np.floor(fy).astype(int), 0, field.shape[1] - 2)
    s, t = fx - i, fy - j
    return ((1 - s) * (1 - t) * field[i, j] + s * (1 - t) * field[i + 1, j]
            + (1 - s) * t * field[i, j + 1] + s * t * field[i + 1, j + 1])


# xi_0 ---------------------------------------------------------------------------------

@dataclass
class Xi0Solution:
    domain: Domain
    field: np.ndarray
    p: np.ndarray
    min_value: float
    J0: float
    Q: np.ndarray
    residual: float
    _spl: object = field(default=None, repr=False)

    @property
    def spl(self) -> RectBivariateSpline:
        if self._spl is None:
            self._spl = spline(self.field, self.domain)
        return self._spl

    def value_at(self, points):
        pts = np.atleast_2d(np.asarray(points, float))
        return self.spl.ev(pts[:, 0], pts[:, 1])

    def gradient_at(self, points):
        pts = np.atleast_2d(np.asarray(points, float))
        return np.stack([self.spl.ev(pts[:, 0], pts[:, 1], dx=1),
                         self.spl.ev(pts[:, 0], pts[:, 1], dy=1)], axis=1)

    def summary(self) -> dict:
        return {"p": [float(v) for v in self.p], "xi0_p": float(self.min_value),
                "J0": float(self.J0), "Q": [[float(v) for v in row] for row in self.Q],
                "residual": float(self.residual), "grid_n": self.domain.grid_n,
                "domain": self.domain.to_dict()}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)


def _parabola_vertex(fm, f0, fp):
    den = fm - 2 * f0 + fp
    if den <= 0:
        return 0.0
    return 0.5 * (fm - fp) / den


def solve_xi0(domain: Domain, argmin_tol: float = 1e-7) -> Xi0Solution:
    """Solve -Lap xi + xi + 1 = 0 in the domain, xi = 0 on the boundary."""
    op = dirichlet_operator(domain, 1.0)
    xi, res = op.solve(rhs=-1.0, g=0.0, fill=0.0, return_residual=True)
    if res > 1e-9:
        raise RuntimeError(f"xi0 residual {res:.3e}")
    h = domain.h
    inner = op.interior.copy()
    inner[[0, -1], :] = False
    inner[:, [0, -1]] = False
    vals = np.where(inner, xi, np.inf)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    vmin = vals[k]
    # local minima of the grid function other than the argmin
    pad = np.pad(vals, 1, constant_values=np.inf)
    nb = np.min([pad[1 + di:pad.shape[0] - 1 + di, 1 + dj:pad.shape[1] - 1 + dj]
                 for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)], axis=0)
    locmin = inner & (vals <= nb) & (vals <= vmin + argmin_tol * max(1.0, abs(vmin)))
    X, Y = domain.XY
    far = locmin & (np.hypot(X - X[k], Y - Y[k]) > 2.5 * h)
    if far.any():
        cands = [(float(X[t]), float(Y[t]), float(xi[t])) for t in zip(*np.nonzero(far))]
        raise ValueError(f"xi0 has several near-minimal points: {cands[:8]}")
    i, j = k
    sx = _parabola_vertex(xi[i - 1, j], xi[i, j], xi[i + 1, j])
    sy = _parabola_vertex(xi[i, j - 1], xi[i, j], xi[i, j + 1])
    p = np.array([X[k] + sx * h, Y[k] + sy * h])
    # Hessian from second differences, interpolated to p
    fxx = np.zeros_like(xi)
    fyy = np.zeros_like(xi)
    fxy = np.zeros_like(xi)
    fxx[1:-1, :] = (xi[2:, :] - 2 * xi[1:-1, :] + xi[:-2, :]) / h ** 2
    fyy[:, 1:-1] = (xi[:, 2:] - 2 * xi[:, 1:-1] + xi[:, :-2]) / h ** 2
    fxy[1:-1, 1:-1] = (xi[2:, 2:] - xi[2:, :-2] - xi[:-2, 2:] + xi[:-2, :-2]) / (4 * h ** 2)
    Q = np.array([[bilinear(fxx, domain, p)[0], bilinear(fxy, domain, p)[0]],
                  [bilinear(fxy, domain, p)[0], bilinear(fyy, domain, p)[0]]])
    vmin_interp = float(spline(xi, domain).ev(p[0], p[1]))
    # weak form: int |grad xi|^2 + xi^2 = -int xi
    J0 = -0.5 * float(np.sum(xi[domain.node_mask])) * h ** 2
    return Xi0Solution(domain, xi, p, min(vmin_interp, float(vmin)), J0, Q, res)


def meissner_potential(domain: Domain, h_ex: float):
    """Link field h_ex * grad-perp(xi_c), with xi_c the staircase solution of
    xi - Lap xi = -1 on the plaquettes of the domain (zero on plaquettes outside).

    Its discrete curl equals h_ex * (xi_c + 1) on every plaquette of the domain, so the
    discrete splitting of G_eps around it is exact.
    """
    from .grid import perp_gradient_plaquette
    xi_c = _staircase_xi(domain)
    return perp_gradient_plaquette(h_ex * xi_c, domain), xi_c


def staircase_J0(domain: Domain) -> float:
    """-1/2 sum xi_c h^2, the discrete counterpart of J_0 for the staircase solution."""
    return -0.5 * float(np.sum(_staircase_xi(domain))) * domain.h ** 2


def _staircase_xi(domain: Domain):
    key = (domain.shape, domain.grid_n, json.dumps(domain.to_dict(), sort_keys=True))
    xi = _STAIRCASE.get(key)
    if xi is None:
        nx, ny = domain.cells
        pm = domain.plaquette_mask[:nx, :ny]
        idx = -np.ones((nx, ny), int)
        idx[pm] = np.arange(int(pm.sum()))
        N = int(pm.sum())
        h2 = domain.h ** 2
        rows, cols, vals = [np.arange(N)], [np.arange(N)], [np.full(N, 1.0 + 4.0 / h2)]
        I, J = np.nonzero(pm)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = I + di, J + dj
            ok = (a >= 0) & (a < nx) & (b >= 0) & (b < ny)
            ok[ok] &= pm[a[ok], b[ok]]
            rows.append(idx[I[ok], J[ok]])
            cols.append(idx[a[ok], b[ok]])
            vals.append(np.full(int(ok.sum()), -1.0 / h2))
        M = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N, N))
        xi = np.zeros((nx, ny))
        xi[pm] = spla.spsolve(M, -np.ones(N))
        if len(_STAIRCASE) > 8:
            _STAIRCASE.clear()
        _STAIRCASE[key] = xi
    return xi.copy()


_STAIRCASE: dict = {}


# Green functions ---------------------------------------------------------------------

def k0_plus_log(r):
    """K_0(r) + log r, extended continuously by log 2 - gamma at r = 0."""
    r = np.asarray(r, float)
    out = np.full(r.shape, math.log(2.0) - EULER_GAMMA)
    small = r < 1e-8
    rr = r[~small]
    out[~small] = special.k0(rr) + np.log(rr)
    return out


@dataclass
class GreenSolution:
    domain: Domain
    pole: np.ndarray
    R: np.ndarray
    residual: float
    _spl: object = field(default=None, repr=False)
    _dspl: object = field(default=None, repr=False)

    @property
    def spl(self):
        if self._spl is None:
            self._spl = spline(self.R, self.domain)
        return self._spl

    def _r(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        d = pts - self.pole
        return pts, d, np.hypot(d[:, 0], d[:, 1])

    def S(self, points):
        """Regular part S(x, p) = G_p(x) + log|x - p|."""
        pts, d, r = self._r(points)
        return k0_plus_log(r) + self.spl.ev(pts[:, 0], pts[:, 1])

    def G(self, points):
        pts, d, r = self._r(points)
        with np.errstate(divide="ignore"):
            k0 = np.where(r > 0, special.k0(np.maximum(r, 1e-300)), np.inf)
        return k0 + self.spl.ev(pts[:, 0], pts[:, 1])

    def grad_R(self, points):
        pts = np.atleast_2d(np.asarray(points, float))
        return np.stack([self.spl.ev(pts[:, 0], pts[:, 1], dx=1),
                         self.spl.ev(pts[:, 0], pts[:, 1], dy=1)], axis=1)

    def grad(self, points):
        """grad G_p at points (infinite at the pole)."""
        pts, d, r = self._r(points)
        with np.errstate(divide="ignore", invalid="ignore"):
            k1 = special.k1(r) / r
        return -k1[:, None] * d + self.grad_R(pts)

    def grad_S(self, points):
        """Gradient of S(., p) in its first argument."""
        pts, d, r = self._r(points)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(r > 1e-8, -special.k1(np.maximum(r, 1e-300)) / r + 1 / r ** 2, 0.0)
        return coef[:, None] * d + self.grad_R(pts)

    def pole_derivative_fields(self):
        """Grid fields dR/dp_x and dR/dp_y (regular part differentiated in the pole)."""
        if self._dspl is None:
            op = dirichlet_operator(self.domain, 1.0)
            px, py = self.pole

            def data(comp):
                def g(x, y):
                    dx, dy = x - px, y - py
                    r = np.hypot(dx, dy)
                    return -special.k1(r) / r * (dx if comp == 0 else dy)
                return g
            fields = [op.solve(0.0, data(c), fill=data(c)) for c in (0, 1)]
            self._dspl = [spline(f, self.domain) for f in fields]
        return self._dspl

    def dS_dpole(self, points):
        """Gradient of S(x, p) with respect to the pole p, at the given x."""
        pts, d, r = self._r(points)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(r > 1e-8, special.k1(np.maximum(r, 1e-300)) / r - 1 / r ** 2, 0.0)
        sx, sy = self.pole_derivative_fields()
        reg = np.stack([sx.ev(pts[:, 0], pts[:, 1]), sy.ev(pts[:, 0], pts[:, 1])], axis=1)
        return coef[:, None] * d + reg

    @property
    def S_pp(self) -> float:
        return float(self.S(self.pole)[0])

    def S_field(self):
        X, Y = self.domain.XY
        return k0_plus_log(np.hypot(X - self.pole[0], Y - self.pole[1])) + self.R

    def G_field(self):
        """Node field of G_p; the pole node (if any) holds +inf; zero outside."""
        X, Y = self.domain.XY
        r = np.hypot(X - self.pole[0], Y - self.pole[1])
        with np.errstate(divide="ignore"):
            g = np.where(r > 0, special.k0(np.maximum(r, 1e-300)), np.inf) + self.R
        return np.where(self.domain.node_mask, g, 0.0)


def solve_green(domain: Domain, p) -> GreenSolution:
    """Green function of -Lap + 1 with pole p and zero Dirichlet data."""
    p = np.asarray(p, float).ravel()
    if float(domain.signed_distance(*p)) < 4 * domain.h:
        raise ValueError("pole must lie at least 4h inside the domain")
    op = dirichlet_operator(domain, 1.0)
    data = lambda x, y: -special.k0(np.hypot(x - p[0], y - p[1]))
    R, res = op.solve(0.0, data, fill=data, return_residual=True)
    return GreenSolution(domain, p, R, res)


@dataclass
class PhiSolution:
    domain: Domain
    points: np.ndarray
    greens: list

    def value_at(self, points):
        return sum(g.G(points) for g in self.greens)

    def grad(self, points):
        return sum(g.grad(points) for g in self.greens)

    def field(self):
        return sum(g.G_field() for g in self.greens)

    def regular_field(self):
        return sum(g.R for g in self.greens)


def solve_phi(domain: Domain, points) -> PhiSolution:
    """Phi = sum_i G_{a_i}, solving -Lap Phi + Phi = 2 pi sum delta_{a_i}."""
    pts = np.atleast_2d(np.asarray(points, float))
    for i in range(len(pts)):
        for j in range(i):
            if np.allclose(pts[i], pts[j], atol=1e-12):
                raise ValueError("coincident points")
    return PhiSolution(domain, pts, [solve_green(domain, a) for a in pts])


# hole function ------------------------------------------------------------------------

@dataclass
class HoleSolution:
    domain: Domain
    field: np.ndarray
    constants: np.ndarray
    holes: list
    degrees: np.ndarray
    hole_masks: list
    free_mask: np.ndarray

    def energy(self) -> float:
        """int over Omega minus holes of |grad H|^2 + H^2 (link quadrature)."""
        h = self.domain.h
        H = self.field
        gx = np.diff(H, axis=0) / h
        gy = np.diff(H, axis=1) / h
        return float(np.sum(gx ** 2) * h ** 2 + np.sum(gy ** 2) * h ** 2
                     + np.sum(H[self.free_mask] ** 2) * h ** 2)

    def identity_rhs(self) -> float:
        return float(2 * np.pi * np.sum(self.degrees * self.constants))


def solve_hole_function(domain: Domain, holes, degrees) -> HoleSolution:
    """Minimize 1/2 int |grad h|^2 + h^2 - 2 pi sum d_i h|_{hole i} over fields that are
    constant on each (closed, grid-sampled) hole and vanish outside Omega.

    The Euler-Lagrange equations give -Lap H + H = 0 off the holes and a flux of
    2 pi d_i into hole i, which makes c_i share the sign of d_i.
    """
    holes = [((float(c[0]), float(c[1])), float(r)) for c, r in holes]
    degrees = np.asarray(degrees, float)
    if len(holes) != degrees.size:
        raise ValueError("one degree per hole")
    h = domain.h
    X, Y = domain.XY
    inside = domain.interior_mask
    masks = []
    for k, (c, r) in enumerate(holes):
        if r <= 0:
            raise ValueError("hole radius must be positive")
        if float(domain.signed_distance(*c)) - r < 2 * h:
            raise ValueError("holes must lie in the interior")
        for c2, r2 in holes[:k]:
            if math.hypot(c[0] - c2[0], c[1] - c2[1]) <= r + r2 + h:
                raise ValueError("holes overlap")
        m = np.hypot(X - c[0], Y - c[1]) <= r
        if not m.any():
            raise ValueError("hole smaller than the grid resolution")
        masks.append(m)
    in_hole = np.any(masks, axis=0)
    free = inside & ~in_hole
    nfree = int(free.sum())
    nh = len(holes)
    col = -np.ones(domain.shape2, dtype=np.int64)
    col[free] = np.arange(nfree)
    for k, m in enumerate(masks):
        col[m] = nfree + k
    nvar = nfree + nh
    rows, cols, vals = [], [], []
    for axis in (0, 1):
        a = col.take(np.arange(domain.shape2[axis] - 1), axis=axis)
        b = col.take(np.arange(1, domain.shape2[axis]), axis=axis)
        a, b = a.ravel(), b.ravel()
        for s, t in ((a, b), (b, a)):
            ok = s >= 0
            rows.append(s[ok])
            cols.append(s[ok])
            vals.append(np.ones(ok.sum()))
            both = ok & (t >= 0)
            rows.append(s[both])
            cols.append(t[both])
            vals.append(-np.ones(both.sum()))
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nvar, nvar)).tocsr()
    # a link inside one hole maps both ends to the same unknown; its +1/-1 entries cancel
    M = sp.diags(np.concatenate([np.full(nfree, h ** 2), np.zeros(nh)]))
    A = (K + M).tocsc()
    rhs = np.zeros(nvar)
    rhs[nfree:] = 2 * np.pi * degrees
    z = spla.spsolve(A, rhs)
    H = np.zeros(domain.shape2)
    H[free] = z[:nfree]
    for k, m in enumerate(masks):
        H[m] = z[nfree + k]
    return HoleSolution(domain, H, z[nfree:].copy(), holes, degrees, masks, free)


# U_* on a ball --------------------------------------------------------------------------

@dataclass
class UStarSolution:
    domain: Domain
    K: float
    field: np.ndarray
    masses: np.ndarray
    laplacian_integral: float
    _spl: object = field(default=None, repr=False)

    @property
    def spl(self):
        if self._spl is None:
            self._spl = spline(self.field, self.domain)
        return self._spl

    def value_at(self, points):
        pts = np.atleast_2d(np.asarray(points, float))
        return self.spl.ev(pts[:, 0], pts[:, 1])

    def perp_grad(self, points):
        """grad-perp U_* = (-d_y U, d_x U) at points."""
        pts = np.atleast_2d(np.asarray(points, float))
        ux = self.spl.ev(pts[:, 0], pts[:, 1], dx=1)
        uy = self.spl.ev(pts[:, 0], pts[:, 1], dy=1)
        return np.stack([-uy, ux], axis=1)


def deposit(domain: Domain, points, weights):
    """Bilinear deposition of point masses onto node cell masses."""
    pts = np.atleast_2d(np.asarray(points, float))
    w = np.asarray(weights, float).ravel()
    out = np.zeros(domain.shape2)
    x0, y0 = domain.origin
    fx = (pts[:, 0] - x0) / domain.h
    fy = (pts[:, 1] - y0) / domain.h
    i = np.floor(fx).astype(int)
    j = np.floor(fy).astype(int)
    s, t = fx - i, fy - j
    for di, dj, c in ((0, 0, (1 - s) * (1 - t)), (1, 0, s * (1 - t)),
                      (0, 1, (1 - s) * t), (1, 1, s * t)):
        np.add.at(out, (i + di, j + dj), w * c)
    return out


def uniform_disk_masses(domain: Domain, radius: float = 1.0, center=(0.0, 0.0)):
    """Cell masses of the normalized uniform measure on a disk."""
    X, Y = domain.XY
    m = (np.hypot(X - center[0], Y - center[1]) <= radius).astype(float)
    return m / m.sum()


def solve_ustar(K: float, masses, grid_n: int = 32, domain: Domain | None = None) -> UStarSolution:
    """Solve Lap U = 2 pi mu on B(0, K), U = 0 on the boundary.

    ``masses`` are node cell masses on ``Domain.disk(K, grid_n)`` (sum 1).
    """
    domain = domain or Domain.disk(K, grid_n)
    masses = np.asarray(masses, float)
    domain.check_field(masses, "masses")
    if np.any(masses < 0):
        raise ValueError("measure must be nonnegative")
    total = float(masses.sum())
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"measure has mass {total!r}, expected 1")
    op = dirichlet_operator(domain, 0.0)
    if float(masses[~op.interior].sum()) > 1e-12:
        raise ValueError("measure must be supported inside B(0, K)")
    dens = masses / domain.h ** 2
    U = op.solve(rhs=-2 * np.pi * dens, g=0.0, fill=0.0)
    lap_int = float(2 * np.pi * masses[op.interior].sum())
    return UStarSolution(domain, float(K), U, masses, lap_int)
