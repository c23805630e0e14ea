"""Radial vortex profile, planted configurations, minimization of G_eps, the field Z
and epsilon-sweep drivers."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.linalg import solve_banded

from .grid import (Domain, GLParams, VectorField, coulomb_project, covariant_gradient,
                   curl, full_energy, free_energy)
from .vortex import find_zeros, plaquette_winding


# radial profile ---------------------------------------------------------------------

@dataclass
class RadialProfile:
    """Degree-one profile f with f'' + f'/r - f/r^2 + f(1 - f^2) = 0, f(0) = 0, f(inf) = 1."""

    r: np.ndarray
    f: np.ndarray
    gamma: float
    residual: float
    slope: float
    energy: np.ndarray = field(repr=False)

    @property
    def R_max(self) -> float:
        return float(self.r[-1])

    def __call__(self, r):
        r = np.asarray(r, float)
        out = np.interp(r, self.r, self.f)
        far = r > self.R_max
        if np.any(far):
            out = np.where(far, 1 - 0.5 / np.maximum(r, 1.0) ** 2, out)
        return out

    def derivative(self, r):
        r = np.asarray(r, float)
        df = np.gradient(self.f, self.r)
        out = np.interp(r, self.r, df)
        return np.where(r > self.R_max, 1.0 / np.maximum(r, 1.0) ** 3, out)

    def energy_at(self, R):
        """pi int_0^R (f'^2 + f^2/r^2 + (1 - f^2)^2 / 2) r dr."""
        return np.interp(R, self.r, self.energy)


class ProfileError(RuntimeError):
    pass


@lru_cache(maxsize=8)
def radial_profile(R_max: float = 100.0, dr: float = 0.01, tol: float = 1e-11,
                   max_newton: int = 50) -> RadialProfile:
    """Newton relaxation of the radial ODE on a uniform mesh; returns f, energy(R) and gamma."""
    if R_max < 20:
        raise ValueError("R_max must be at least 20")
    N = int(round(R_max / dr))
    r = np.linspace(0.0, R_max, N + 1)
    ri = r[1:-1]
    f = r / np.sqrt(r ** 2 + 2.0)
    f[-1] = 1 - 0.5 / R_max ** 2
    lo = 1 / dr ** 2 - 1 / (2 * ri * dr)
    up = 1 / dr ** 2 + 1 / (2 * ri * dr)
    history = []
    for it in range(max_newton):
        fi = f[1:-1]
        F = (lo * f[:-2] + up * f[2:] - 2 * fi / dr ** 2 - fi / ri ** 2 + fi * (1 - fi ** 2))
        history.append(float(np.max(np.abs(F))))
        diag = -2 / dr ** 2 - 1 / ri ** 2 + 1 - 3 * fi ** 2
        ab = np.zeros((3, N - 1))
        ab[0, 1:] = up[:-1]
        ab[1] = diag
        ab[2, :-1] = lo[1:]
        delta = solve_banded((1, 1), ab, -F)
        f[1:-1] += delta
        if np.max(np.abs(delta)) < tol:
            break
    else:
        raise ProfileError(f"profile relaxation did not converge; residual history {history[-5:]}")
    # energy by midpoint quadrature
    rm = 0.5 * (r[1:] + r[:-1])
    fm = 0.5 * (f[1:] + f[:-1])
    fp = np.diff(f) / dr
    dens = np.pi * (fp ** 2 + fm ** 2 / rm ** 2 + 0.5 * (1 - fm ** 2) ** 2) * rm * dr
    energy = np.concatenate(([0.0], np.cumsum(dens)))
    sel = (r >= R_max / 4) & (r > 0)
    Rs, Es = r[sel], energy[sel]
    slope = float(np.polyfit(np.log(Rs), Es, 1)[0])
    # intercept of energy(R) - pi log R, with the O(R^-2) tail fitted out
    coef = np.polyfit(Rs ** -2.0, Es - np.pi * np.log(Rs), 1)
    return RadialProfile(r, f, float(coef[1]), history[-1], slope, energy)


# planted configurations --------------------------------------------------------------------

def plant_configuration(domain: Domain, points, degrees, params: GLParams,
                        profile: RadialProfile | None = None, A: VectorField | None = None):
    """u = prod_i f(|x - a_i| / eps) ((x - a_i)/|x - a_i|)^{d_i}; A = 0 unless supplied."""
    pts = np.atleast_2d(np.asarray(points, float)).reshape(-1, 2)
    degs = np.broadcast_to(np.asarray(degrees, int), (len(pts),))
    h = domain.h
    for k, a in enumerate(pts):
        if float(domain.signed_distance(*a)) <= 0:
            raise ValueError(f"point {k} lies outside the domain")
    for i in range(len(pts)):
        for j in range(i):
            if np.hypot(*(pts[i] - pts[j])) < 8 * h:
                raise ValueError(f"points {j} and {i} closer than 8h")
    profile = profile or radial_profile()
    X, Y = domain.XY
    u = np.ones(domain.shape2, complex)
    for a, d in zip(pts, degs):
        z = (X - a[0]) + 1j * (Y - a[1])
        r = np.abs(z)
        ph = np.where(r > 0, z / np.maximum(r, 1e-300), 1.0)
        wind = ph ** int(d) if d >= 0 else np.conj(ph) ** int(-d)
        u *= profile(r / params.epsilon) * wind
    A = VectorField.zeros(domain) if A is None else A.copy()
    return u, A


# energy and gradient ---------------------------------------------------------------------

def energy_and_gradient(u, A: VectorField, domain: Domain, params: GLParams):
    """G_eps and its gradient (dE/dRe u + i dE/dIm u, dE/dA per link)."""
    h = domain.h
    eps, hex_ = params.epsilon, params.h_ex
    mx, my = domain.link_masks
    nm = domain.node_mask
    pm = domain.plaquette_mask
    gu = np.zeros(domain.shape2, complex)
    gAx = np.zeros(domain.shape2)
    gAy = np.zeros(domain.shape2)
    E = 0.0
    # x links
    Ux = np.exp(-1j * h * A.x[:-1, :])
    w = Ux * u[1:, :]
    z = np.where(mx[:-1, :], w - u[:-1, :], 0.0)
    E += 0.5 * float(np.sum(np.abs(z) ** 2))
    gu[:-1, :] -= z
    gu[1:, :] += np.conj(Ux) * z
    gAx[:-1, :] = h * np.imag(np.conj(z) * w)
    # y links
    Uy = np.exp(-1j * h * A.y[:, :-1])
    w = Uy * u[:, 1:]
    z = np.where(my[:, :-1], w - u[:, :-1], 0.0)
    E += 0.5 * float(np.sum(np.abs(z) ** 2))
    gu[:, :-1] -= z
    gu[:, 1:] += np.conj(Uy) * z
    gAy[:, :-1] = h * np.imag(np.conj(z) * w)
    # potential
    s = np.where(nm, 1 - np.abs(u) ** 2, 0.0)
    E += h ** 2 * float(np.sum(s ** 2)) / (4 * eps ** 2)
    gu -= h ** 2 * s * u / eps ** 2
    # magnetic
    b = np.where(pm, curl(A, domain) - hex_, 0.0)
    E += 0.5 * h ** 2 * float(np.sum(b ** 2))
    gAx += h * b
    gAx[:, 1:] -= h * b[:, :-1]
    gAy -= h * b
    gAy[1:, :] += h * b[:-1, :]
    gu = np.where(nm, gu, 0.0)
    return E, gu, VectorField(np.where(mx, gAx, 0.0), np.where(my, gAy, 0.0))


class _Packer:
    def __init__(self, domain: Domain):
        self.domain = domain
        self.nm = domain.node_mask
        self.mx, self.my = domain.link_masks
        self.sizes = [int(self.nm.sum())] * 2 + [int(self.mx.sum()), int(self.my.sum())]
        self.cuts = np.cumsum([0] + self.sizes)

    def pack(self, u, A: VectorField):
        return np.concatenate([u.real[self.nm], u.imag[self.nm], A.x[self.mx], A.y[self.my]])

    def unpack(self, v, u_template=None):
        c = self.cuts
        u = np.zeros(self.domain.shape2, complex) if u_template is None else u_template.copy()
        u[self.nm] = v[c[0]:c[1]] + 1j * v[c[1]:c[2]]
        ax = np.zeros(self.domain.shape2)
        ay = np.zeros(self.domain.shape2)
        ax[self.mx] = v[c[2]:c[3]]
        ay[self.my] = v[c[3]:c[4]]
        return u, VectorField(ax, ay)

    def pack_grad(self, gu, gA):
        return np.concatenate([gu.real[self.nm], gu.imag[self.nm], gA.x[self.mx], gA.y[self.my]])


def gradient_norm(gu, gA: VectorField, domain: Domain) -> float:
    """L^2 norm of the variational gradient."""
    tot = float(np.sum(np.abs(gu) ** 2) + np.sum(gA.x ** 2) + np.sum(gA.y ** 2))
    return math.sqrt(tot) / domain.h


def check_gradient(u, A: VectorField, domain: Domain, params: GLParams, n_dirs: int = 10,
                   step: float = 1e-5, seed: int = 0) -> list[float]:
    """Relative mismatch between the analytic directional derivative and centered differences."""
    rng = np.random.default_rng(seed)
    pk = _Packer(domain)
    E0, gu, gA = energy_and_gradient(u, A, domain, params)
    g = pk.pack_grad(gu, gA)
    v0 = pk.pack(u, A)
    out = []
    for _ in range(n_dirs):
        d = rng.standard_normal(v0.size)
        d /= np.linalg.norm(d)
        up, Ap = pk.unpack(v0 + step * d, u)
        um, Am = pk.unpack(v0 - step * d, u)
        fd = (energy_and_gradient(up, Ap, domain, params)[0]
              - energy_and_gradient(um, Am, domain, params)[0]) / (2 * step)
        an = float(g @ d)
        out.append(abs(fd - an) / max(abs(an), 1e-300))
    return out


# minimization ---------------------------------------------------------------------------

def zero_count(u, domain: Domain) -> tuple[int, int]:
    """(number of winding plaquettes weighted by |winding|, total winding)."""
    w = plaquette_winding(u, domain)
    return int(np.abs(w).sum()), int(w.sum())


@dataclass
class MinimizeResult:
    u: np.ndarray
    A: VectorField
    energies: list
    grad_norm: float
    iterations: int
    converged: bool
    vortices: list
    status: str
    seed: int
    method: str
    mode: str
    restarts: list = field(default_factory=list)

    @property
    def energy(self) -> float:
        return float(self.energies[-1])

    def summary(self) -> dict:
        return {"energy": self.energy, "grad_norm": self.grad_norm, "iterations": self.iterations,
                "converged": self.converged, "status": self.status, "seed": self.seed,
                "method": self.method, "mode": self.mode,
                "vortices": [list(v) for v in self.vortices],
                "restart_energies": list(self.restarts)}


class DivergenceError(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


def _gauge_fix(u, A: VectorField, domain: Domain):
    Ap, psi = coulomb_project(A, domain, return_potential=True)
    return u * np.exp(-1j * psi), Ap


def _flow(u, A, domain, params, n_steps, tau, tau_min, trace):
    h2 = domain.h ** 2
    E, gu, gA = energy_and_gradient(u, A, domain, params)
    for _ in range(n_steps):
        while True:
            un = u - (tau / h2) * gu
            An = A - gA * (tau / h2)
            En, gun, gAn = energy_and_gradient(un, An, domain, params)
            if En <= E:
                break
            tau *= 0.5
            if tau < tau_min:
                raise DivergenceError(f"energy increases at step floor {tau_min:.2e}", trace)
        u, A, E, gu, gA = un, An, En, gun, gAn
        trace.append(E)
        tau = min(tau * 1.1, 0.5 * h2)
    return u, A, E, gu, gA, tau


def _lbfgs(u, A, domain, params, n_iter, gtol, trace):
    pk = _Packer(domain)

    def fun(v):
        uu, AA = pk.unpack(v, u)
        E, gu, gA = energy_and_gradient(uu, AA, domain, params)
        return E, pk.pack_grad(gu, gA)

    def cb(intermediate_result):
        trace.append(float(intermediate_result.fun))

    res = optimize.minimize(fun, pk.pack(u, A), jac=True, method="L-BFGS-B", callback=cb,
                            options={"maxiter": n_iter, "maxcor": 20, "ftol": 1e-15,
                                     "gtol": gtol * domain.h ** 2, "maxls": 40})
    uu, AA = pk.unpack(res.x, u)
    E, gu, gA = energy_and_gradient(uu, AA, domain, params)
    return uu, AA, E, gu, gA


def _local_run(u, A, domain, params, method, tol, max_iter, chunk, basin, project):
    E0, gu, gA = energy_and_gradient(u, A, domain, params)
    trace = [E0]
    gnorm = gradient_norm(gu, gA, domain)
    count0 = zero_count(u, domain) if basin else None
    tau = 0.1 * domain.h ** 2
    it = 0
    status = "converged" if gnorm < tol else "max_iter"
    cur_chunk = chunk
    while it < max_iter and status != "converged":
        n = min(cur_chunk, max_iter - it)
        tr = []
        if method == "flow":
            un, An, E, gu, gA, tau_n = _flow(u, A, domain, params, n, tau,
                                             1e-14 * domain.h ** 2, tr)
        elif method == "lbfgs":
            un, An, E, gu, gA = _lbfgs(u, A, domain, params, n, tol, tr)
            tau_n = tau
        else:
            raise ValueError(f"unknown method {method!r}")
        if basin and zero_count(un, domain) != count0:
            if cur_chunk <= 1:
                status = "basin_boundary"
                break
            cur_chunk = max(1, cur_chunk // 4)
            continue
        cur_chunk = chunk
        if E > trace[-1]:
            status = "stalled"
            break
        if project:
            un, An = _gauge_fix(un, An, domain)
        E_start = trace[-1]
        # iterates only; line-search probes never enter the trace
        for t in tr + [E]:
            if t <= trace[-1]:
                trace.append(t)
        progress = E < E_start
        u, A, tau = un, An, tau_n
        it += max(len(tr), 1)
        gnorm = gradient_norm(gu, gA, domain)
        if gnorm < tol:
            status = "converged"
        elif method == "lbfgs" and len(tr) < n:
            # early L-BFGS exit: restart with fresh memory unless nothing moved
            if not progress or len(tr) == 0:
                status = "stalled"
                break
    return u, A, trace, gnorm, it, status


def minimize_G(u, A: VectorField, domain: Domain, params: GLParams, mode: str = "local",
               method: str = "lbfgs", tol: float = 1e-5, max_iter: int = 4000, chunk: int = 200,
               restarts: int = 4, seed: int = 0, project: bool = True,
               noise: float = 0.1) -> MinimizeResult:
    """Minimize G_eps from the seed (u, A).

    ``mode='local'`` rejects chunks that change the vortex count; ``mode='global_restart'``
    runs the seed plus ``restarts`` randomly perturbed copies and keeps the lowest energy.
    """
    if not np.isfinite(energy_and_gradient(u, A, domain, params)[0]):
        raise ValueError("seed has infinite energy")
    if mode == "local":
        uu, AA, trace, gn, it, st = _local_run(u.copy(), A.copy(), domain, params, method, tol,
                                               max_iter, chunk, True, project)
        return MinimizeResult(uu, AA, trace, gn, it, gn < tol, find_zeros(uu, domain), st, seed,
                              method, mode)
    if mode != "global_restart":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    best = None
    energies = []
    for k in range(restarts + 1):
        if k == 0:
            u0 = u.copy()
        else:
            amp = 1 + noise * rng.standard_normal(domain.shape2)
            ph = noise * rng.standard_normal(domain.shape2)
            u0 = u * amp * np.exp(1j * ph)
        res = _local_run(u0, A.copy(), domain, params, method, tol, max_iter, chunk, False, project)
        energies.append(res[2][-1])
        if best is None or res[2][-1] < best[2][-1]:
            best = res
    uu, AA, trace, gn, it, st = best
    return MinimizeResult(uu, AA, trace, gn, it, gn < tol, find_zeros(uu, domain), st, seed,
                          method, mode, energies)


# the field Z ------------------------------------------------------------------------------

def assemble_Z(u, domain: Domain, points, degrees, R: float, phi, params: GLParams,
               profile: RadialProfile | None = None) -> VectorField:
    """Complex node field: eps^-1 grad u_0((x - a_i)/eps) in B(a_i, R eps), -i u grad-perp Phi
    elsewhere."""
    pts = np.atleast_2d(np.asarray(points, float)).reshape(-1, 2)
    degs = np.broadcast_to(np.asarray(degrees, int), (len(pts),))
    eps = params.epsilon
    for i in range(len(pts)):
        for j in range(i):
            if np.hypot(*(pts[i] - pts[j])) <= 2 * R * eps:
                raise ValueError(f"balls B(a_{j}, R eps) and B(a_{i}, R eps) overlap")
    profile = profile or radial_profile()
    X, Y = domain.XY
    nm = domain.node_mask
    Zx = np.zeros(domain.shape2, complex)
    Zy = np.zeros(domain.shape2, complex)
    inside = np.zeros(domain.shape2, bool)
    for a, d in zip(pts, degs):
        dx, dy = X - a[0], Y - a[1]
        r = np.hypot(dx, dy)
        m = (r < R * eps) & nm
        inside |= m
        rr = np.maximum(r[m], 1e-300)
        rho = rr / eps
        ph = ((dx[m] + 1j * dy[m]) / rr) ** int(d) if d >= 0 else \
            ((dx[m] - 1j * dy[m]) / rr) ** int(-d)
        fr = profile.derivative(rho) / eps
        ft = 1j * d * profile(rho) / rr
        ex, ey = dx[m] / rr, dy[m] / rr
        Zx[m] = ph * (fr * ex - ft * ey)
        Zy[m] = ph * (fr * ey + ft * ex)
    out = nm & ~inside
    if out.any():
        g = phi.grad(np.stack([X[out], Y[out]], axis=1))
        Zx[out] = -1j * u[out] * (-g[:, 1])
        Zy[out] = -1j * u[out] * g[:, 0]
    return VectorField(Zx, Zy, "node")


# epsilon sweeps ------------------------------------------------------------------------------

def _covariant_modulus(u, A: VectorField, domain: Domain):
    dx, dy = covariant_gradient(u, A, domain)
    return np.sqrt(np.abs(dx) ** 2 + np.abs(dy) ** 2)


def seed_points(recipe: str, n: int, h_ex: float, xi0, p=None, seed: int = 0):
    """Seed positions for n vortices: 'wn' places p + ell x_i with x a w_n minimizer."""
    from .renormalized import minimize_points
    p = np.asarray(xi0.p if p is None else p, float)
    if recipe == "wn":
        ell = math.sqrt(n / h_ex)
        cfg = minimize_points("w", n, Q=xi0.Q, restarts=8, seed=seed)
        return p + ell * cfg.points
    if recipe == "ring":
        ell = math.sqrt(n / h_ex)
        if n == 1:
            return p[None, :]
        ang = 2 * np.pi * np.arange(n) / n
        return p + 0.5 * ell * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    raise ValueError(f"unknown seed recipe {recipe!r}")


def sweep_member(domain: Domain, epsilon: float, h_ex: float, n: int, recipe: str = "wn",
                 tol: float = 1e-5, max_iter: int = 3000, method: str = "lbfgs", seed: int = 0,
                 alpha: float = 0.8):
    """Plant n vortices, minimize locally and measure the sweep statistics."""
    from .elliptic import solve_xi0, solve_green, meissner_potential
    from .lorentz import weak_l2_setsup_norm
    from .renormalized import f_eps
    t0 = time.perf_counter()
    params = GLParams(epsilon, h_ex, alpha)
    xi0 = solve_xi0(domain)
    pts = seed_points(recipe, n, h_ex, xi0, seed=seed)
    AM, _ = meissner_potential(domain, h_ex)
    u, A = plant_configuration(domain, pts, [1] * n, params, A=AM)
    res = minimize_G(u, A, domain, params, mode="local", method=method, tol=tol,
                     max_iter=max_iter, seed=seed)
    green = solve_green(domain, xi0.p)
    stats = sweep_statistics(res.u, res.A, domain, params, xi0, green, n)
    stats.update({"epsilon": epsilon, "h_ex": h_ex, "n_planted": n, "grid_n": domain.grid_n,
                  "f_eps": f_eps(n, params, xi0, green), "runtime": time.perf_counter() - t0,
                  "minimize": res.summary()})
    return res, stats


def _pole_cell_average(green, domain: Domain, sel, sub: int = 16):
    """|grad G_p| averaged over the cells of nodes within h of the pole (zero elsewhere)."""
    X, Y = domain.XY
    h = domain.h
    near = sel & (np.hypot(X - green.pole[0], Y - green.pole[1]) < h)
    out = np.zeros(domain.shape2)
    off = (np.arange(sub) + 0.5) / sub - 0.5
    ox, oy = np.meshgrid(off * h, off * h, indexing="ij")
    for i, j in zip(*np.nonzero(near)):
        pts = np.stack([X[i, j] + ox.ravel(), Y[i, j] + oy.ravel()], axis=1)
        g = green.grad(pts)
        out[i, j] = float(np.mean(np.hypot(g[:, 0], g[:, 1])))
    return out


def sweep_statistics(u, A: VectorField, domain: Domain, params: GLParams, xi0, green, n: int):
    """Per-configuration record: norms of grad_{A'} u, energies, band ratio, curl A' error."""
    from .elliptic import meissner_potential
    from .lorentz import weak_l2_setsup_norm, lorentz_quasinorm, rearrange
    AM, _ = meissner_potential(domain, params.h_ex)
    Ap = A - AM
    cov = _covariant_modulus(u, Ap, domain)
    h2 = domain.h ** 2
    nm = domain.node_mask
    setsup = weak_l2_setsup_norm(cov, nm, h2)
    quasi = lorentz_quasinorm(rearrange(cov, nm, h2), 2, math.inf)
    G = green.G_field()
    finite = np.isfinite(G)
    gradG = np.zeros(domain.shape2)
    X, Y = domain.XY
    sel = nm & finite
    g = green.grad(np.stack([X[sel], Y[sel]], axis=1))
    gradG[sel] = np.hypot(g[:, 0], g[:, 1])
    gradG[sel & (np.hypot(X - green.pole[0], Y - green.pole[1]) < domain.h)] = 0.0
    gradG += _pole_cell_average(green, domain, sel)
    gG_setsup = weak_l2_setsup_norm(gradG, sel, h2)
    c = curl(Ap, domain)
    pm = domain.plaquette_mask
    Xc, Yc = domain.plaquette_centers
    Gc = np.zeros(domain.shape2)
    Gc[pm] = green.G(np.stack([Xc[pm], Yc[pm]], axis=1))
    err = float(np.sqrt(np.sum((c[pm] / n - Gc[pm]) ** 2) * h2))
    nz, tw = zero_count(u, domain)
    return {"n": n, "zeros": nz, "total_winding": tw, "cov_setsup": setsup, "cov_quasinorm": quasi,
            "ratio": setsup / n, "gradG_setsup": gG_setsup, "band_ratio": setsup / (n * gG_setsup),
            "curl_error": err, "F_eps": free_energy(u, Ap, domain, params.epsilon),
            "G_eps": full_energy(u, A, domain, params)}


def epsilon_sweep(plan: dict, log_path=None):
    """Run every plan entry independently; failures are recorded and the sweep continues.

    plan keys: ``domain`` (dict), ``runs`` (list of {epsilon, h_ex, n, grid_n | h_factor}),
    ``seed_recipe``, ``tolerances`` ({grad, max_iter}), ``seed``, ``method``.
    """
    runs = plan.get("runs", [])
    dom_d = plan.get("domain", {"shape": "disk", "radius": 1.0})
    tol = plan.get("tolerances", {})
    records, results = [], []
    for k, run in enumerate(runs):
        eps = float(run["epsilon"])
        if "grid_n" in run:
            gn = int(run["grid_n"])
        else:
            gn = int(round(float(run.get("h_factor", 4)) / eps))
        dom = Domain.from_dict({**dom_d, "grid_n": gn})
        if eps < 4 * dom.h * (1 - 1e-9):
            rec = {"index": k, "epsilon": eps, "error": "epsilon below the 4h resolution floor"}
            records.append(rec)
            results.append(None)
        else:
            try:
                res, rec = sweep_member(dom, eps, float(run["h_ex"]), int(run["n"]),
                                        plan.get("seed_recipe", "wn"), float(tol.get("grad", 1e-5)),
                                        int(tol.get("max_iter", 3000)), plan.get("method", "lbfgs"),
                                        int(plan.get("seed", 0)))
                rec["index"] = k
                records.append(rec)
                results.append(res)
            except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
                records.append({"index": k, "epsilon": eps, "error": f"{type(exc).__name__}: {exc}"})
                results.append(None)
        if log_path is not None:
            with open(log_path, "a") as fh:
                fh.write(json.dumps(records[-1], sort_keys=True) + "\n")
    return results, records
