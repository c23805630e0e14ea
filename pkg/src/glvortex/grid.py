"""Lattice domains, link-variable gauge calculus and the Ginzburg-Landau energies.

Conventions
-----------
Nodes sit at ``(x0 + i*h, y0 + j*h)`` and arrays are indexed ``[i, j]`` (x first).
The order parameter ``u`` is a complex node array of shape ``domain.shape``.

A link-layout :class:`VectorField` stores ``x[i, j]`` on the link (i,j)->(i+1,j) and
``y[i, j]`` on the link (i,j)->(i,j+1); the trailing row/column is padding.
Plaquette scalars are stored at the lower-left node of the plaquette.

Every link and plaquette is *owned* by its lower-left node, so energy densities
live on nodes and region sums are exactly additive over disjoint node masks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass(frozen=True)
class Domain:
    """A disk or rectangle sampled with ``grid_n`` cells per unit length."""

    shape: str = "disk"
    grid_n: int = 64
    radius: float = 1.0
    width: float = 2.0
    height: float = 2.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.shape not in ("disk", "rectangle"):
            raise ValueError(f"unknown domain shape {self.shape!r}")
        if self.grid_n <= 0:
            raise ValueError("grid_n must be positive")
        for size in self.extent:
            cells = size * self.grid_n
            if abs(cells - round(cells)) > 1e-9:
                raise ValueError("domain extent must be a whole number of cells")

    @classmethod
    def unit_disk(cls, grid_n: int = 128) -> Domain:
        return cls("disk", grid_n=grid_n)

    @classmethod
    def disk(cls, radius: float, grid_n: int, center=(0.0, 0.0)) -> Domain:
        return cls("disk", grid_n=grid_n, radius=float(radius), center=tuple(center))

    @classmethod
    def rectangle(cls, width: float, height: float, grid_n: int, center=(0.0, 0.0)) -> Domain:
        return cls("rectangle", grid_n=grid_n, width=float(width), height=float(height),
                   center=tuple(center))

    @classmethod
    def from_dict(cls, d: dict) -> Domain:
        d = dict(d)
        if "center" in d:
            d["center"] = tuple(d["center"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {"shape": self.shape, "grid_n": self.grid_n, "radius": self.radius,
                "width": self.width, "height": self.height, "center": list(self.center)}

    # geometry ---------------------------------------------------------------
    @property
    def extent(self) -> tuple[float, float]:
        if self.shape == "disk":
            return 2 * self.radius, 2 * self.radius
        return self.width, self.height

    @property
    def h(self) -> float:
        return 1.0 / self.grid_n

    @property
    def cells(self) -> tuple[int, int]:
        w, hgt = self.extent
        return int(round(w * self.grid_n)), int(round(hgt * self.grid_n))

    @property
    def shape2(self) -> tuple[int, int]:
        nx, ny = self.cells
        return nx + 1, ny + 1

    @property
    def origin(self) -> tuple[float, float]:
        w, hgt = self.extent
        return self.center[0] - w / 2, self.center[1] - hgt / 2

    @property
    def area(self) -> float:
        if self.shape == "disk":
            return np.pi * self.radius ** 2
        return self.width * self.height

    @cached_property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.shape2[0])

    @cached_property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.shape2[1])

    @cached_property
    def XY(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def signed_distance(self, x, y):
        """Distance to the boundary, positive inside."""
        x = np.asarray(x, float) - self.center[0]
        y = np.asarray(y, float) - self.center[1]
        if self.shape == "disk":
            return self.radius - np.hypot(x, y)
        return np.minimum(self.width / 2 - np.abs(x), self.height / 2 - np.abs(y))

    def contains(self, x, y, tol: float | None = None):
        tol = 1e-9 * self.h if tol is None else tol
        return self.signed_distance(x, y) >= -tol

    def boundary_pieces(self) -> list[tuple]:
        """Boundary description consumed by the elliptic solvers."""
        if self.shape == "disk":
            return [("disk_in", self.center, self.radius)]
        return [("rect_in", self.center, self.width, self.height)]

    # masks --------------------------------------------------------------------
    @cached_property
    def node_mask(self) -> np.ndarray:
        X, Y = self.XY
        return self.contains(X, Y)

    @cached_property
    def interior_mask(self) -> np.ndarray:
        X, Y = self.XY
        return self.signed_distance(X, Y) > 1e-9 * self.h

    @cached_property
    def link_masks(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.node_mask
        mx = np.zeros_like(m)
        my = np.zeros_like(m)
        mx[:-1, :] = m[:-1, :] & m[1:, :]
        my[:, :-1] = m[:, :-1] & m[:, 1:]
        return mx, my

    @cached_property
    def plaquette_mask(self) -> np.ndarray:
        m = self.node_mask
        mp = np.zeros_like(m)
        mp[:-1, :-1] = m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]
        return mp

    @cached_property
    def plaquette_centers(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = self.XY
        return X + self.h / 2, Y + self.h / 2

    def discrete_area(self) -> float:
        return float(self.node_mask.sum()) * self.h ** 2

    def check_field(self, arr, name="field"):
        if np.shape(arr) != self.shape2:
            raise ValueError(f"{name} has shape {np.shape(arr)}, domain expects {self.shape2}")


@dataclass
class VectorField:
    """Pair of component arrays tagged with their layout ('link' or 'node')."""

    x: np.ndarray
    y: np.ndarray
    layout: str = "link"

    def __post_init__(self):
        if self.layout not in ("link", "node"):
            raise ValueError(f"unknown layout {self.layout!r}")
        if np.shape(self.x) != np.shape(self.y):
            raise ValueError("component shapes differ")

    @classmethod
    def zeros(cls, domain: Domain, layout="link") -> VectorField:
        return cls(np.zeros(domain.shape2), np.zeros(domain.shape2), layout)

    def copy(self) -> VectorField:
        return VectorField(self.x.copy(), self.y.copy(), self.layout)

    def __add__(self, other: VectorField) -> VectorField:
        _same_layout(self, other)
        return VectorField(self.x + other.x, self.y + other.y, self.layout)

    def __sub__(self, other: VectorField) -> VectorField:
        _same_layout(self, other)
        return VectorField(self.x - other.x, self.y - other.y, self.layout)

    def __mul__(self, c) -> VectorField:
        return VectorField(self.x * c, self.y * c, self.layout)

    __rmul__ = __mul__

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.x, self.y)


@dataclass(frozen=True)
class GLParams:
    epsilon: float
    h_ex: float = 0.0
    alpha: float = 0.8
    beta: float = 0.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.h_ex < 0:
            raise ValueError("h_ex must be nonnegative")


def _same_layout(a: VectorField, b: VectorField):
    if a.layout != b.layout:
        raise ValueError(f"layout mismatch: {a.layout} vs {b.layout}")


def _check_pair(u, A: VectorField, domain: Domain):
    domain.check_field(u, "u")
    if A.layout != "link":
        raise ValueError("gauge potential must use the link layout")
    domain.check_field(A.x, "A")


def _shift(a, axis):
    """a[i+1] along axis with zero padding at the end."""
    out = np.zeros_like(a)
    if axis == 0:
        out[:-1, :] = a[1:, :]
    else:
        out[:, :-1] = a[:, 1:]
    return out


# link calculus ----------------------------------------------------------------

def link_gradient(phi, domain: Domain) -> VectorField:
    """Forward differences of a node scalar, one value per link."""
    domain.check_field(phi, "phi")
    mx, my = domain.link_masks
    gx = (_shift(phi, 0) - phi) / domain.h
    gy = (_shift(phi, 1) - phi) / domain.h
    return VectorField(np.where(mx, gx, 0.0), np.where(my, gy, 0.0))


def curl(A: VectorField, domain: Domain) -> np.ndarray:
    """Plaquette circulation of a link field divided by h^2."""
    h = domain.h
    c = (_shift(A.y, 0) - A.y - _shift(A.x, 1) + A.x) / h
    return np.where(domain.plaquette_mask, c, 0.0)


def divergence(A: VectorField, domain: Domain) -> np.ndarray:
    """Node divergence of a link field; links outside the domain carry zero flux."""
    mx, my = domain.link_masks
    ax = np.where(mx, A.x, 0.0)
    ay = np.where(my, A.y, 0.0)
    d = ax.copy()
    d[1:, :] -= ax[:-1, :]
    d += ay
    d[:, 1:] -= ay[:, :-1]
    return np.where(domain.node_mask, d / domain.h, 0.0)


def perp_gradient_plaquette(psi, domain: Domain) -> VectorField:
    """Link field grad-perp(psi) = (-d_y psi, d_x psi) for psi on plaquette centers.

    ``psi`` has shape ``domain.cells``; plaquettes beyond the array count as zero.
    The discrete curl of the result equals the 5-point Laplacian of ``psi``.
    """
    nx, ny = domain.cells
    if np.shape(psi) != (nx, ny):
        raise ValueError("plaquette scalar must have shape domain.cells")
    pad = np.zeros((nx + 2, ny + 2))
    pad[1:-1, 1:-1] = psi
    h = domain.h
    ax = np.zeros(domain.shape2)
    ay = np.zeros(domain.shape2)
    # x-link (i,j): plaquette above is (i,j), below is (i,j-1)
    ax[:nx, :] = -(pad[1:-1, 1:] - pad[1:-1, :-1]) / h
    # y-link (i,j): plaquette right is (i,j), left is (i-1,j)
    ay[:, :ny] = (pad[1:, 1:-1] - pad[:-1, 1:-1]) / h
    mx, my = domain.link_masks
    return VectorField(np.where(mx, ax, 0.0), np.where(my, ay, 0.0))


def covariant_gradient(u, A: VectorField, domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Link-variable covariant derivative D_x u, D_y u (zero on links outside Omega)."""
    _check_pair(u, A, domain)
    h = domain.h
    mx, my = domain.link_masks
    dx = (np.exp(-1j * h * A.x) * _shift(u, 0) - u) / h
    dy = (np.exp(-1j * h * A.y) * _shift(u, 1) - u) / h
    return np.where(mx, dx, 0.0), np.where(my, dy, 0.0)


def covariant_gradient_sq(u, A: VectorField, domain: Domain) -> np.ndarray:
    """|D_x u|^2 + |D_y u|^2 at the owner node."""
    dx, dy = covariant_gradient(u, A, domain)
    return np.abs(dx) ** 2 + np.abs(dy) ** 2


def gauge_transform(u, A: VectorField, phi, domain: Domain):
    """(u e^{i phi}, A + grad_h phi)."""
    return u * np.exp(1j * phi), A + link_gradient(phi, domain)


def energy_density(u, A: VectorField, domain: Domain, epsilon: float, h_ex: float = 0.0,
                   magnetic: bool = True) -> np.ndarray:
    """Node-owned density of G_eps (F_eps when h_ex = 0)."""
    grad2 = covariant_gradient_sq(u, A, domain)
    pot = np.where(domain.node_mask, (1 - np.abs(u) ** 2) ** 2, 0.0) / (2 * epsilon ** 2)
    dens = grad2 + pot
    if magnetic:
        b = curl(A, domain) - h_ex
        dens = dens + np.where(domain.plaquette_mask, b ** 2, 0.0)
    return 0.5 * dens


def _region_sum(dens, domain: Domain, region):
    if region is None:
        region = domain.node_mask
    region = np.asarray(region, bool)
    domain.check_field(region, "region")
    if not region.any():
        warnings.warn("empty region mask, energy reported as 0", RuntimeWarning, stacklevel=3)
        return 0.0
    return float(np.sum(dens[region])) * domain.h ** 2


def free_energy(u, A: VectorField, domain: Domain, epsilon: float, region=None) -> float:
    """F_eps(u, A) restricted to the node mask ``region`` (whole domain by default)."""
    return _region_sum(energy_density(u, A, domain, epsilon), domain, region)


def full_energy(u, A: VectorField, domain: Domain, params: GLParams, region=None) -> float:
    """G_eps(u, A) with applied field params.h_ex."""
    dens = energy_density(u, A, domain, params.epsilon, params.h_ex)
    return _region_sum(dens, domain, region)


def current(u, A: VectorField, domain: Domain) -> VectorField:
    """Supercurrent j = Im(conj(u) D_A u) on links."""
    dx, dy = covariant_gradient(u, A, domain)
    return VectorField(np.imag(np.conj(u) * dx), np.imag(np.conj(u) * dy))


def vorticity(u, A: VectorField, domain: Domain) -> tuple[np.ndarray, float]:
    """Plaquette vorticity curl j + curl A and its integral over the domain."""
    mu = curl(current(u, A, domain), domain) + curl(A, domain)
    mu = np.where(domain.plaquette_mask, mu, 0.0)
    return mu, float(mu.sum()) * domain.h ** 2


# Coulomb gauge ------------------------------------------------------------------

_NEUMANN_CACHE: dict = {}


def _neumann_solver(domain: Domain):
    if domain in _NEUMANN_CACHE:
        return _NEUMANN_CACHE[domain]
    m = domain.node_mask
    idx = -np.ones(domain.shape2, dtype=np.int64)
    idx[m] = np.arange(m.sum())
    mx, my = domain.link_masks
    rows, cols, vals = [], [], []
    for mask, di, dj in ((mx, 1, 0), (my, 0, 1)):
        i, j = np.nonzero(mask)
        a = idx[i, j]
        b = idx[i + di, j + dj]
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [np.ones(a.size), np.ones(a.size), -np.ones(a.size), -np.ones(a.size)]
    n = int(m.sum())
    L = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsc()
    # pin the first node; the dropped equation is implied by the others
    L = L[1:, :][:, 1:] / domain.h ** 2
    lu = spla.splu(L.tocsc())
    _NEUMANN_CACHE[domain] = (idx, lu)
    return idx, lu


def coulomb_project(A: VectorField, domain: Domain, return_potential: bool = False,
                    tol: float = 1e-8):
    """Remove the gradient part of A: returns A - grad psi with -div(grad psi) = -div A.

    The result has vanishing discrete divergence and zero flux through the boundary.
    """
    if A.layout != "link":
        raise ValueError("coulomb_project expects a link field")
    idx, lu = _neumann_solver(domain)
    m = domain.node_mask
    rhs = -divergence(A, domain)[m]
    psi_v = np.zeros(rhs.size)
    psi_v[1:] = lu.solve(rhs[1:])
    psi = np.zeros(domain.shape2)
    psi[m] = psi_v
    out = A - link_gradient(psi, domain)
    mx, my = domain.link_masks
    out = VectorField(np.where(mx, out.x, 0.0), np.where(my, out.y, 0.0))
    res = np.max(np.abs(divergence(out, domain)))
    scale = max(1.0, np.max(np.abs(A.x)) + np.max(np.abs(A.y)))
    if res > tol * scale:
        raise RuntimeError(f"Coulomb projection residual {res:.3e} exceeds {tol * scale:.3e}")
    if return_potential:
        return out, psi
    return out
