"""Star-shaped hypersurfaces in hyperbolic space as radial graphs over S^n.

The ambient space is the warped product [0, inf) x S^n with metric
dr^2 + sinh(r)^2 sigma. A star-shaped hypersurface is stored through
phi = log tanh(r/2), the primitive of 1/sinh(r) (additive constant fixed
to zero, so phi < 0 always); this is the variable the flow PDEs are
parabolic in. Two grid modes:

* ``full2d`` (n = 2): staggered latitude-longitude grid, theta_j =
  (j + 1/2) h_theta, periodic xi. Pole values come from the across-pole
  reflection phi(-theta, xi) = phi(theta, xi + pi).
* ``axisym`` (any n >= 2): profile r(theta) of the polar angle only, with
  even reflection at both poles.

All finite differences are second-order centered. On the full grid the
operators are second-order accurate away from the poles and for every
axisymmetric field globally; for fully two-dimensional fields the two
pole-adjacent rows degrade to first order in the max norm (the usual
lat-long cap behavior; the surface-measure norm stays ~O(h^2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._twoval import twoval_e
from .errors import (
    GridResolutionError,
    InvalidInput,
    InvalidShape,
    NotStarShaped,
)

__all__ = [
    "SphereGrid",
    "RadialGraph",
    "CurvatureField",
    "omega_sphere",
    "phi_of_radius",
    "radius_of_phi",
    "sphere_gradient_hessian",
    "sphere_laplacian",
    "curvature",
    "induced_laplacian",
    "support_identity_residuals",
    "make_shape",
    "centered_sphere",
    "offcenter_sphere",
    "perturbed_sphere",
    "custom_profile",
]


def omega_sphere(n: int) -> float:
    """Surface measure of the unit n-sphere, 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
    return float(np.exp(math.log(2.0) + 0.5 * (n + 1) * math.log(math.pi)
                        - math.lgamma(0.5 * (n + 1))))


def phi_of_radius(r):
    return np.log(np.tanh(np.asarray(r, dtype=float) / 2.0))


def radius_of_phi(phi):
    return 2.0 * np.arctanh(np.exp(np.asarray(phi, dtype=float)))


@dataclass(frozen=True)
class SphereGrid:
    """Staggered discretization of S^n (full lat-long grid or polar profile)."""

    mode: str
    n: int
    n_theta: int
    n_xi: int
    h_theta: float
    h_xi: float
    theta: np.ndarray
    sin_t: np.ndarray
    cos_t: np.ndarray

    @classmethod
    def full2d(cls, n_theta: int, n_xi: int | None = None) -> "SphereGrid":
        if n_xi is None:
            n_xi = n_theta
        if n_theta < 8 or n_xi < 8:
            raise GridResolutionError(f"grid {n_theta}x{n_xi} too coarse, need >= 8")
        if n_xi % 2:
            raise GridResolutionError("across-pole reflection needs an even n_xi")
        h_t = math.pi / n_theta
        theta = (np.arange(n_theta) + 0.5) * h_t
        return cls(mode="full2d", n=2, n_theta=n_theta, n_xi=n_xi,
                   h_theta=h_t, h_xi=2.0 * math.pi / n_xi,
                   theta=theta, sin_t=np.sin(theta), cos_t=np.cos(theta))

    @classmethod
    def axisym(cls, n: int, n_theta: int) -> "SphereGrid":
        if n < 2:
            raise InvalidInput("axisym mode needs sphere dimension n >= 2")
        if n_theta < 8:
            raise GridResolutionError(f"n_theta={n_theta} too coarse, need >= 8")
        h_t = math.pi / n_theta
        theta = (np.arange(n_theta) + 0.5) * h_t
        return cls(mode="axisym", n=n, n_theta=n_theta, n_xi=0,
                   h_theta=h_t, h_xi=0.0,
                   theta=theta, sin_t=np.sin(theta), cos_t=np.cos(theta))

    @property
    def shape(self):
        return (self.n_theta, self.n_xi) if self.mode == "full2d" else (self.n_theta,)

    def sigma_weights(self) -> np.ndarray:
        """Per-node quadrature weights for the round measure of S^n."""
        if self.mode == "full2d":
            return np.broadcast_to(
                (self.sin_t * self.h_theta * self.h_xi)[:, None],
                (self.n_theta, self.n_xi),
            ).copy()
        return omega_sphere(self.n - 1) * self.sin_t ** (self.n - 1) * self.h_theta

    def refined(self, factor: int = 2) -> "SphereGrid":
        if self.mode == "full2d":
            return SphereGrid.full2d(self.n_theta * factor, self.n_xi * factor)
        return SphereGrid.axisym(self.n, self.n_theta * factor)


@dataclass(frozen=True)
class RadialGraph:
    """phi samples of a star-shaped hypersurface over a sphere grid."""

    grid: SphereGrid
    phi: np.ndarray

    def __post_init__(self):
        phi = np.ascontiguousarray(np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "phi", phi)
        if phi.shape != self.grid.shape:
            raise InvalidInput(f"phi shape {phi.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(phi)):
            raise InvalidShape("phi contains non-finite values")
        if np.any(phi >= 0.0):
            raise NotStarShaped("phi >= 0 means r is infinite or undefined")

    @classmethod
    def from_radius(cls, grid: SphereGrid, r) -> "RadialGraph":
        r = np.asarray(r, dtype=float)
        if r.ndim == 0:
            r = np.full(grid.shape, float(r))
        if np.any(r <= 0.0) or not np.all(np.isfinite(r)):
            raise InvalidShape("radius must be positive and finite everywhere")
        return cls(grid=grid, phi=phi_of_radius(r))

    @property
    def r(self) -> np.ndarray:
        return radius_of_phi(self.phi)

    def with_phi(self, phi: np.ndarray) -> "RadialGraph":
        return RadialGraph(grid=self.grid, phi=phi)


def sphere_gradient_hessian(graph: RadialGraph):
    """Covariant gradient and Hessian of phi on the round sphere.

    full2d: gradient components (phi_theta, phi_xi) stacked on the last
    axis, Hessian components (theta-theta, theta-xi, xi-xi) including the
    Christoffel corrections of the round metric. axisym: phi' and the two
    distinct Hessian slots (phi'', cot(theta) phi').
    """
    grid = graph.grid
    if grid.mode == "full2d":
        out = _kernels.full2d_curvature(graph.phi, grid.sin_t, grid.cos_t,
                                        grid.h_theta, grid.h_xi)
        _, _, _, _, _, _, _, pt, px, att, atx, axx, _ = out
        grad = np.stack([pt, px], axis=-1)
        hess = np.stack([att, atx, axx], axis=-1)
        return grad, hess
    out = _kernels.axisym_curvature(graph.phi, grid.n, grid.sin_t, grid.cos_t,
                                    grid.h_theta)
    _, _, _, _, _, _, _, pt, ptt, _ = out
    hess = np.stack([ptt, (grid.cos_t / grid.sin_t) * pt], axis=-1)
    return pt, hess


def sphere_laplacian(graph: RadialGraph) -> np.ndarray:
    """Round-metric Laplacian of phi (trace of the covariant Hessian)."""
    grid = graph.grid
    grad, hess = sphere_gradient_hessian(graph)
    if grid.mode == "full2d":
        return hess[..., 0] + hess[..., 2] / grid.sin_t[:, None] ** 2
    return hess[..., 0] + (grid.n - 1) * hess[..., 1]


@dataclass(frozen=True)
class CurvatureField:
    """Per-node geometric data of a radial graph.

    ``kappa_a``/``kappa_b`` carry the two distinct principal curvatures with
    multiplicities ``mult_a``/``mult_b`` (full2d: sorted pair, 1/1; axisym:
    profile direction and the (n-1)-fold angular one). ``E[k]`` is the
    normalized k-th mean curvature, ``static_margin`` the smallest
    generalized eigenvalue of (h - (u/lam') g, g), i.e. min kappa - u/lam',
    and ``area_weight`` the per-node surface measure.
    """

    grid: SphereGrid
    r: np.ndarray
    lam: np.ndarray
    lamp: np.ndarray
    v: np.ndarray
    u: np.ndarray
    kappa_a: np.ndarray
    kappa_b: np.ndarray
    mult_a: int
    mult_b: int
    E: np.ndarray
    static_margin: np.ndarray
    area_weight: np.ndarray
    grad_sq: np.ndarray

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def kappa_min(self) -> np.ndarray:
        return np.minimum(self.kappa_a, self.kappa_b)

    @property
    def kappa_max(self) -> np.ndarray:
        return np.maximum(self.kappa_a, self.kappa_b)

    @property
    def area(self) -> float:
        return float(np.sum(self.area_weight))

    def integrate(self, values) -> float:
        """Surface integral of a per-node field against the area measure."""
        return float(np.sum(values * self.area_weight))


def curvature(graph: RadialGraph) -> CurvatureField:
    """Full curvature extraction: metric, Weingarten spectrum, E_k, margins.

    Principal curvatures come from the symmetric pencil (h_ij, g_ij), which
    is real by construction; an origin-centered sphere returns
    kappa = coth(r0) to round-off because the phi-Hessian vanishes
    identically there.
    """
    grid = graph.grid
    n = grid.n
    if grid.mode == "full2d":
        (r, lam, lamp, v, u, k1, k2, _pt, _px, _att, _atx, _axx, gsq) = (
            _kernels.full2d_curvature(graph.phi, grid.sin_t, grid.cos_t,
                                      grid.h_theta, grid.h_xi)
        )
        ka, kb = k1, k2
        aw = lam**2 * v * grid.sin_t[:, None] * grid.h_theta * grid.h_xi
    else:
        (r, lam, lamp, v, u, kt, kang, _pt, _ptt, gsq) = _kernels.axisym_curvature(
            graph.phi, n, grid.sin_t, grid.cos_t, grid.h_theta
        )
        ka, kb = kt, kang
        aw = (omega_sphere(n - 1) * lam**n * v
              * grid.sin_t ** (n - 1) * grid.h_theta)
    E = np.empty((n + 1,) + r.shape)
    for k in range(n + 1):
        E[k] = twoval_e(ka, kb, n, k)
    margin = np.minimum(ka, kb) - u / lamp
    return CurvatureField(
        grid=grid, r=r, lam=lam, lamp=lamp, v=v, u=u,
        kappa_a=ka, kappa_b=kb, mult_a=1, mult_b=n - 1 if grid.mode == "axisym" else 1,
        E=E, static_margin=margin, area_weight=aw, grad_sq=gsq,
    )


def induced_laplacian(graph: RadialGraph, f: np.ndarray) -> np.ndarray:
    """Flux-form Laplace-Beltrami operator of the induced metric on a field.

    Face coefficients are arithmetic means of sqrt(g) g^{ij} at the nodes;
    pole faces carry exactly zero flux (the transverse measure vanishes
    there), so quadrature sums of the result telescope to zero.
    """
    grid = graph.grid
    phi = graph.phi
    h_t = grid.h_theta
    if grid.mode == "full2d":
        h_x = grid.h_xi
        st = grid.sin_t[:, None]
        pad = _kernels._ghost_rows(phi)
        pt = (pad[2:] - pad[:-2]) / (2.0 * h_t)
        px = (np.roll(phi, -1, axis=1) - np.roll(phi, 1, axis=1)) / (2.0 * h_x)
        _, lam, _ = _kernels._radial(phi)
        v = np.sqrt(1.0 + pt * pt + (px / st) ** 2)
        ctt = st * (v * v - pt * pt) / v
        ctx = -pt * px / (st * v)
        cxx = (v * v * st * st - px * px) / (v * st**3)

        fpad = _kernels._ghost_rows(f)
        ft_node = (fpad[2:] - fpad[:-2]) / (2.0 * h_t)
        fx_node = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * h_x)

        flux_t = 0.5 * (ctt[1:] + ctt[:-1]) * (f[1:] - f[:-1]) / h_t
        flux_t += 0.5 * (ctx[1:] + ctx[:-1]) * 0.5 * (fx_node[1:] + fx_node[:-1])
        div = np.zeros_like(f)
        div[:-1] += flux_t
        div[1:] -= flux_t
        div /= h_t

        cxx_e = np.roll(cxx, -1, axis=1)
        ctx_e = np.roll(ctx, -1, axis=1)
        flux_x = 0.5 * (cxx + cxx_e) * (np.roll(f, -1, axis=1) - f) / h_x
        flux_x += 0.5 * (ctx + ctx_e) * 0.5 * (ft_node + np.roll(ft_node, -1, axis=1))
        div += (flux_x - np.roll(flux_x, 1, axis=1)) / h_x
        return div / (lam * lam * v * st)

    nsph = grid.n
    pad = np.concatenate([phi[:1], phi, phi[-1:]])
    pt = (pad[2:] - pad[:-2]) / (2.0 * h_t)
    _, lam, _ = _kernels._radial(phi)
    v = np.sqrt(1.0 + pt * pt)
    coef = lam ** (nsph - 2) * grid.sin_t ** (nsph - 1) / v
    flux = 0.5 * (coef[1:] + coef[:-1]) * (f[1:] - f[:-1]) / h_t
    div = np.zeros_like(f)
    div[:-1] += flux
    div[1:] -= flux
    return div / (h_t * lam**nsph * v * grid.sin_t ** (nsph - 1))


@dataclass(frozen=True)
class SupportIdentityReport:
    """Residual of the traced support identity Lap_g lam' = n (lam' - u E_1)."""

    residual: np.ndarray
    max_abs: float
    rms: float


def support_identity_residuals(field: CurvatureField, graph: RadialGraph) -> SupportIdentityReport:
    lap = induced_laplacian(graph, field.lamp)
    resid = lap - field.n * (field.lamp - field.u * field.E[1])
    w = field.area_weight / field.area
    rms = float(np.sqrt(np.sum(resid**2 * w)))
    return SupportIdentityReport(residual=resid, max_abs=float(np.abs(resid).max()), rms=rms)


# ---------------------------------------------------------------------------
# Shape constructors
# ---------------------------------------------------------------------------


def centered_sphere(grid: SphereGrid, r0: float) -> RadialGraph:
    if r0 <= 0:
        raise InvalidShape("sphere radius must be positive")
    return RadialGraph.from_radius(grid, np.full(grid.shape, float(r0)))


def offcenter_sphere(grid: SphereGrid, rho: float, d: float) -> RadialGraph:
    """Geodesic sphere of radius rho centered at distance d along the polar axis.

    The graph radius solves cosh(rho) = cosh(d) cosh(r) - sinh(d) sinh(r)
    cos(theta) (hyperbolic law of cosines); writing the left combination as
    a single cosh gives the closed form
    r = artanh(tanh(d) cos(theta)) + arccosh(cosh(rho) / sqrt(1 + sinh(d)^2
    sin(theta)^2)), the unique star-shaped branch.
    """
    if rho <= 0:
        raise InvalidShape("sphere radius must be positive")
    if d < 0 or d >= rho:
        raise NotStarShaped(f"origin outside the ball: need 0 <= d < rho, got d={d}, rho={rho}")
    ct = grid.cos_t
    st = grid.sin_t
    scale = np.sqrt(1.0 + math.sinh(d) ** 2 * st**2)
    r1 = np.arctanh(math.tanh(d) * ct) + np.arccosh(math.cosh(rho) / scale)
    if grid.mode == "full2d":
        r1 = np.broadcast_to(r1[:, None], grid.shape).copy()
    return RadialGraph.from_radius(grid, r1)


def perturbed_sphere(grid: SphereGrid, r0: float, eps: float, m: int) -> RadialGraph:
    """Axisymmetric perturbation r = r0 + eps cos(m theta) of a centered sphere."""
    r1 = r0 + eps * np.cos(m * grid.theta)
    if np.any(r1 <= 0):
        raise InvalidShape(f"perturbation eps={eps} drives the radius non-positive")
    if grid.mode == "full2d":
        r1 = np.broadcast_to(r1[:, None], grid.shape).copy()
    return RadialGraph.from_radius(grid, r1)


def custom_profile(grid: SphereGrid, table: np.ndarray) -> RadialGraph:
    """Radial profile from a two-column (theta, r) table, linearly resampled."""
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 2:
        raise InvalidInput("profile table must have shape (k >= 2, 2)")
    th, rr = table[:, 0], table[:, 1]
    order = np.argsort(th)
    th, rr = th[order], rr[order]
    if np.any(rr <= 0):
        raise InvalidShape("profile radii must be positive")
    r1 = np.interp(grid.theta, th, rr)
    if grid.mode == "full2d":
        r1 = np.broadcast_to(r1[:, None], grid.shape).copy()
    return RadialGraph.from_radius(grid, r1)


_SHAPES = {
    "centered_sphere": centered_sphere,
    "offcenter_sphere": offcenter_sphere,
    "perturbed_sphere": perturbed_sphere,
    "custom_profile": custom_profile,
}


def make_shape(grid: SphereGrid, kind: str, **params) -> RadialGraph:
    """Dispatch to a named shape constructor."""
    try:
        builder = _SHAPES[kind]
    except KeyError:
        raise InvalidInput(f"unknown shape kind {kind!r}; choose from {sorted(_SHAPES)}")
    return builder(grid, **params)
