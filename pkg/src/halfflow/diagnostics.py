"""Residuals, variation-formula checks, local energy, winding numbers, catenoids."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .metric import horizontal_pairing, horizontal_residual, stress_energy
from .spectral import (
    BoundaryField,
    Domain,
    _dtn_array,
    _sum_diff,
    _synthesize_array,
    analyze,
    boundary_weight,
    half_energy,
    harmonic_extend,
    mode_numbers,
)
from .targets import TargetManifold

__all__ = [
    "ResidualReport",
    "FDCheck",
    "NoCatenoid",
    "WindingUndersampled",
    "CatenoidReference",
    "residuals",
    "half_harmonic_residual",
    "conformality_residual",
    "tangent_dtn_grid",
    "fd_check_map_variation",
    "fd_check_metric_variation",
    "cutoff",
    "local_energy_profile",
    "local_energy_scan",
    "winding_number",
    "catenoid_critical_ratio",
    "catenoid_reference",
    "straight_cylinder",
]


@dataclass(frozen=True)
class ResidualReport:
    half_harmonic_residual: float
    conformality_residual: float
    horizontal_residual: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "half_harmonic_residual": self.half_harmonic_residual,
            "conformality_residual": self.conformality_residual,
            "horizontal_residual": self.horizontal_residual,
        }


class FDCheck(NamedTuple):
    rel_error: float
    numeric: float
    analytic: float


class NoCatenoid(ValueError):
    """No catenoid connects the two circles (the ratio h / r is too large)."""


class WindingUndersampled(ValueError):
    pass


# -- residuals ---------------------------------------------------------------------

def _grid_points(u: BoundaryField, M: Optional[int] = None):
    M = u.grid_size if M is None else M
    g = _synthesize_array(u.coeffs, M)  # (nc, n, M)
    return np.ascontiguousarray(np.swapaxes(g, 1, 2).reshape(-1, u.ambient_dim)), M


def tangent_dtn_grid(u: BoundaryField, domain: Domain, N: TargetManifold):
    """P_u(d_nu u_g) and d_nu u_g on the physical grid, each of shape (nc * M, n)."""
    pts, M = _grid_points(u)
    d = _synthesize_array(_dtn_array(u.coeffs, domain), M)
    d = np.ascontiguousarray(np.swapaxes(d, 1, 2).reshape(-1, u.ambient_dim))
    return N.tangent_project(pts, d), d


def half_harmonic_residual(u: BoundaryField, domain: Domain, N: TargetManifold) -> float:
    """||P_u d_nu u_g||_{L^2(boundary, ds_g)} by the trapezoid rule on the grid."""
    pd, _ = tangent_dtn_grid(u, domain, N)
    w = boundary_weight(domain) * 2.0 * math.pi / u.grid_size
    return math.sqrt(w * float(np.sum(pd * pd)))


def _disc_hopf_norm_sq(c: np.ndarray) -> float:
    # u_z = f'(z) = sum_m (m+1) c_{m+1} z^m ; phi = u_z . u_z = sum_j b_j z^j
    K = c.shape[-1] // 2
    fp = c[0][:, K + 1:] * np.arange(1, K + 1)  # (n, K)
    b = sum(np.convolve(fp[i], fp[i]) for i in range(fp.shape[0]))
    j = np.arange(b.size)
    return float(np.sum(np.abs(b) ** 2 * np.pi / (j + 1.0)))


def _cylinder_hopf_norm_sq(c: np.ndarray, L: float) -> float:
    """int |phi|^2 ds dtheta over the chart, phi the Hopf differential coefficient.

    Coefficients of u_w in e^{kw} are scaled by e^{|k|L} so every product
    carries a non-positive exponent.
    """
    K = c.shape[-1] // 2
    ks = mode_numbers(K)
    absk = np.abs(ks).astype(float)
    q = np.exp(-2.0 * absk * L)
    sig, dlt = _sum_diff(c)
    with np.errstate(divide="ignore", invalid="ignore"):
        at = sig / (1.0 + q) + np.sign(ks) * dlt / (1.0 - q)
    e = ks * at
    e[:, K] = dlt[:, K].real / L * 0.5
    P = e.T @ e  # complex bilinear pairing of coefficient vectors
    kk = ks[:, None] + ks[None, :]
    W = np.exp((np.abs(kk) - absk[:, None] - absk[None, :]) * L)
    PW = (P * W)[:, ::-1]
    total = 0.0
    for j in range(-2 * K, 2 * K + 1):
        dj = np.trace(PW, offset=-j)  # anti-diagonal k + l = j
        if j == 0:
            total += abs(dj) ** 2 * 2.0 * math.pi * 2.0 * L
        else:
            m = abs(j)
            total += abs(dj) ** 2 * 2.0 * math.pi * (-math.expm1(-4.0 * m * L)) / (2.0 * m)
    return total


def conformality_residual(u: BoundaryField, domain: Domain) -> float:
    """||k(u_g, g)||_{L^2(Sigma, g)} in closed form through the Hopf differential.

    |k|^2 = 8 |phi|^2 pointwise in a conformal chart, with phi = u_z . u_z.
    """
    if domain.kind == "disc":
        return math.sqrt(8.0 * _disc_hopf_norm_sq(u.coeffs))
    g = domain.metric
    val = (2.0 * math.pi) ** 2 / g.a * 8.0 * _cylinder_hopf_norm_sq(u.coeffs, g.conformal_half_length)
    return math.sqrt(max(val, 0.0))


def residuals(u: BoundaryField, domain: Domain, N: TargetManifold) -> ResidualReport:
    hh = half_harmonic_residual(u, domain, N)
    conf = conformality_residual(u, domain)
    hor = horizontal_residual(u, domain.metric) if domain.is_cylinder else None
    return ResidualReport(hh, conf, hor)


# -- variation formulas --------------------------------------------------------------

def _richardson(f, steps):
    h1, h2 = steps
    d1 = (f(h1) - f(-h1)) / (2.0 * h1)
    d2 = (f(h2) - f(-h2)) / (2.0 * h2)
    return (h1 * h1 * d2 - h2 * h2 * d1) / (h1 * h1 - h2 * h2)


def _rel(num, ana):
    scale = max(abs(num), abs(ana), 1e-300)
    return abs(num - ana) / scale


def fd_check_map_variation(
    u: BoundaryField, v: BoundaryField, domain: Domain, N: TargetManifold, steps=(1e-4, 1e-5)
) -> FDCheck:
    """Finite-difference check of d/de E(pi(u + e v)) = int v . P_u(d_nu u_g) ds_g."""
    pts, M = _grid_points(u)
    vpts, _ = _grid_points(v, M)
    nc, n, K = u.n_circles, u.ambient_dim, u.K

    def energy(eps):
        q = N.nearest_point(pts + eps * vpts)
        samples = np.swapaxes(q.reshape(nc, M, n), 1, 2)
        return half_energy(analyze(samples, K), domain)

    numeric = _richardson(energy, steps)
    pd, _ = tangent_dtn_grid(u, domain, N)
    analytic = boundary_weight(domain) * 2.0 * math.pi / M * float(np.sum(vpts * pd))
    return FDCheck(_rel(numeric, analytic), numeric, analytic)


def fd_check_metric_variation(u: BoundaryField, g, steps=(1e-4, 1e-5)) -> FDCheck:
    """Central difference of a -> E(u, g_a) against -1/2 <d g_a/da, k> by quadrature."""
    a = g.a if hasattr(g, "a") else float(g)

    def energy(da):
        return half_energy(u, Domain.cylinder(a * (1.0 + da)))

    numeric = _richardson(energy, steps) / a
    dom = Domain.cylinder(a)
    analytic = -0.5 * horizontal_pairing(stress_energy(harmonic_extend(u, dom)))
    return FDCheck(_rel(numeric, analytic), numeric, analytic)


# -- local energy ----------------------------------------------------------------------

def cutoff(d, r):
    """1 on [0, r/2], 0 beyond r, quintic smoothstep in between."""
    t = np.clip((r - np.asarray(d, dtype=float)) / (0.5 * r), 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def _composite_gl(depth, K, width=None, order=16, grade_from=None):
    """Composite Gauss-Legendre nodes on [0, depth].

    Panels are at most ``width`` wide (and 4/K, to resolve the modes).  With
    ``grade_from`` set, panels beyond that depth may grow like depth / 8.
    """
    cap = 4.0 / max(K, 1)
    width = cap if width is None else min(width, cap)
    if grade_from is None or grade_from >= depth:
        edges = np.linspace(0.0, depth, max(1, int(math.ceil(depth / width))) + 1)
    else:
        inner = max(1, int(math.ceil(grade_from / width)))
        edges = list(np.linspace(0.0, grade_from, inner + 1))
        while edges[-1] < depth:
            h = min(max(width, edges[-1] / 8.0), cap)
            edges.append(min(edges[-1] + h, depth))
        edges = np.asarray(edges)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _radius_bound(domain: Domain) -> float:
    return 1.0 if domain.kind == "disc" else domain.metric.injectivity_radius


def local_energy_profile(u: BoundaryField, domain: Domain, radii: Sequence[float], M_theta: Optional[int] = None):
    """Localised energies E(u_g; B_r(x)) for every boundary grid point x and every r.

    Returns ``(values, thetas)`` with ``values`` of shape (len(radii), nc, M_theta).
    The ball is weighted by :func:`cutoff`; all radii share one quadrature grid,
    so the values are non-decreasing in r.
    """
    radii = [float(r) for r in radii]
    bound = _radius_bound(domain)
    for r in radii:
        if not 0.0 < r < bound:
            raise ValueError(f"radius {r} must lie in (0, {bound})")
    r_max = max(radii)
    K = u.K
    ext = harmonic_extend(u, domain)
    if domain.kind == "disc":
        lam, depth = 1.0, min(r_max, 1.0)
    else:
        lam = domain.metric.conformal_factor
        depth = min(r_max / lam, 2.0 * domain.metric.conformal_half_length)
    if M_theta is None:
        # spacing of at most r/16 in the chart for the smallest radius
        need = 2.0 * math.pi * 16.0 / (min(radii) / lam)
        M_theta = max(u.grid_size, 2 ** int(math.ceil(math.log2(max(need, 2.0)))))
        M_theta = min(M_theta, 8192)
    # panels resolve the cutoff transition of the smallest radius near the boundary;
    # at depth x only radii above lam * x contribute, so panels can widen there
    r_min = min(radii) / lam
    x, wx = _composite_gl(depth, K, width=r_min / 8.0, grade_from=r_min)
    offs = np.arange(M_theta)
    dth = 2.0 * math.pi * np.where(offs <= M_theta // 2, offs, offs - M_theta) / M_theta
    thetas = 2.0 * math.pi * np.arange(M_theta) / M_theta

    circles = []
    if domain.kind == "disc":
        rho = 1.0 - x
        ur, ut = ext.gradient(rho, M_theta)
        dens = 0.5 * (np.sum(ur * ur, axis=1) + np.sum(ut * ut, axis=1) / rho[:, None] ** 2) * rho[:, None]
        circles.append(dens)
        dist = np.sqrt(np.maximum(1.0 + rho[:, None] ** 2 - 2.0 * rho[:, None] * np.cos(dth)[None, :], 0.0))
    else:
        L = domain.metric.conformal_half_length
        for sgn in (1.0, -1.0):
            s = sgn * (L - x)
            us, ut = ext.gradient(s, M_theta)
            circles.append(0.5 * (np.sum(us * us, axis=1) + np.sum(ut * ut, axis=1)))
        dist = lam * np.sqrt(x[:, None] ** 2 + dth[None, :] ** 2)

    out = np.empty((len(radii), len(circles), M_theta))
    for ir, r in enumerate(radii):
        W = cutoff(dist, r) * wx[:, None] * (2.0 * math.pi / M_theta)
        nz = np.nonzero(np.any(W != 0.0, axis=0))[0]
        support = int(np.max(np.abs(np.where(nz <= M_theta // 2, nz, nz - M_theta)))) if nz.size else 0
        W = np.ascontiguousarray(W)
        for ic, dens in enumerate(circles):
            out[ir, ic] = kernels.correlate_circular(np.ascontiguousarray(dens), W, support)
    return out, thetas


def local_energy_scan(u: BoundaryField, domain: Domain, r: float, M_theta: Optional[int] = None):
    """Largest localised energy over boundary points: (value, (circle, theta))."""
    vals, thetas = local_energy_profile(u, domain, [r], M_theta)
    flat = int(np.argmax(vals[0]))
    ic, j = divmod(flat, vals.shape[2])
    return float(vals[0, ic, j]), (ic, float(thetas[j]))


# -- winding numbers ---------------------------------------------------------------------

def winding_number(u: BoundaryField, circle: int = 0, target: Optional[TargetManifold] = None,
                   M: Optional[int] = None) -> int:
    """Degree of the angle of (pi o u) around the x3-axis along one boundary circle."""
    M = u.grid_size if M is None else M
    pts = np.ascontiguousarray(_synthesize_array(u.coeffs[circle], M).T)
    if target is not None:
        pts = target.nearest_point(pts)
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    dphi = np.diff(np.append(phi, phi[0]))
    dphi = (dphi + math.pi) % (2.0 * math.pi) - math.pi
    if np.max(np.abs(dphi)) > 0.5 * math.pi:
        raise WindingUndersampled("adjacent grid points differ by more than pi/2 in angle")
    return int(round(float(np.sum(dphi)) / (2.0 * math.pi)))


# -- catenoids ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatenoidReference:
    u: BoundaryField
    a: float
    half_length: float


def catenoid_critical_ratio():
    """(L_c, max_L L / cosh L); L_c is the root of coth L = L."""
    Lc = brentq(lambda L: 1.0 / math.tanh(L) - L, 0.5, 2.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return Lc, Lc / math.cosh(Lc)


def catenoid_reference(h: float, r: float = 1.0, K: int = 32, branch: str = "stable") -> CatenoidReference:
    """Boundary data and metric parameter of the catenoid spanning the circle pair.

    The catenoid (r / cosh L)(cosh s cos t, cosh s sin t, s), s in [-L, L],
    meets the circles at height +-h when L / cosh L = h / r; the smaller root
    is the stable one.  Its metric parameter is a = pi / L.
    """
    if not (h > 0 and r > 0):
        raise ValueError("need h > 0 and r > 0")
    ratio = h / r
    Lc, top = catenoid_critical_ratio()
    if ratio > top:
        raise NoCatenoid(f"h/r = {ratio:.6g} exceeds max L/cosh L = {top:.6g}")
    f = lambda L: L / math.cosh(L) - ratio  # noqa: E731
    tol = dict(xtol=1e-15, rtol=4 * np.finfo(float).eps)
    if ratio == top:
        L = Lc
    elif branch == "stable":
        L = brentq(f, 1e-12 * ratio, Lc, **tol)
    elif branch == "unstable":
        L = brentq(f, Lc, 60.0, **tol)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    c = np.zeros((2, 3, 2 * K + 1), dtype=np.complex128)
    for ic, z in ((0, h), (1, -h)):
        c[ic, 0, K + 1] = c[ic, 0, K - 1] = 0.5 * r
        c[ic, 1, K + 1] = -0.5j * r
        c[ic, 1, K - 1] = 0.5j * r
        c[ic, 2, K] = z
    return CatenoidReference(BoundaryField(c, 4 * K), math.pi / L, L)


def straight_cylinder(h: float, r: float = 1.0, K: int = 32) -> BoundaryField:
    """Boundary data (r cos t, r sin t, +-h); same as the catenoid trace."""
    c = np.zeros((2, 3, 2 * K + 1), dtype=np.complex128)
    for ic, z in ((0, h), (1, -h)):
        c[ic, 0, K + 1] = c[ic, 0, K - 1] = 0.5 * r
        c[ic, 1, K + 1] = -0.5j * r
        c[ic, 1, K - 1] = 0.5j * r
        c[ic, 2, K] = z
    return BoundaryField(c, 4 * K)

