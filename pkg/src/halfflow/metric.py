"""The flat cylinder metric family g_a and everything the metric evolution needs.

Tensors are sampled in the conformal chart (s, theta), where
g_a = lambda^2 (ds^2 + dtheta^2), lambda^2 = a / (2 pi)^2.  For symmetric
2-tensors k, h the L^2(g_a) pairing reduces to

    <k, h>_{L^2(g_a)} = int lambda^-2 <k, h>_delta ds dtheta.

The direction of the one-dimensional horizontal space is
d g_a / da = (2 pi)^-2 (dtheta^2 - ds^2), whose squared L^2 norm is 2 / a^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import (
    BoundaryField,
    CylinderMetric,
    Domain,
    HarmonicExtension,
    _sum_diff,
    chart_weights,
    cylinder_mode_factors,
    harmonic_extend,
    mode_numbers,
)

__all__ = [
    "CylinderMetric",
    "StressEnergy",
    "stress_energy",
    "horizontal_direction",
    "horizontal_pairing",
    "horizontal_project",
    "tensor_pairing",
    "tensor_norm",
    "metric_direction_norm_sq",
    "metric_velocity",
    "energy_metric_derivative",
    "horizontal_residual",
    "injectivity_radius",
    "collar_width",
    "collar_density",
]


@dataclass(frozen=True)
class StressEnergy:
    """Conformal-chart components of a symmetric 2-tensor on the quadrature grid.

    ``ss``, ``st``, ``tt`` have shape (len(s_nodes), M); theta is the uniform
    grid of M points and ``s_weights`` are the chart quadrature weights in s.
    """

    ss: np.ndarray
    st: np.ndarray
    tt: np.ndarray
    s_nodes: np.ndarray
    s_weights: np.ndarray
    a: float

    @property
    def M(self) -> int:
        return self.ss.shape[1]

    def _same_grid(self, other: "StressEnergy"):
        if self.ss.shape != other.ss.shape or not np.array_equal(self.s_nodes, other.s_nodes):
            raise ValueError("tensors live on different quadrature grids")
        if self.a != other.a:
            raise ValueError("tensors belong to different metrics")

    def scaled(self, c: float) -> "StressEnergy":
        return StressEnergy(c * self.ss, c * self.st, c * self.tt, self.s_nodes, self.s_weights, self.a)

    def trace_defect(self) -> np.ndarray:
        return self.ss + self.tt


def _as_metric(g) -> CylinderMetric:
    if isinstance(g, CylinderMetric):
        return g
    if isinstance(g, Domain) and g.is_cylinder:
        return g.metric
    return CylinderMetric(float(g))


def metric_direction_norm_sq(g) -> float:
    """||d g_a / da||^2 in L^2(g_a)."""
    a = _as_metric(g).a
    return 2.0 / (a * a)


def stress_energy(ext: HarmonicExtension, g=None, M: Optional[int] = None, nodes=None) -> StressEnergy:
    """Sample k(u_g, g) = u_g^* g_R^n - 1/2 |du_g|^2_g g on the chart grid.

    Trace-free tensors have conformally invariant chart components, so
    k_ss = (|u_s|^2 - |u_theta|^2) / 2, k_s theta = u_s . u_theta, k_theta theta = -k_ss.
    """
    if not ext.domain.is_cylinder:
        raise ValueError("stress_energy samples the cylinder chart; use diagnostics for the disc")
    g = ext.domain.metric if g is None else _as_metric(g)
    if abs(g.a - ext.domain.metric.a) > 0:
        ext = harmonic_extend(ext.boundary, Domain.cylinder(g.a))
    K = ext.boundary.K
    L = g.conformal_half_length
    M = 4 * K if M is None else int(M)
    s, w = chart_weights(L, K) if nodes is None else nodes
    us, ut = ext.gradient(s, M)
    kss = 0.5 * (np.sum(us * us, axis=1) - np.sum(ut * ut, axis=1))
    kst = np.sum(us * ut, axis=1)
    return StressEnergy(kss, kst, -kss, np.asarray(s), np.asarray(w), g.a)


def horizontal_direction(like: StressEnergy) -> StressEnergy:
    """d g_a / da sampled on the grid of ``like``."""
    c = (2.0 * math.pi) ** -2
    ones = np.ones_like(like.ss)
    return StressEnergy(-c * ones, 0.0 * ones, c * ones, like.s_nodes, like.s_weights, like.a)


def tensor_pairing(k: StressEnergy, h: StressEnergy) -> float:
    """<k, h>_{L^2(g_a)} by Gauss-Legendre in s and the trapezoid rule in theta."""
    k._same_grid(h)
    lam2 = k.a / (2.0 * math.pi) ** 2
    dot = k.ss * h.ss + 2.0 * k.st * h.st + k.tt * h.tt
    row = dot.sum(axis=1) * (2.0 * math.pi / k.M)
    return float(np.dot(k.s_weights, row) / lam2)


def tensor_norm(k: StressEnergy) -> float:
    return math.sqrt(max(tensor_pairing(k, k), 0.0))


def horizontal_pairing(k: StressEnergy, g=None) -> float:
    """<k, d g_a / da>_{L^2(g_a)} by quadrature (the tensor route)."""
    if g is not None and _as_metric(g).a != k.a:
        raise ValueError("grid belongs to a different metric")
    return tensor_pairing(k, horizontal_direction(k))


def horizontal_project(k: StressEnergy, g=None) -> StressEnergy:
    """L^2-orthogonal projection of k onto the line spanned by d g_a / da."""
    d = horizontal_direction(k)
    c = horizontal_pairing(k, g) / metric_direction_norm_sq(k.a)
    return d.scaled(c)


# -- closed-form routes ------------------------------------------------------------

def _split(u: BoundaryField, g: CylinderMetric):
    if u.n_circles != 2:
        raise ValueError("cylinder fields have two boundary circles")
    K = u.K
    L = g.conformal_half_length
    sig, dlt = _sum_diff(u.coeffs)
    return K, L, sig, dlt


def _hopf_mean(c: np.ndarray, L: float) -> float:
    """Real part of the e^{0 w} coefficient of the Hopf differential (u_w . u_w).

    With u = sum_k (alpha_k e^{ks} + beta_k e^{-ks}) e^{ik theta} + A0 + B0 s,
    u_w = sum_k k alpha_k e^{kw} + B0/2 and the mean coefficient is
    B0.B0/4 - 2 sum_{k>0} k^2 alpha_k . alpha_{-k}.
    """
    K = c.shape[-1] // 2
    sig, dlt = _sum_diff(c)
    k = np.arange(1, K + 1, dtype=float)
    q = np.exp(-2.0 * k * L)
    pos = sig[:, K + 1:] / (1.0 + q) + dlt[:, K + 1:] / (1.0 - q)
    neg = sig[:, K - 1::-1] / (1.0 + q) - dlt[:, K - 1::-1] / (1.0 - q)
    prod = np.sum(pos * neg, axis=0)  # complex bilinear over coordinates
    b0 = dlt[:, K].real / L
    d0 = 0.25 * np.dot(b0, b0) - 2.0 * np.sum(k * k * q * prod)
    return float(np.real(d0))


def metric_velocity(u: BoundaryField, g) -> float:
    """da/dt = (a^2 / 4) <k(u_g, g_a), d g_a / da>, via the Hopf-differential mean.

    The horizontal pairing equals -16 pi L Re(d_0) / a, which gives
    da/dt = -4 pi^2 Re(d_0).
    """
    g = _as_metric(g)
    _, L, _, _ = _split(u, g)
    return -4.0 * math.pi ** 2 * _hopf_mean(u.coeffs, L)


def _energy_L_derivative(c: np.ndarray, L: float) -> float:
    K = c.shape[-1] // 2
    _, _, sech2, csch2 = cylinder_mode_factors(K, L)
    sig, dlt = _sum_diff(c)
    absk = np.abs(mode_numbers(K))
    s2 = np.sum(np.abs(sig) ** 2, axis=0)
    d2 = np.sum(np.abs(dlt) ** 2, axis=0)
    nz = absk > 0
    kk = absk[nz].astype(float)
    val = np.sum(kk * kk * (sech2[absk[nz]] * s2[nz] - csch2[absk[nz]] * d2[nz]))
    val -= d2[K] / (L * L)
    return float(2.0 * math.pi * val)


def energy_metric_derivative(u: BoundaryField, g) -> float:
    """dE_1/2(u, g_a) / da in closed form (mode-wise derivative in L = pi / a)."""
    g = _as_metric(g)
    _, L, _, _ = _split(u, g)
    return -(L / g.a) * _energy_L_derivative(u.coeffs, L)


def horizontal_residual(u: BoundaryField, g) -> float:
    """||P^H k||_{L^2} = |<k, d g_a/da>| / ||d g_a/da|| = sqrt(2) a |dE/da|."""
    g = _as_metric(g)
    return math.sqrt(2.0) * g.a * abs(energy_metric_derivative(u, g))


def injectivity_radius(g) -> float:
    return _as_metric(g).injectivity_radius


# -- hyperbolic collars --------------------------------------------------------------

def collar_width(ell: float) -> float:
    """Width X(l) of the standard collar around a boundary geodesic of length l."""
    if not ell > 0:
        raise ValueError("collar length must be positive")
    return (2.0 * math.pi / ell) * (0.5 * math.pi - math.atan(math.sinh(0.5 * ell)))


def collar_density(ell: float, s):
    """Conformal density rho_l(s) = (l / 2 pi) / cos(l s / 2 pi) on [0, X(l))."""
    X = collar_width(ell)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr >= X):
        raise ValueError(f"collar coordinate must lie in [0, {X})")
    out = (ell / (2.0 * math.pi)) / np.cos(ell * s_arr / (2.0 * math.pi))
    return float(out) if out.ndim == 0 else out
