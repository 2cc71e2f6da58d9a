"""Boundary Fourier fields, harmonic extension and the Dirichlet-to-Neumann map.

Everything here is closed form per Fourier mode.  The disc is the unit disc
with its flat metric.  The cylinder carries the flat unit-area metric

    g_a = (2 pi)^-2 (a^-1 dx^2 + a dtheta^2)   on [-pi, pi] x S^1,

and all interior work happens in the conformal chart s = x / a, where
g_a = lambda^2 (ds^2 + dtheta^2) with lambda = sqrt(a) / (2 pi) and
s in [-L, L], L = pi / a.  Only boundary operators need the factor lambda.

Circle 0 of a cylinder field is the top boundary (s = +L), circle 1 the
bottom boundary (s = -L).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "GridTooSmall",
    "CylinderMetric",
    "Domain",
    "BoundaryField",
    "HarmonicExtension",
    "analyze",
    "synthesize",
    "theta_grid",
    "harmonic_extend",
    "dtn",
    "half_energy",
    "boundary_inner",
    "boundary_norm",
    "tangential_derivative",
    "mode_numbers",
    "chart_weights",
    "cylinder_mode_factors",
]


class GridTooSmall(ValueError):
    """Raised when a physical grid cannot carry the requested number of modes."""


@dataclass(frozen=True)
class CylinderMetric:
    """Flat unit-area cylinder metric g_a with geodesic boundary circles."""

    a: float

    def __post_init__(self):
        a = float(self.a)
        if not (math.isfinite(a) and a > 0.0):
            raise ValueError(f"cylinder metric parameter must be finite and > 0, got {self.a!r}")
        object.__setattr__(self, "a", a)

    @property
    def boundary_length(self) -> float:
        return math.sqrt(self.a)

    @property
    def conformal_half_length(self) -> float:
        return math.pi / self.a

    @property
    def conformal_factor(self) -> float:
        """lambda with g_a = lambda^2 (ds^2 + dtheta^2)."""
        return math.sqrt(self.a) / (2.0 * math.pi)

    @property
    def area(self) -> float:
        # lambda^2 * (2L) * 2pi, identically one
        lam = self.conformal_factor
        return lam * lam * 2.0 * self.conformal_half_length * 2.0 * math.pi

    @property
    def injectivity_radius(self) -> float:
        return 0.5 * math.sqrt(min(self.a, 1.0 / self.a))


@dataclass(frozen=True)
class Domain:
    """Either the unit disc or a cylinder carrying a :class:`CylinderMetric`."""

    kind: str
    metric: Optional[CylinderMetric] = None

    def __post_init__(self):
        if self.kind == "disc":
            if self.metric is not None:
                raise ValueError("the disc carries no metric parameter")
        elif self.kind == "cylinder":
            if not isinstance(self.metric, CylinderMetric):
                raise ValueError("a cylinder domain needs a CylinderMetric")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def disc(cls) -> "Domain":
        return cls("disc")

    @classmethod
    def cylinder(cls, a: float) -> "Domain":
        return cls("cylinder", CylinderMetric(a))

    @property
    def n_circles(self) -> int:
        return 1 if self.kind == "disc" else 2

    @property
    def is_cylinder(self) -> bool:
        return self.kind == "cylinder"

    def with_a(self, a: float) -> "Domain":
        return Domain.cylinder(a)


def mode_numbers(K: int) -> np.ndarray:
    return np.arange(-K, K + 1)


@dataclass(frozen=True)
class BoundaryField:
    """Truncated Fourier representation of a map from the boundary circles to R^n.

    ``coeffs`` has shape ``(n_circles, ambient_dim, 2K+1)``; the last axis
    holds the modes k = -K..K in increasing order.  ``grid_size`` is the
    number of physical samples M used by :func:`synthesize`.
    """

    coeffs: np.ndarray
    grid_size: int = field(default=0)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 3 or c.shape[2] % 2 != 1:
            raise ValueError("coeffs must have shape (n_circles, n, 2K+1)")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite Fourier coefficients")
        K = c.shape[2] // 2
        M = int(self.grid_size) if self.grid_size else max(4 * K, 2 * K + 1)
        if M < 2 * K + 1:
            raise GridTooSmall(f"grid of {M} points cannot carry {K} modes")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "grid_size", M)

    @property
    def K(self) -> int:
        return self.coeffs.shape[2] // 2

    @property
    def n_circles(self) -> int:
        return self.coeffs.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.coeffs.shape[1]

    def mode(self, k: int) -> np.ndarray:
        return self.coeffs[:, :, k + self.K]

    def replace(self, coeffs: np.ndarray) -> "BoundaryField":
        return BoundaryField(coeffs, self.grid_size)

    def resized(self, K: int) -> "BoundaryField":
        """Zero-pad or truncate to K modes (grid follows the 4K default)."""
        out = np.zeros((self.n_circles, self.ambient_dim, 2 * K + 1), dtype=np.complex128)
        m = min(K, self.K)
        out[:, :, K - m:K + m + 1] = self.coeffs[:, :, self.K - m:self.K + m + 1]
        return BoundaryField(out, 4 * K)

    def __add__(self, other: "BoundaryField") -> "BoundaryField":
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other: "BoundaryField") -> "BoundaryField":
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "BoundaryField":
        return self.replace(self.coeffs * s)

    __rmul__ = __mul__

    def __neg__(self) -> "BoundaryField":
        return self.replace(-self.coeffs)

    @classmethod
    def constant(cls, values: Sequence[Sequence[float]], K: int) -> "BoundaryField":
        v = np.atleast_2d(np.asarray(values, dtype=float))
        c = np.zeros(v.shape + (2 * K + 1,), dtype=np.complex128)
        c[:, :, K] = v
        return cls(c, 4 * K)


# -- transforms ----------------------------------------------------------------

def _analyze_array(samples: np.ndarray, K: int) -> np.ndarray:
    M = samples.shape[-1]
    half = np.fft.rfft(samples, axis=-1)[..., :K + 1] / M
    out = np.empty(samples.shape[:-1] + (2 * K + 1,), dtype=np.complex128)
    out[..., K:] = half
    out[..., :K] = np.conj(half[..., :0:-1])
    out[..., K] = out[..., K].real
    return out


def _synthesize_array(coeffs: np.ndarray, M: int) -> np.ndarray:
    K = coeffs.shape[-1] // 2
    return np.fft.irfft(coeffs[..., K:] * M, n=M, axis=-1)


def analyze(samples, K: int) -> BoundaryField:
    """Fourier coefficients (|k| <= K) of samples on a uniform theta grid.

    ``samples`` has shape ``(n_circles, n, M)`` (a 2-D array is read as one
    circle).  Exact on band-limited input.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim == 2:
        s = s[None]
    if s.ndim != 3:
        raise ValueError("samples must have shape (n_circles, n, M)")
    M = s.shape[-1]
    if M < 2 * K + 1:
        raise GridTooSmall(f"grid of {M} points cannot resolve {K} modes")
    return BoundaryField(_analyze_array(s, K), M)


def synthesize(u: BoundaryField, M: Optional[int] = None) -> np.ndarray:
    """Physical samples on the uniform grid theta_j = 2 pi j / M."""
    M = u.grid_size if M is None else int(M)
    if M < 2 * u.K + 1:
        raise GridTooSmall(f"grid of {M} points cannot carry {u.K} modes")
    return _synthesize_array(u.coeffs, M)


def theta_grid(M: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(M) / M


# -- cylinder per-mode factors ---------------------------------------------------

def cylinder_mode_factors(K: int, L: float):
    """tanh(kL), coth(kL), sech^2(kL), csch^2(kL) for k = 0..K (k = 0 entries unused).

    Written through q = exp(-2kL) so nothing overflows for large kL.
    """
    k = np.arange(K + 1, dtype=float)
    q = np.exp(-2.0 * k * L)
    q[0] = 0.0
    T = (1.0 - q) / (1.0 + q)
    C = (1.0 + q) / (1.0 - q)
    sech2 = 4.0 * q / (1.0 + q) ** 2
    csch2 = 4.0 * q / (1.0 - q) ** 2
    return T, C, sech2, csch2


def _sum_diff(c: np.ndarray):
    return 0.5 * (c[0] + c[1]), 0.5 * (c[0] - c[1])


def _check_domain(u: BoundaryField, domain: Domain):
    if u.n_circles != domain.n_circles:
        raise ValueError(
            f"{domain.kind} needs {domain.n_circles} boundary circle(s), field has {u.n_circles}"
        )


def _dtn_chart(c: np.ndarray, L: float) -> np.ndarray:
    """Conformal-chart outward normal derivative, coefficient array in and out."""
    K = c.shape[-1] // 2
    T, C, _, _ = cylinder_mode_factors(K, L)
    absk = np.abs(mode_numbers(K)).astype(float)
    Tk = T[np.abs(mode_numbers(K))]
    Ck = C[np.abs(mode_numbers(K))]
    sig, dlt = _sum_diff(c)
    top = absk * (Tk * sig + Ck * dlt)
    bot = absk * (Tk * sig - Ck * dlt)
    top[..., K] = dlt[..., K] / L
    bot[..., K] = -dlt[..., K] / L
    return np.stack([top, bot])


def _dtn_array(c: np.ndarray, domain: Domain) -> np.ndarray:
    if domain.kind == "disc":
        K = c.shape[-1] // 2
        return c * np.abs(mode_numbers(K))
    g = domain.metric
    return _dtn_chart(c, g.conformal_half_length) / g.conformal_factor


def _energy_array(c: np.ndarray, domain: Domain) -> float:
    K = c.shape[-1] // 2
    absk = np.abs(mode_numbers(K))
    # fsum is correctly rounded, so zero-padding to more modes cannot change the result
    if domain.kind == "disc":
        return np.pi * math.fsum((absk * np.abs(c) ** 2).ravel())
    L = domain.metric.conformal_half_length
    T, C, _, _ = cylinder_mode_factors(K, L)
    sig, dlt = _sum_diff(c)
    s2 = np.sum(np.abs(sig) ** 2, axis=0)
    d2 = np.sum(np.abs(dlt) ** 2, axis=0)
    nz = absk > 0
    terms = absk[nz] * (T[absk[nz]] * s2[nz] + C[absk[nz]] * d2[nz])
    return 2.0 * np.pi * math.fsum(np.append(terms.ravel(), d2[K] / L))


def boundary_weight(domain: Domain) -> float:
    """ds_g / dtheta on each boundary circle."""
    return 1.0 if domain.kind == "disc" else domain.metric.conformal_factor


# -- public operators ------------------------------------------------------------

def dtn(u: BoundaryField, domain: Domain) -> BoundaryField:
    """Outward normal derivative of the harmonic extension, w.r.t. the actual metric."""
    _check_domain(u, domain)
    return u.replace(_dtn_array(u.coeffs, domain))


def half_energy(u: BoundaryField, domain: Domain) -> float:
    """Dirichlet energy of the harmonic extension of ``u``."""
    _check_domain(u, domain)
    return _energy_array(u.coeffs, domain)


def boundary_inner(u: BoundaryField, v: BoundaryField, domain: Domain) -> float:
    """L^2(boundary, ds_g) pairing, summed over circles and ambient coordinates."""
    if u.coeffs.shape != v.coeffs.shape:
        raise ValueError(f"shape mismatch {u.coeffs.shape} vs {v.coeffs.shape}")
    _check_domain(u, domain)
    w = boundary_weight(domain)
    return float(2.0 * np.pi * w * np.real(np.sum(u.coeffs * np.conj(v.coeffs))))


def boundary_norm(u: BoundaryField, domain: Domain) -> float:
    return math.sqrt(max(boundary_inner(u, u, domain), 0.0))


def tangential_derivative(u: BoundaryField, domain: Domain) -> BoundaryField:
    """Derivative along the boundary with respect to unit speed for ds_g."""
    _check_domain(u, domain)
    ik = 1j * mode_numbers(u.K)
    return u.replace(u.coeffs * ik / boundary_weight(domain))


# -- harmonic extension ------------------------------------------------------------

def _cyl_profiles(K: int, L: float, s: np.ndarray):
    """Per-mode radial profiles on the cylinder chart.

    Returns arrays of shape (len(s), K+1) for k = 0..K:
    ch = cosh(ks)/cosh(kL), sh = sinh(ks)/sinh(kL) and their s-derivatives
    dch = k sinh(ks)/cosh(kL), dsh = k cosh(ks)/sinh(kL).  Column 0 holds the
    affine mode: ch = 1, sh = s/L, dch = 0, dsh = 1/L.
    """
    s = np.asarray(s, dtype=float)[:, None]
    k = np.arange(K + 1, dtype=float)[None, :]
    q = np.exp(-2.0 * k * L)
    ep = np.exp(k * (s - L))
    em = np.exp(-k * (s + L))
    plus = ep + em
    minus = ep - em
    with np.errstate(divide="ignore", invalid="ignore"):
        ch = plus / (1.0 + q)
        sh = minus / (1.0 - q)
        dch = k * minus / (1.0 + q)
        dsh = k * plus / (1.0 - q)
    ch[:, 0] = 1.0
    sh[:, 0] = s[:, 0] / L
    dch[:, 0] = 0.0
    dsh[:, 0] = 1.0 / L
    return ch, sh, dch, dsh


@dataclass(frozen=True)
class HarmonicExtension:
    """Mode-wise closed-form harmonic extension of a :class:`BoundaryField`.

    On the disc the mode c_k extends as c_k r^|k| e^{ik theta}.  On the
    cylinder mode k >= 1 extends as A_k cosh(ks) + B_k sinh(ks) and mode 0 as
    A_0 + B_0 s; internally the extension is stored through the boundary
    half-sum ``sigma`` and half-difference ``delta`` so that large kL never
    overflows.
    """

    domain: Domain
    boundary: BoundaryField

    @property
    def conformal_half_length(self) -> Optional[float]:
        return self.domain.metric.conformal_half_length if self.domain.is_cylinder else None

    @property
    def sigma(self) -> np.ndarray:
        return _sum_diff(self.boundary.coeffs)[0]

    @property
    def delta(self) -> np.ndarray:
        return _sum_diff(self.boundary.coeffs)[1]

    @property
    def A(self) -> np.ndarray:
        """Coefficients of cosh(|k|s) (mode 0: the constant term)."""
        L = self.conformal_half_length
        absk = np.abs(mode_numbers(self.boundary.K))
        with np.errstate(over="ignore"):
            return self.sigma / np.cosh(absk * L)

    @property
    def B(self) -> np.ndarray:
        """Coefficients of sinh(|k|s) (mode 0: the coefficient of s)."""
        L = self.conformal_half_length
        absk = np.abs(mode_numbers(self.boundary.K))
        with np.errstate(over="ignore", divide="ignore"):
            out = self.delta / np.sinh(absk * L)
        out[..., self.boundary.K] = self.delta[..., self.boundary.K] / L
        return out

    def mode_profiles(self, r):
        """Mode coefficients of u and of its normal-coordinate derivative at depth ``r``.

        For the disc ``r`` is the radius; for the cylinder it is the chart
        coordinate s.  Returns two arrays of shape (len(r), n, 2K+1): the
        coefficient of e^{ik theta} in u and in du/dr (or du/ds).
        """
        K = self.boundary.K
        r = np.atleast_1d(np.asarray(r, dtype=float))
        absk = np.abs(mode_numbers(K))
        if self.domain.kind == "disc":
            c = self.boundary.coeffs[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                pw = r[:, None] ** absk[None, :]
                dpw = np.where(absk[None, :] > 0, absk[None, :] * r[:, None] ** (absk[None, :] - 1.0), 0.0)
            return pw[:, None, :] * c[None], dpw[:, None, :] * c[None]
        L = self.conformal_half_length
        ch, sh, dch, dsh = _cyl_profiles(K, L, r)
        sig, dlt = self.sigma, self.delta
        vals = ch[:, absk][:, None, :] * sig[None] + sh[:, absk][:, None, :] * dlt[None]
        ders = dch[:, absk][:, None, :] * sig[None] + dsh[:, absk][:, None, :] * dlt[None]
        return vals, ders

    def evaluate(self, r, M: int) -> np.ndarray:
        """Values on the tensor grid (r_i, theta_j), shape (len(r), n, M)."""
        vals, _ = self.mode_profiles(r)
        return _synthesize_array(vals, M)

    def gradient(self, r, M: int):
        """(d/dr, d/dtheta) of the extension on the grid, each of shape (len(r), n, M)."""
        vals, ders = self.mode_profiles(r)
        ik = 1j * mode_numbers(self.boundary.K)
        return _synthesize_array(ders, M), _synthesize_array(vals * ik, M)

    def trace(self) -> BoundaryField:
        """Boundary values recovered from the extension itself."""
        if self.domain.kind == "disc":
            vals, _ = self.mode_profiles([1.0])
            return self.boundary.replace(vals)
        L = self.conformal_half_length
        vals, _ = self.mode_profiles([L, -L])
        return self.boundary.replace(vals)


def harmonic_extend(u: BoundaryField, domain: Domain) -> HarmonicExtension:
    _check_domain(u, domain)
    return HarmonicExtension(domain, u)


def chart_weights(L: float, K: int, panel_width: Optional[float] = None, order: int = 16):
    """Composite Gauss-Legendre nodes and weights on [-L, L].

    Panels are at most 4/K wide so the boundary layers exp(k(s - L)) of the
    highest modes are integrated to machine precision.
    """
    if panel_width is None:
        panel_width = 4.0 / max(K, 1)
    n_panels = max(1, int(math.ceil(2.0 * L / panel_width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-L, L, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
