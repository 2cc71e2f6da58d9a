"""Pure numpy implementations of the pointwise kernels.

Same signatures and results as the compiled ``_kernels`` module.  Points are
rows of C-contiguous float64 arrays of shape (m, n).
"""
import numpy as np


def sphere_nearest(p, R):
    norm = np.sqrt(np.einsum("ij,ij->i", p, p))
    with np.errstate(divide="ignore", invalid="ignore"):
        nearest = p * (R / norm)[:, None]
    return nearest, np.abs(norm - R), norm


def sphere_tangent(p, w):
    norm2 = np.einsum("ij,ij->i", p, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.einsum("ij,ij->i", p, w) / norm2
    return w - coef[:, None] * p


def circle_pair_nearest(p, r, h):
    rho = np.hypot(p[:, 0], p[:, 1])
    dr = rho - r
    d_top = np.hypot(dr, p[:, 2] - h)
    d_bot = np.hypot(dr, p[:, 2] + h)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = r / rho
    nearest = np.empty_like(p)
    nearest[:, 0] = p[:, 0] * scale
    nearest[:, 1] = p[:, 1] * scale
    nearest[:, 2] = np.where(d_top <= d_bot, h, -h)
    dist = np.minimum(d_top, d_bot)
    return nearest, dist, np.abs(d_top - d_bot), rho


def circle_pair_tangent(p, w):
    rho2 = p[:, 0] ** 2 + p[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = (p[:, 0] * w[:, 1] - p[:, 1] * w[:, 0]) / rho2
    out = np.zeros_like(w)
    out[:, 0] = -coef * p[:, 1]
    out[:, 1] = coef * p[:, 0]
    return out


def correlate_circular(density, weights, support):
    """out[j] = sum_i sum_{|o| <= support} weights[i, o mod M] * density[i, (j + o) mod M]."""
    fd = np.fft.rfft(density, axis=-1)
    fw = np.fft.rfft(weights, axis=-1)
    M = density.shape[-1]
    return np.fft.irfft(np.sum(fd * np.conj(fw), axis=0), n=M)
