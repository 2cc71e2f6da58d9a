import numpy as np
import pytest
from hypothesis import settings

from halfflow.spectral import BoundaryField, analyze, synthesize
from halfflow.targets import SphereTarget

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_field(rng, n_circles, n, K, decay=0.35, modes=None):
    """Real band-limited field with geometrically decaying random coefficients."""
    top = K if modes is None else min(modes, K)
    c = np.zeros((n_circles, n, 2 * K + 1), dtype=np.complex128)
    for k in range(top + 1):
        z = (rng.standard_normal((n_circles, n)) + 1j * rng.standard_normal((n_circles, n))) * np.exp(-decay * k)
        if k == 0:
            c[:, :, K] = z.real
        else:
            c[:, :, K + k] = z
            c[:, :, K - k] = np.conj(z)
    return BoundaryField(c, 4 * K)


def circle_coeffs(K, radius=1.0, heights=(0.0,), degree=1):
    """(radius cos(d t), radius sin(d t), z) on each circle."""
    c = np.zeros((len(heights), 3, 2 * K + 1), dtype=np.complex128)
    for i, z in enumerate(heights):
        c[i, 0, K + degree] += 0.5 * radius
        c[i, 0, K - degree] += 0.5 * radius
        c[i, 1, K + degree] += -0.5j * radius
        c[i, 1, K - degree] += 0.5j * radius
        c[i, 2, K] = z
    return c


def project_field(u, N):
    g = synthesize(u)
    nc, n, M = g.shape
    q = N.nearest_point(np.swapaxes(g, 1, 2).reshape(-1, n))
    return analyze(np.swapaxes(q.reshape(nc, M, n), 1, 2), u.K)


def sphere_field(rng, K=32, amp=0.05, modes=3, odd_only=False):
    """Equator of S^2 plus a small random perturbation, projected onto S^2."""
    c = circle_coeffs(K)
    for k in range(1, modes + 1):
        if odd_only and k % 2 == 0:
            continue
        z = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) * amp / k ** 2
        c[0, :, K + k] += z
        c[0, :, K - k] += np.conj(z)
    return project_field(BoundaryField(c, 4 * K), SphereTarget(1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
