import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from halfflow.diagnostics import catenoid_reference
from halfflow.metric import (
    CylinderMetric,
    StressEnergy,
    collar_density,
    collar_width,
    energy_metric_derivative,
    horizontal_direction,
    horizontal_pairing,
    horizontal_project,
    horizontal_residual,
    injectivity_radius,
    metric_direction_norm_sq,
    metric_velocity,
    stress_energy,
    tensor_norm,
    tensor_pairing,
)
from halfflow.spectral import BoundaryField, Domain, half_energy, harmonic_extend

from conftest import circle_coeffs, random_field
from oracles import FROZEN

a_values = st.floats(0.1, 12.0)


def affine(h, K=4):
    c = np.zeros((2, 3, 2 * K + 1), dtype=complex)
    c[0, 2, K], c[1, 2, K] = h, -h
    return BoundaryField(c)


def test_collar_width_oracles():
    assert collar_width(2.0) == pytest.approx(FROZEN["collar_X_2"], rel=1e-14)
    assert collar_width(1e-6) * 1e-6 / math.pi ** 2 == pytest.approx(FROZEN["collar_X_small_scaled"], rel=1e-13)
    assert collar_width(1e-6) * 1e-6 == pytest.approx(math.pi ** 2, rel=1e-5)


def test_collar_density():
    assert collar_density(3.0, 0.0) == pytest.approx(3.0 / (2 * math.pi), rel=1e-15)
    X = collar_width(1.0)
    s = np.linspace(0, 0.99 * X, 7)
    np.testing.assert_allclose(collar_density(1.0, s), (1 / (2 * math.pi)) / np.cos(s / (2 * math.pi)))
    with pytest.raises(ValueError):
        collar_density(1.0, X)
    with pytest.raises(ValueError):
        collar_density(1.0, -0.1)
    with pytest.raises(ValueError):
        collar_width(0.0)


@pytest.mark.parametrize("a,inj", [(1.0, 0.5), (4.0, 0.25), (0.25, 0.25)])
def test_injectivity_radius(a, inj):
    assert injectivity_radius(CylinderMetric(a)) == pytest.approx(inj, rel=1e-15)


@given(a_values)
def test_metric_direction_norm_by_quadrature(a):
    u = affine(0.3)
    k = stress_energy(harmonic_extend(u, Domain.cylinder(a)))
    d = horizontal_direction(k)
    assert tensor_pairing(d, d) == pytest.approx(2.0 / a ** 2, rel=1e-12)
    assert metric_direction_norm_sq(a) == 2.0 / a ** 2


@given(st.integers(0, 2 ** 32 - 1), a_values)
def test_stress_energy_is_trace_free(seed, a):
    rng = np.random.default_rng(seed)
    k = stress_energy(harmonic_extend(random_field(rng, 2, 3, 8), Domain.cylinder(a)))
    assert np.max(np.abs(k.trace_defect())) == 0.0


def test_horizontal_projection_is_idempotent():
    a = 1.7
    rng = np.random.default_rng(1)
    k = stress_energy(harmonic_extend(random_field(rng, 2, 3, 8), Domain.cylinder(a)))
    h = horizontal_project(k)
    hh = horizontal_project(h)
    scale = np.max(np.abs(h.ss))
    assert np.max(np.abs(hh.ss - h.ss)) <= 1e-12 * scale
    assert np.max(np.abs(hh.st)) <= 1e-12 * scale
    # a multiple of ds^2 - dtheta^2 is already horizontal
    c = StressEnergy(0.37 * np.ones_like(k.ss), 0 * k.st, -0.37 * np.ones_like(k.ss), k.s_nodes, k.s_weights, a)
    cp = horizontal_project(c)
    np.testing.assert_allclose(cp.ss, c.ss, rtol=1e-12)
    np.testing.assert_allclose(cp.tt, c.tt, rtol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_energy_derivative_pairs_with_stress_energy(seed):
    rng = np.random.default_rng(seed)
    a = float(np.exp(rng.uniform(-1.5, 1.5)))
    u = random_field(rng, 2, 3, 10)
    dom = Domain.cylinder(a)
    k = stress_energy(harmonic_extend(u, dom))
    d = energy_metric_derivative(u, dom.metric)
    assert d + 0.5 * horizontal_pairing(k) == pytest.approx(0.0, abs=1e-8 * abs(d))
    # the Hopf-differential shortcut agrees with the tensor quadrature
    assert metric_velocity(u, a) == pytest.approx(a * a / 4 * horizontal_pairing(k), rel=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_energy_derivative_against_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    a = float(np.exp(rng.uniform(-1, 1)))
    u = random_field(rng, 2, 2, 8)
    h = 1e-5 * a
    fd = (half_energy(u, Domain.cylinder(a + h)) - half_energy(u, Domain.cylinder(a - h))) / (2 * h)
    assert energy_metric_derivative(u, a) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("a", [0.5, 1.0, math.pi, 5.0])
def test_affine_closed_forms(a):
    h = 0.4
    u = affine(h)
    dom = Domain.cylinder(a)
    assert half_energy(u, dom) == pytest.approx(2 * a * h * h, rel=1e-14)
    assert energy_metric_derivative(u, a) == pytest.approx(2 * h * h, rel=1e-13)
    assert metric_velocity(u, a) == pytest.approx(-h * h * a * a, rel=1e-13)
    k = stress_energy(harmonic_extend(u, dom))
    assert horizontal_pairing(k) == pytest.approx(-4 * h * h, rel=1e-12)
    assert horizontal_residual(u, a) == pytest.approx(math.sqrt(2) * a * 2 * h * h, rel=1e-13)


def test_straight_cylinder_oracles():
    u = BoundaryField(circle_coeffs(8, heights=(0.3, -0.3)))
    assert energy_metric_derivative(u, 1.0) == pytest.approx(FROZEN["straight_dEda_a1_h03"], rel=1e-11)
    assert horizontal_residual(u, 1.0) == pytest.approx(FROZEN["straight_hres_a1_h03"], rel=1e-11)


def test_catenoid_is_critical_in_the_metric():
    ref = catenoid_reference(0.5, K=32)
    assert abs(energy_metric_derivative(ref.u, ref.a)) < 1e-13
    assert abs(metric_velocity(ref.u, ref.a)) < 1e-13


@pytest.mark.parametrize("seed", range(4))
def test_frozen_map_energy_decay_rate(seed):
    # dE/dt along da/dt = metric_velocity equals -1/4 ||P^H k||^2 (quadrature)
    rng = np.random.default_rng(seed)
    a = float(np.exp(rng.uniform(-1, 1)))
    u = random_field(rng, 2, 3, 8)
    dom = Domain.cylinder(a)
    rate = energy_metric_derivative(u, a) * metric_velocity(u, a)
    ph = horizontal_project(stress_energy(harmonic_extend(u, dom)))
    assert rate == pytest.approx(-0.25 * tensor_norm(ph) ** 2, rel=1e-6)
    assert horizontal_residual(u, a) == pytest.approx(tensor_norm(ph), rel=1e-8)


def test_stress_energy_rejects_the_disc():
    with pytest.raises(ValueError):
        stress_energy(harmonic_extend(BoundaryField(np.zeros((1, 3, 5))), Domain.disc()))
