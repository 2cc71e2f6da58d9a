"""Acceptance criteria, one test each.  Every test records a PASS/FAIL line
that is echoed at the end of the pytest run."""
import time
from pathlib import Path

import numpy as np
import pytest

from halfflow.cli import build_settings, read_config
from halfflow.diagnostics import (
    catenoid_reference,
    conformality_residual,
    fd_check_map_variation,
    fd_check_metric_variation,
    residuals,
    straight_cylinder,
    winding_number,
)
from halfflow.flow import (
    FlowConfig,
    FlowState,
    Termination,
    cfl_timestep,
    energy_decay_check,
    map_velocity_grid,
    run,
    step,
    with_epsilon,
)
from halfflow.metric import stress_energy
from halfflow.spectral import (
    BoundaryField,
    Domain,
    boundary_inner,
    boundary_norm,
    dtn,
    half_energy,
    harmonic_extend,
    synthesize,
)
from halfflow.targets import CirclePairTarget, SphereTarget

from conftest import ACCEPTANCE_LINES, project_field, random_field, sphere_field

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] AC{number} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def experiments():
    """The shipped experiment configs, each run once: name -> (final, record, seconds)."""
    out = {}
    for name in ("catenoid", "goldschmidt", "disc"):
        s = build_settings(read_config(CONFIGS / f"{name}.ini"))
        (final, rec), secs = timed(run, s.flow, s.initial)
        out[name] = (final, rec, secs)
    # the eps-term drives u off N along the normal (radius ~ exp(-eps t)), so keep this run short
    s = build_settings(read_config(CONFIGS / "disc.ini"))
    cfg = with_epsilon(s.flow, 0.1)
    cfg.t_max = 2.0
    (final, rec), secs = timed(run, cfg, s.initial)
    out["disc_eps0.1"] = (final, rec, secs)
    return out


def test_ac1_dtn_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    pairing = symmetry = 0.0
    for _ in range(50):
        a = float(np.exp(rng.uniform(-2.0, 2.0)))
        for dom, nc in ((Domain.disc(), 1), (Domain.cylinder(a), 2)):
            u = random_field(rng, nc, 3, 16)
            v = random_field(rng, nc, 3, 16)
            e2 = 2.0 * half_energy(u, dom)
            pairing = max(pairing, abs(boundary_inner(dtn(u, dom), u, dom) - e2) / e2)
            lhs, rhs = boundary_inner(dtn(u, dom), v, dom), boundary_inner(u, dtn(v, dom), dom)
            symmetry = max(symmetry, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    K = 32
    eig = 0.0
    for k in range(-K, K + 1):
        c = np.zeros((1, 1, 2 * K + 1), dtype=complex)
        c[0, 0, K + k] = 1.0
        out = dtn(BoundaryField(c), Domain.disc()).coeffs
        expected = np.zeros_like(out)
        expected[0, 0, K + k] = abs(k)
        eig = max(eig, float(np.max(np.abs(out - expected))) / max(abs(k), 1))
    secs = time.perf_counter() - t0
    ok = pairing <= 1e-10 and symmetry <= 1e-10 and eig <= 1e-12 and secs < 5
    report(1, "DtN identities", ok,
           f"pairing {pairing:.1e}, symmetry {symmetry:.1e} (<=1e-10), eigenvalues {eig:.1e} (<=1e-12), {secs:.2f}s (<5s)")
    assert ok


def test_ac2_variation_formulas():
    t0 = time.perf_counter()
    N = SphereTarget(1.0)
    worst_map = worst_metric = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        u = sphere_field(rng, K=32, amp=0.05, modes=3)
        v = BoundaryField(random_field(rng, 1, 3, 6, decay=0.5).resized(32).coeffs, u.grid_size)
        worst_map = max(worst_map, fd_check_map_variation(u, v, Domain.disc(), N).rel_error)
        a = float(np.exp(rng.uniform(-1.0, 1.0)))
        w = random_field(rng, 2, 3, 8, decay=0.6)
        worst_metric = max(worst_metric, fd_check_metric_variation(w, a).rel_error)
    secs = time.perf_counter() - t0
    ok = worst_map <= 1e-6 and worst_metric <= 1e-6 and secs < 10
    report(2, "variation formulas", ok,
           f"map {worst_map:.1e}, metric {worst_metric:.1e} (<=1e-6), {secs:.2f}s (<10s)")
    assert ok


def test_ac3_energy_monotonicity(experiments):
    details, ok = [], True
    for name, (_, rec, secs) in experiments.items():
        E = np.asarray(rec.energy)
        rise = float(np.max(np.diff(E))) / E[0] if E.size > 1 else 0.0
        check = energy_decay_check(rec, rtol=1e-3)
        this = rise <= 1e-10 and check["passed"] and secs < 30
        ok &= this
        details.append(f"{name} rise {max(rise, 0):.0e} decay-violation {check['max_violation']:.2f} {secs:.1f}s")
    report(3, "energy monotonicity", ok, "; ".join(details))
    assert ok


def test_ac4_frozen_metric_ode():
    h, a0, T = 0.5, 1.0, 1.0
    c = np.zeros((2, 3, 9), dtype=complex)
    c[0, 2, 4], c[1, 2, 4] = h, -h
    cfg = FlowConfig(freeze_map=True, modes=4, dt=1e-3, t_max=T, cadence=10 ** 6, inj_min=1e-6)
    final, rec = run(cfg, FlowState(BoundaryField(c), a0))
    a_err = abs(final.a - a0 / (1 + h * h * a0 * final.t))
    rate_err = max(abs(r + 2 * h ** 4 * a * a) / (2 * h ** 4 * a * a) for r, a in zip(rec.rate, rec.a))
    fd_rate = energy_decay_check(rec)["max_relative_deviation"]
    ok = abs(final.t - T) < 1e-12 and a_err <= 1e-8 and rate_err <= 1e-6 and fd_rate <= 1e-6
    report(4, "frozen-map metric ODE", ok,
           f"|a(1) - a0/(1+h^2 a0)| {a_err:.1e} (<=1e-8), rate {rate_err:.1e}, finite-difference rate {fd_rate:.1e} (<=1e-6)")
    assert ok


def test_ac5_catenoid(experiments):
    h = 0.5
    ref = catenoid_reference(h, K=32)
    rep = residuals(ref.u, Domain.cylinder(ref.a), CirclePairTarget(1.0, h))
    fixed = max(rep.half_harmonic_residual, rep.conformality_residual, rep.horizontal_residual)
    final, rec, secs = experiments["catenoid"]
    a_err = abs(final.a - ref.a)
    hres = rec.horizontal_residual[-1]
    ok = (
        fixed <= 1e-8
        and rec.termination == Termination.CONVERGED
        and final.t <= 50
        and a_err <= 1e-4
        and hres <= 1e-6
        and secs < 60
    )
    report(5, "catenoid fixed point", ok,
           f"reference residuals {fixed:.1e} (<=1e-8); perturbed run {rec.termination} at t={final.t:.2f}, "
           f"|a-a*| {a_err:.1e} (<=1e-4), horizontal {hres:.1e} (<=1e-6), {secs:.1f}s (<60s)")
    assert ok


def test_ac6_goldschmidt(experiments):
    final, rec, secs = experiments["goldschmidt"]
    a = np.asarray(rec.a)
    tail = a[int(0.1 * (a.size - 1)):]
    monotone = bool(np.all(np.diff(tail) < 0))
    ok = rec.termination == Termination.METRIC_DEGENERATED and monotone and secs < 60
    report(6, "Goldschmidt degeneration", ok,
           f"{rec.termination} after {rec.n_steps} steps, a {a[0]:.3g} -> {a[-1]:.3g}, "
           f"monotone over final 90%: {monotone}, {secs:.1f}s (<60s)")
    assert ok


def test_ac7_disc_conformality_and_cylinder_gap(experiments):
    final, rec, secs = experiments["disc"]
    conf = conformality_residual(final.u, Domain.disc())
    u = straight_cylinder(0.3, K=16)
    N = CirclePairTarget(1.0, 0.3)
    rep = residuals(u, Domain.cylinder(1.0), N)
    ok = (
        rec.termination == Termination.CONVERGED
        and conf <= 1e-6
        and rep.half_harmonic_residual <= 1e-10
        and rep.horizontal_residual > 1e-3
    )
    report(7, "disc conformality / cylinder gap", ok,
           f"disc {rec.termination}, conformality {conf:.1e} (<=1e-6); straight cylinder half-harmonic "
           f"{rep.half_harmonic_residual:.1e} (<=1e-10), horizontal {rep.horizontal_residual:.2e} (>1e-3)")
    assert ok


def _projector_algebra():
    rng = np.random.default_rng(0)
    worst = 0.0
    for N, pts in (
        (SphereTarget(1.3), rng.standard_normal((200, 3))),
        (CirclePairTarget(1.0, 0.5), None),
    ):
        if pts is None:
            phi = rng.uniform(0, 2 * np.pi, 200)
            z = np.where(rng.random(200) < 0.5, 0.5, -0.5)
            pts = np.stack([np.cos(phi), np.sin(phi), z], 1) + rng.uniform(-0.1, 0.1, (200, 3))
        else:
            pts = 1.3 * pts / np.linalg.norm(pts, axis=1, keepdims=True) * rng.uniform(0.8, 1.2, (200, 1))
        P = N.tangent_matrix(pts)
        worst = max(worst, float(np.max(np.abs(P @ P - P))), float(np.max(np.abs(P - np.swapaxes(P, 1, 2)))))
    return worst


def test_ac8_structural_invariants():
    t0 = time.perf_counter()
    results = {}
    results["projector"] = _projector_algebra()

    rng = np.random.default_rng(1)
    tf = 0.0
    for _ in range(10):
        a = float(np.exp(rng.uniform(-1.5, 1.5)))
        k = stress_energy(harmonic_extend(random_field(rng, 2, 3, 8), Domain.cylinder(a)))
        tf = max(tf, float(np.max(np.abs(k.trace_defect()))))
    results["trace-free"] = tf

    tang = 0.0
    S2 = SphereTarget(1.0)
    for seed in range(10):
        u = sphere_field(np.random.default_rng(seed), K=16, modes=5)
        v, _, _ = map_velocity_grid(u, Domain.disc(), S2)
        pts = np.swapaxes(synthesize(u), 1, 2).reshape(-1, 3)
        tang = max(tang, float(np.max(np.abs(S2.normal_project(pts, v)))) / max(1.0, float(np.max(np.abs(v)))))
    results["tangency"] = tang

    h = 0.5
    N = CirclePairTarget(1.0, h)
    ref = catenoid_reference(h, K=16)
    c = ref.u.coeffs + 0.01 * random_field(np.random.default_rng(7), 2, 3, 16, modes=4).coeffs
    state = FlowState(project_field(BoundaryField(c), N), 1.1 * ref.a)
    cfg = FlowConfig(target=N, modes=16)
    w0 = (winding_number(state.u, 0, N), winding_number(state.u, 1, N))
    changed = 0
    for _ in range(100):
        state = step(state, cfl_timestep(state.u, state.a, cfg.dt_cfl), cfg)
        changed += (winding_number(state.u, 0, N), winding_number(state.u, 1, N)) != w0
    results["winding changes"] = changed

    s0 = FlowState(sphere_field(np.random.default_rng(3), K=16, amp=0.05, modes=5, odd_only=True))
    base = FlowConfig(target=S2, modes=16, dt=1.0 / 64, t_max=0.5, tolerance=0.0, cadence=100)
    u0, _ = run(base, s0)
    gaps = []
    for eps in (0.1, 0.01, 0.001):
        ue, _ = run(with_epsilon(base, eps), s0)
        gaps.append(boundary_norm(ue.u.replace(ue.u.coeffs - u0.u.coeffs), Domain.disc()))
    eps_ok = gaps[0] > gaps[1] > gaps[2]

    secs = time.perf_counter() - t0
    ok = (
        results["projector"] <= 1e-12
        and results["trace-free"] <= 1e-12
        and results["tangency"] <= 1e-12
        and changed == 0
        and w0 == (1, 1)
        and eps_ok
        and secs < 20
    )
    report(8, "structural invariants", ok,
           f"projector {results['projector']:.0e}, trace {tf:.0e}, tangency {tang:.0e} (<=1e-12), "
           f"winding {w0} constant over 100 steps: {changed == 0}, "
           f"eps gaps {', '.join(f'{g:.1e}' for g in gaps)} decreasing: {eps_ok}, {secs:.1f}s (<20s)")
    assert ok
