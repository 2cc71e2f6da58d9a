"""Time stepping of the coupled map / metric gradient flow.

The state is a boundary field u (truncated Fourier series) and, on the
cylinder, the metric parameter a.  The map moves by -P_u(d_nu u_g) (plus
-eps d_nu u_g for the penalised family) and the metric by
da/dt = (a^2/4) <k, d g_a/da>.  Steps are classical RK4 in (coeffs, a)
followed, for eps = 0, by nearest-point reprojection onto N on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from .diagnostics import WindingUndersampled, local_energy_profile, winding_number
from .metric import metric_velocity
from .spectral import (
    BoundaryField,
    CylinderMetric,
    Domain,
    _analyze_array,
    _dtn_array,
    _energy_array,
    _synthesize_array,
    boundary_weight,
)
from .targets import CirclePairTarget, OutsideTubularNeighbourhood, TargetManifold

__all__ = [
    "FlowConfig",
    "FlowState",
    "StepInfo",
    "StepRejected",
    "RunRecord",
    "Termination",
    "map_velocity",
    "map_velocity_eps",
    "map_velocity_grid",
    "flow_velocity",
    "step",
    "advance",
    "cfl_timestep",
    "run",
    "energy_decay_check",
]

MONOTONE_SLACK = 1e-10


class StepRejected(RuntimeError):
    """The step could not be accepted even after repeated halving of dt."""


class Termination:
    CONVERGED = "Converged"
    METRIC_DEGENERATED = "MetricDegenerated"
    ENERGY_CONCENTRATED = "EnergyConcentrated"
    TIME_LIMIT = "TimeLimit"


@dataclass(frozen=True)
class FlowState:
    u: BoundaryField
    a: Optional[float] = None
    t: float = 0.0

    @property
    def domain(self) -> Domain:
        return Domain.disc() if self.a is None else Domain.cylinder(self.a)

    @property
    def metric(self) -> Optional[CylinderMetric]:
        return None if self.a is None else CylinderMetric(self.a)


@dataclass
class FlowConfig:
    target: Optional[TargetManifold] = None
    modes: int = 64
    dt_cfl: float = 0.5
    dt: Optional[float] = None
    epsilon: float = 0.0
    t_max: float = 10.0
    inj_min: float = 1e-2
    r_conc: float = 0.1
    delta_conc: Optional[float] = None
    tolerance: float = 1e-8
    drift_tol: float = 1e-3
    cadence: int = 10
    freeze_map: bool = False
    bubble_floor: float = 1e-3
    max_halvings: int = 10
    max_steps: Optional[int] = None
    track_winding: bool = True

    def validate(self):
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in [0, 1/2]")
        if self.target is None and not self.freeze_map:
            raise ValueError("a target manifold is required unless the map is frozen")
        if self.modes < 1:
            raise ValueError("need at least one Fourier mode")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("fixed dt must be positive")
        if not self.dt_cfl > 0:
            raise ValueError("CFL factor must be positive")
        if self.cadence < 1:
            raise ValueError("cadence must be a positive step count")
        return self


@dataclass(frozen=True)
class StepInfo:
    dt: float
    halvings: int
    drift: float
    projection_energy_change: float
    energy_before: float
    energy_after: float


# -- velocities ---------------------------------------------------------------------

def _grid_rows(arr: np.ndarray) -> np.ndarray:
    nc, n, M = arr.shape
    return np.ascontiguousarray(np.swapaxes(arr, 1, 2).reshape(nc * M, n))


def _grid_cols(rows: np.ndarray, nc: int, n: int) -> np.ndarray:
    M = rows.shape[0] // nc
    return np.swapaxes(rows.reshape(nc, M, n), 1, 2)


def map_velocity_grid(u: BoundaryField, domain: Domain, N: TargetManifold, epsilon: float = 0.0):
    """Velocity -(P_u + eps) d_nu u_g sampled on the physical grid, before truncation.

    Returns ``(velocity, tangent_part, dtn)`` as arrays of shape (nc * M, n);
    rows follow circle-major grid order.
    """
    M = u.grid_size
    pts = _grid_rows(_synthesize_array(u.coeffs, M))
    d = _grid_rows(_synthesize_array(_dtn_array(u.coeffs, domain), M))
    pd = N.tangent_project(pts, d)
    return -(pd + epsilon * d), pd, d


def _dealiased(v_rows: np.ndarray, u: BoundaryField) -> np.ndarray:
    """Analyse grid values to K modes, dropping any mode above M/3 (2/3 rule)."""
    c = _analyze_array(_grid_cols(v_rows, u.n_circles, u.ambient_dim), u.K)
    keep = u.grid_size // 3
    if keep < u.K:
        c[:, :, : u.K - keep] = 0.0
        c[:, :, u.K + keep + 1:] = 0.0
    return c


def map_velocity(u: BoundaryField, domain: Domain, N: TargetManifold) -> BoundaryField:
    """-P_u(d_nu u_g), evaluated on the grid and truncated back to the retained modes."""
    v, _, _ = map_velocity_grid(u, domain, N)
    return u.replace(_dealiased(v, u))


def map_velocity_eps(u: BoundaryField, domain: Domain, N: TargetManifold, epsilon: float) -> BoundaryField:
    """-(eps + P_u) d_nu u_g."""
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError("epsilon must lie in [0, 1/2]")
    v, _, _ = map_velocity_grid(u, domain, N, epsilon)
    return u.replace(_dealiased(v, u))


@dataclass(frozen=True)
class _Velocity:
    dc: np.ndarray
    da: float
    map_residual_sq: float  # ||P_u d_nu u||^2 on the grid
    dtn_sq: float  # ||d_nu u||^2 on the grid

    def rate(self, a: Optional[float], epsilon: float) -> float:
        """Predicted dE/dt at the state that produced this velocity."""
        r = -self.map_residual_sq - epsilon * self.dtn_sq
        if a is not None:
            r -= 2.0 * self.da * self.da / (a * a)
        return r

    def horizontal_residual(self, a: Optional[float]) -> Optional[float]:
        # ||P^H k|| = sqrt(8) |da/dt| / a
        return None if a is None else math.sqrt(8.0) * abs(self.da) / a


def _velocity(c: np.ndarray, a: Optional[float], cfg: FlowConfig, M: int) -> _Velocity:
    domain = Domain.disc() if a is None else Domain.cylinder(a)
    u = BoundaryField(c, M)
    da = 0.0 if a is None else metric_velocity(u, domain.metric)
    if cfg.freeze_map:
        return _Velocity(np.zeros_like(c), da, 0.0, 0.0)
    v, pd, d = map_velocity_grid(u, domain, cfg.target, cfg.epsilon)
    w = boundary_weight(domain) * 2.0 * math.pi / M
    return _Velocity(_dealiased(v, u), da, w * float(np.sum(pd * pd)), w * float(np.sum(d * d)))


def flow_velocity(state: FlowState, config: FlowConfig):
    """(du/dt, da/dt) at ``state``; da/dt is None on the disc."""
    v = _velocity(state.u.coeffs, state.a, config, state.u.grid_size)
    return state.u.replace(v.dc), (None if state.a is None else v.da)


# -- stepping -------------------------------------------------------------------------

def cfl_timestep(u: BoundaryField, a: Optional[float], factor: float) -> float:
    """factor / (largest DtN eigenvalue of the truncated problem)."""
    K = u.K
    if a is None:
        return factor / K
    L = math.pi / a
    top = max(K / math.tanh(K * L), 1.0 / L)
    return factor / ((2.0 * math.pi / math.sqrt(a)) * top)


def _energy(c, a):
    return _energy_array(c, Domain.disc() if a is None else Domain.cylinder(a))


def _rk4(c, a, dt, cfg, M, k1):
    def shift(k, h):
        return c + h * k.dc, (None if a is None else a + h * k.da)

    k2 = _velocity(*shift(k1, 0.5 * dt), cfg, M)
    k3 = _velocity(*shift(k2, 0.5 * dt), cfg, M)
    k4 = _velocity(*shift(k3, dt), cfg, M)
    cn = c + (dt / 6.0) * (k1.dc + 2.0 * k2.dc + 2.0 * k3.dc + k4.dc)
    an = None if a is None else a + (dt / 6.0) * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da)
    return cn, an


def _reproject(c, N, M):
    K = c.shape[-1] // 2
    nc, n = c.shape[0], c.shape[1]
    pts = _grid_rows(_synthesize_array(c, M))
    q = N.nearest_point(pts)
    drift = float(np.max(np.linalg.norm(q - pts, axis=1)))
    return _analyze_array(_grid_cols(q, nc, n), K), drift


def _try_step(state, dt, cfg, k1):
    c, a, M = state.u.coeffs, state.a, state.u.grid_size
    cn, an = _rk4(c, a, dt, cfg, M, k1)
    if an is not None and not an > 0.0:
        raise _Retry("metric parameter left (0, inf)")
    drift, dE_proj = 0.0, 0.0
    if cfg.epsilon == 0.0 and not cfg.freeze_map:
        e_raw = _energy(cn, an)
        cn, drift = _reproject(cn, cfg.target, M)
        dE_proj = _energy(cn, an) - e_raw
        if drift > cfg.drift_tol:
            raise _Retry(f"reprojection drift {drift:.3g} above tolerance")
    elif not cfg.freeze_map:
        # eps > 0 leaves N; the iterate must stay inside the tube
        cfg.target.nearest_point(_grid_rows(_synthesize_array(cn, M)))
    return cn, an, drift, dE_proj


class _Retry(Exception):
    pass


def advance(state: FlowState, dt: float, config: FlowConfig, energy_ref: Optional[float] = None,
            _k1: Optional[_Velocity] = None):
    """One accepted step, halving dt on rejection.  Returns ``(new_state, StepInfo)``.

    A step is rejected when the energy rises by more than 1e-10 * energy_ref,
    when reprojection moves a grid point further than ``drift_tol``, when an
    intermediate stage leaves the tubular neighbourhood, or when a <= 0.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    e0 = _energy(state.u.coeffs, state.a)
    if dt == 0:
        return state, StepInfo(0.0, 0, 0.0, 0.0, e0, e0)
    ref = e0 if energy_ref is None else energy_ref
    k1 = _k1 if _k1 is not None else _velocity(state.u.coeffs, state.a, config, state.u.grid_size)
    h = dt
    last = ""
    for halvings in range(config.max_halvings + 1):
        try:
            cn, an, drift, dE_proj = _try_step(state, h, config, k1)
        except (_Retry, OutsideTubularNeighbourhood) as exc:
            last = str(exc)
        else:
            e1 = _energy(cn, an)
            if e1 <= e0 + MONOTONE_SLACK * abs(ref):
                new = FlowState(state.u.replace(cn), an, state.t + h)
                return new, StepInfo(h, halvings, drift, dE_proj, e0, e1)
            last = f"energy increased from {e0!r} to {e1!r}"
        h *= 0.5
    raise StepRejected(f"step rejected after {config.max_halvings} halvings: {last}")


def step(state: FlowState, dt: float, config: FlowConfig) -> FlowState:
    return advance(state, dt, config)[0]


# -- runs -------------------------------------------------------------------------------

@dataclass
class RunRecord:
    """Per-state and per-step histories of a run.

    State arrays (``t``, ``energy``, ``rate``, ...) have one entry per state
    visited, step arrays (``dt``, ``drift``, ``projection_energy_change``)
    one entry per accepted step.  ``series`` holds the rows written at the
    output cadence, including the localised energy.
    """

    epsilon: float = 0.0
    t: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    rate: List[float] = field(default_factory=list)
    map_residual: List[float] = field(default_factory=list)
    horizontal_residual: List[Optional[float]] = field(default_factory=list)
    a: List[Optional[float]] = field(default_factory=list)
    inj: List[Optional[float]] = field(default_factory=list)
    dt: List[float] = field(default_factory=list)
    drift: List[float] = field(default_factory=list)
    projection_energy_change: List[float] = field(default_factory=list)
    halvings: List[int] = field(default_factory=list)
    series: List[Dict] = field(default_factory=list)
    termination: Optional[str] = None
    report: Dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.dt)

    def cumulative_drift(self) -> float:
        return float(sum(self.drift))

    def drift_constant(self) -> float:
        """max drift / dt^2 over the accepted steps."""
        out = 0.0
        for d, h in zip(self.drift, self.dt):
            if h > 0:
                out = max(out, d / (h * h))
        return out


def _inj(a):
    return None if a is None else 0.5 * math.sqrt(min(a, 1.0 / a))


def _windings(state, cfg):
    if not (cfg.track_winding and isinstance(cfg.target, CirclePairTarget) and state.a is not None):
        return None, None
    try:
        return (winding_number(state.u, 0, cfg.target), winding_number(state.u, 1, cfg.target))
    except (WindingUndersampled, OutsideTubularNeighbourhood):
        return None, None


def _conc_radius(state, cfg):
    if state.a is None:
        return min(cfg.r_conc, 0.5)
    return min(cfg.r_conc, 0.5 * _inj(state.a))


def run(config: FlowConfig, initial: FlowState, callback=None):
    """Integrate until convergence, degeneration, concentration or ``t_max``.

    ``callback(state, record, row)`` is invoked after every cadence row.
    Returns ``(final_state, RunRecord)``.
    """
    cfg = config.validate()
    rec = RunRecord(epsilon=cfg.epsilon)
    state = initial
    M = state.u.grid_size
    E0 = _energy(state.u.coeffs, state.a)
    delta = cfg.delta_conc if cfg.delta_conc is not None else 0.1 * E0
    vel = _velocity(state.u.coeffs, state.a, cfg, M)
    prev_cadence_res = None

    def record_state(s, v):
        rec.t.append(s.t)
        rec.energy.append(_energy(s.u.coeffs, s.a))
        rec.rate.append(v.rate(s.a, cfg.epsilon))
        rec.map_residual.append(math.sqrt(v.map_residual_sq))
        rec.horizontal_residual.append(v.horizontal_residual(s.a))
        rec.a.append(s.a)
        rec.inj.append(_inj(s.a))

    def cadence_row(s):
        r = _conc_radius(s, cfg)
        sup, where = local_energy_profile_sup(s, r)
        wt, wb = _windings(s, cfg)
        row = {
            "t": s.t,
            "energy": rec.energy[-1],
            "map_residual": rec.map_residual[-1],
            "horizontal_residual": rec.horizontal_residual[-1],
            "a": s.a,
            "inj": _inj(s.a),
            "sup_local_energy": sup,
            "winding_top": wt,
            "winding_bottom": wb,
            "dt": rec.dt[-1] if rec.dt else None,
            "step": rec.n_steps,
        }
        rec.series.append(row)
        if callback is not None:
            callback(s, rec, row)
        return row, r, where

    def local_energy_profile_sup(s, r):
        vals, thetas = local_energy_profile(s.u, s.domain, [r])
        flat = int(np.argmax(vals[0]))
        ic, j = divmod(flat, vals.shape[2])
        return float(vals[0, ic, j]), (ic, float(thetas[j]))

    def concentration_report(s, r, where):
        radii = [r, 0.5 * r, 0.25 * r]
        vals, thetas = local_energy_profile(s.u, s.domain, radii)
        ic, th = where
        j = int(np.argmin(np.abs(thetas - th)))
        prof = [float(vals[i, ic, j]) for i in range(3)]
        return {
            "circle": ic,
            "theta": th,
            "radii": radii,
            "local_energy": prof,
            "above_bubble_floor": bool(min(prof) >= cfg.bubble_floor),
        }

    def converged(v, s):
        if math.sqrt(v.map_residual_sq) > cfg.tolerance:
            return False
        return s.a is None or v.horizontal_residual(s.a) <= cfg.tolerance

    record_state(state, vel)
    cadence_row(state)
    termination = None
    while termination is None:
        if converged(vel, state):
            termination = Termination.CONVERGED
            break
        if state.t >= cfg.t_max * (1.0 - 1e-14) or (cfg.max_steps is not None and rec.n_steps >= cfg.max_steps):
            termination = Termination.TIME_LIMIT
            break
        dt = cfg.dt if cfg.dt is not None else cfl_timestep(state.u, state.a, cfg.dt_cfl)
        dt = min(dt, cfg.t_max - state.t)
        state, info = advance(state, dt, cfg, energy_ref=E0, _k1=vel)
        vel = _velocity(state.u.coeffs, state.a, cfg, M)
        rec.dt.append(info.dt)
        rec.drift.append(info.drift)
        rec.projection_energy_change.append(info.projection_energy_change)
        rec.halvings.append(info.halvings)
        record_state(state, vel)

        if state.a is not None and _inj(state.a) < cfg.inj_min:
            termination = Termination.METRIC_DEGENERATED
            rec.report = {"a": state.a, "inj": _inj(state.a), "t": state.t}
            break
        if rec.n_steps % cfg.cadence == 0:
            row, r, where = cadence_row(state)
            res = rec.map_residual[-1]
            stalled = (
                prev_cadence_res is not None and res > cfg.tolerance and res >= 0.5 * prev_cadence_res
            )
            if row["sup_local_energy"] > delta and stalled:
                termination = Termination.ENERGY_CONCENTRATED
                rec.report = concentration_report(state, r, where)
                rec.report.update({"t": state.t, "threshold": delta})
                break
            prev_cadence_res = res

    rec.termination = termination
    if not rec.series or rec.series[-1]["step"] != rec.n_steps:
        cadence_row(state)
    return state, rec


def energy_decay_check(record: RunRecord, rtol: float = 1e-3) -> Dict:
    """Compare (E_{n+1} - E_n)/dt with the predicted rate averaged over the step.

    Each step is allowed rtol * |rate| plus an O(dt) bias |r_{n+1} - r_n|,
    the reprojection energy change divided by dt, and round-off in E.
    ``max_violation`` is the worst ratio of discrepancy to allowance (<= 1
    passes); ``max_increase`` is the largest relative energy increase.
    """
    E = np.asarray(record.energy)
    r = np.asarray(record.rate)
    dt = np.asarray(record.dt)
    pe = np.asarray(record.projection_energy_change) if record.projection_energy_change else np.zeros_like(dt)
    E0 = abs(E[0]) if E.size else 1.0
    worst, worst_i, max_rel = 0.0, -1, 0.0
    for n in range(dt.size):
        h = dt[n]
        if h <= 0:
            continue
        lhs = (E[n + 1] - E[n]) / h
        rbar = 0.5 * (r[n] + r[n + 1])
        roundoff = 8.0 * np.finfo(float).eps * max(abs(E[n]), abs(E[n + 1])) / h
        allow = rtol * abs(rbar) + abs(r[n + 1] - r[n]) + abs(pe[n]) / h + roundoff
        disc = abs(lhs - rbar)
        if rtol * abs(rbar) > roundoff:
            max_rel = max(max_rel, disc / abs(rbar))
        ratio = disc / allow if allow > 0 else (0.0 if disc == 0 else math.inf)
        if ratio > worst:
            worst, worst_i = ratio, n
    increase = float(np.max(np.diff(E)) / E0) if E.size > 1 else 0.0
    return {
        "max_violation": worst,
        "worst_step": worst_i,
        "max_relative_deviation": max_rel,
        "max_increase": max(increase, 0.0),
        "n_steps": int(dt.size),
        "passed": worst <= 1.0,
    }


def with_epsilon(config: FlowConfig, epsilon: float) -> FlowConfig:
    return replace(config, epsilon=epsilon)
