"""Command line: ``run``, ``resume``, ``check`` and ``catenoid``."""
from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .diagnostics import (
    NoCatenoid,
    catenoid_reference,
    fd_check_map_variation,
    fd_check_metric_variation,
    residuals,
    straight_cylinder,
)
from .flow import FlowConfig, FlowState, StepRejected, Termination, energy_decay_check, run
from .metric import (
    energy_metric_derivative,
    horizontal_direction,
    horizontal_pairing,
    horizontal_project,
    metric_direction_norm_sq,
    stress_energy,
    tensor_pairing,
)
from .spectral import (
    BoundaryField,
    Domain,
    analyze,
    boundary_inner,
    dtn,
    half_energy,
    harmonic_extend,
    synthesize,
)
from .targets import CirclePairTarget, OutsideTubularNeighbourhood, SphereTarget, TargetManifold

SERIES_COLUMNS = [
    "t",
    "energy",
    "map_residual",
    "horizontal_residual",
    "a",
    "inj",
    "sup_local_energy",
    "winding_top",
    "winding_bottom",
    "dt",
]

REQUIRED_KEYS = ["domain.kind", "target.kind", "flow.modes", "flow.t_max", "output.dir"]

EXIT_CODES = {
    Termination.CONVERGED: 0,
    Termination.METRIC_DEGENERATED: 10,
    Termination.ENERGY_CONCENTRATED: 11,
    Termination.TIME_LIMIT: 12,
}
EXIT_CONFIG = 2
EXIT_NO_CATENOID = 3
EXIT_RUNTIME = 4


class ConfigError(ValueError):
    pass


# -- configuration ------------------------------------------------------------------

def read_config(path) -> Dict[str, str]:
    """Flat ``section.key -> value`` mapping; top-level keys (``seed``) have no section."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None, default_section="__unused__")
    parser.optionxform = str
    try:
        parser.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    flat = {}
    for sec in parser.sections():
        for k, v in parser.items(sec):
            flat[k if sec == "__top__" else f"{sec}.{k}"] = v.strip()
    return flat


def config_hash(flat: Dict[str, str]) -> str:
    blob = json.dumps(flat, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunSettings:
    flow: FlowConfig
    initial: FlowState
    out_dir: Path
    cadence: int
    snapshot_every: int
    seed: int


def _get(flat, key, conv=str, default=None):
    if key not in flat:
        if default is None and key in REQUIRED_KEYS:
            raise ConfigError(f"missing required key: {key}")
        return default
    try:
        return conv(flat[key])
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key}: {flat[key]!r}") from exc


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def _noise(rng, shape, K, modes, amp, odd_only):
    c = np.zeros(shape[:2] + (2 * K + 1,), dtype=np.complex128)
    for k in range(1, min(modes, K) + 1):
        if odd_only and k % 2 == 0:
            continue
        z = (rng.standard_normal(shape[:2]) + 1j * rng.standard_normal(shape[:2])) * amp / k ** 2
        c[:, :, K + k] = z
        c[:, :, K - k] = np.conj(z)
    return c


def _project_onto(u: BoundaryField, N: TargetManifold) -> BoundaryField:
    g = synthesize(u)
    nc, n, M = g.shape
    pts = np.swapaxes(g, 1, 2).reshape(-1, n)
    q = N.nearest_point(pts)
    return analyze(np.swapaxes(q.reshape(nc, M, n), 1, 2), u.K)


def build_settings(flat: Dict[str, str]) -> RunSettings:
    for key in REQUIRED_KEYS:
        _get(flat, key)
    kind = _get(flat, "domain.kind")
    if kind not in ("disc", "cylinder"):
        raise ConfigError(f"invalid value for domain.kind: {kind!r}")
    K = _get(flat, "flow.modes", int)
    if K < 1:
        raise ConfigError("invalid value for flow.modes: must be positive")
    seed = _get(flat, "seed", int, 0)
    rng = np.random.default_rng(seed)

    tkind = _get(flat, "target.kind")
    radius = _get(flat, "target.radius", float, 1.0)
    try:
        if tkind == "sphere":
            N = SphereTarget(radius, _get(flat, "target.ambient_dim", int, 3))
        elif tkind == "circle_pair":
            N = CirclePairTarget(radius, _get(flat, "target.half_gap", float, 0.5))
        else:
            raise ConfigError(f"invalid value for target.kind: {tkind!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if kind == "disc":
        if not isinstance(N, SphereTarget):
            raise ConfigError("disc runs need target.kind = sphere")
        c = np.zeros((1, N.ambient_dim, 2 * K + 1), dtype=np.complex128)
        c[0, 0, K + 1] = c[0, 0, K - 1] = 0.5 * N.radius
        c[0, 1, K + 1] = -0.5j * N.radius
        c[0, 1, K - 1] = 0.5j * N.radius
        a0 = None
    else:
        if not isinstance(N, CirclePairTarget):
            raise ConfigError("cylinder runs need target.kind = circle_pair")
        c = np.array(straight_cylinder(N.half_gap, N.radius, K).coeffs)
        a0 = _get(flat, "domain.a0", float, None)
        scale = _get(flat, "domain.a0_scale", float, None)
        if a0 is not None and scale is not None:
            raise ConfigError("give either domain.a0 or domain.a0_scale, not both")
        if scale is not None:
            try:
                a0 = scale * catenoid_reference(N.half_gap, N.radius, K).a
            except NoCatenoid as exc:
                raise ConfigError(f"domain.a0_scale needs a catenoid: {exc}") from exc
        a0 = 1.0 if a0 is None else a0
        if not a0 > 0:
            raise ConfigError("invalid value for domain.a0: must be positive")

    amp = _get(flat, "initial.noise", float, 0.0)
    if amp:
        odd = _get(flat, "initial.odd_modes_only", _bool, False)
        c = c + _noise(rng, c.shape, K, _get(flat, "initial.noise_modes", int, 4), amp, odd)
    u0 = BoundaryField(c, 4 * K)
    try:
        u0 = _project_onto(u0, N)
    except ValueError as exc:
        raise ConfigError(f"initial data leaves the target's tube: {exc}") from exc

    dt_fixed = _get(flat, "flow.dt", float, None)
    delta = _get(flat, "flow.delta_conc", float, None)
    cadence = _get(flat, "output.cadence", int, 10)
    cfg = FlowConfig(
        target=N,
        modes=K,
        dt_cfl=_get(flat, "flow.dt_cfl", float, 0.5),
        dt=dt_fixed,
        epsilon=_get(flat, "flow.epsilon", float, 0.0),
        t_max=_get(flat, "flow.t_max", float),
        inj_min=_get(flat, "flow.inj_min", float, 1e-2),
        r_conc=_get(flat, "flow.r_conc", float, 0.1),
        delta_conc=delta,
        tolerance=_get(flat, "flow.tolerance", float, 1e-8),
        drift_tol=_get(flat, "flow.drift_tol", float, 1e-3),
        cadence=cadence,
        bubble_floor=_get(flat, "flow.bubble_floor", float, 1e-3),
    )
    for name in ("dt_cfl", "t_max", "inj_min", "r_conc", "tolerance", "drift_tol", "bubble_floor"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"invalid value for flow.{name}: must be positive")
    if delta is not None and not delta > 0:
        raise ConfigError("invalid value for flow.delta_conc: must be positive")
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunSettings(
        flow=cfg,
        initial=FlowState(u0, a0, 0.0),
        out_dir=Path(_get(flat, "output.dir")),
        cadence=cadence,
        snapshot_every=_get(flat, "output.snapshot_every", int, 10),
        seed=seed,
    )


# -- output -------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def snapshot_dict(state: FlowState, step: int) -> dict:
    c = state.u.coeffs
    return {
        "t": float(state.t),
        "a": None if state.a is None else float(state.a),
        "step": int(step),
        "coeffs": [[[[float(z.real), float(z.imag)] for z in row] for row in circ] for circ in c],
    }


def load_snapshot(path) -> FlowState:
    d = json.loads(Path(path).read_text())
    arr = np.asarray(d["coeffs"], dtype=float)
    c = arr[..., 0] + 1j * arr[..., 1]
    K = c.shape[-1] // 2
    return FlowState(BoundaryField(c, 4 * K), d.get("a"), float(d["t"]))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def execute_run(flat: Dict[str, str], out_dir: Optional[Path] = None, start: Optional[FlowState] = None) -> int:
    settings = build_settings(flat)
    out = Path(out_dir) if out_dir is not None else settings.out_dir
    out.mkdir(parents=True, exist_ok=True)
    initial = settings.initial if start is None else start
    if (initial.a is None) != (settings.initial.a is None):
        raise ConfigError("snapshot does not match the configured domain")
    if initial.u.K != settings.flow.modes:
        initial = FlowState(initial.u.resized(settings.flow.modes), initial.a, initial.t)
    cfg = settings.flow
    if start is not None:
        cfg.t_max = max(cfg.t_max, initial.t)

    started = _now()
    written: List[Path] = []
    series_path = out / "series.csv"
    fh = open(series_path, "w", newline="")
    fh.write(",".join(SERIES_COLUMNS) + "\n")
    rows_seen = [0]

    def on_row(state, rec, row):
        fh.write(",".join(_fmt(row[c]) for c in SERIES_COLUMNS) + "\n")
        if rows_seen[0] % settings.snapshot_every == 0:
            _write_snapshot(state, row["step"])
        rows_seen[0] += 1

    def _write_snapshot(state, step):
        p = out / f"snapshot_{step}.json"
        p.write_text(json.dumps(snapshot_dict(state, step)))
        if p not in written:
            written.append(p)

    status, message = None, ""
    try:
        final, rec = run(cfg, initial, callback=on_row)
    except (StepRejected, OutsideTubularNeighbourhood) as exc:
        status, message = EXIT_RUNTIME, str(exc)
        final, rec = None, None
    finally:
        fh.close()
    written.insert(0, series_path)
    if rec is not None:
        _write_snapshot(final, rec.n_steps)
        status = EXIT_CODES[rec.termination]
        decay = energy_decay_check(rec)
    manifest = {
        "config_sha256": config_hash(flat),
        "version": __version__,
        "seed": settings.seed,
        "start_time": started,
        "end_time": _now(),
        "termination": None if rec is None else rec.termination,
        "exit_code": status,
        "error": message or None,
        "steps": None if rec is None else rec.n_steps,
        "report": None if rec is None else _jsonable(rec.report),
        "energy_decay": None if rec is None else _jsonable(decay),
        "files": {p.name: _sha256(p) for p in written},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    if message:
        print(f"run failed: {message}", file=sys.stderr)
    elif rec is not None:
        print(f"{rec.termination} after {rec.n_steps} steps at t = {final.t!r}")
    return status


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def verify_manifest(run_dir) -> bool:
    """True when every file listed in the manifest exists with a matching hash."""
    d = Path(run_dir)
    man = json.loads((d / "manifest.json").read_text())
    for name, digest in man["files"].items():
        p = d / name
        if not p.exists() or _sha256(p) != digest:
            return False
    return True


# -- check suites ---------------------------------------------------------------------

def _random_field(rng, nc, n, K, decay=0.35, base=None):
    c = np.zeros((nc, n, 2 * K + 1), dtype=np.complex128)
    for k in range(0, K + 1):
        z = (rng.standard_normal((nc, n)) + 1j * rng.standard_normal((nc, n))) * math.exp(-decay * k)
        if k == 0:
            c[:, :, K] = z.real
        else:
            c[:, :, K + k] = z
            c[:, :, K - k] = np.conj(z)
    if base is not None:
        c = c + base
    return BoundaryField(c, 4 * K)


def _sphere_field(rng, K=32, amp=0.05, modes=3):
    c = np.zeros((1, 3, 2 * K + 1), dtype=np.complex128)
    c[0, 0, K + 1] = c[0, 0, K - 1] = 0.5
    c[0, 1, K + 1] = -0.5j
    c[0, 1, K - 1] = 0.5j
    c = c + _noise(rng, c.shape, K, modes, amp, False)
    return _project_onto(BoundaryField(c, 4 * K), SphereTarget(1.0))


def suite_variations(seeds=range(20)) -> Dict[str, float]:
    worst = {"map_variation": 0.0, "metric_variation": 0.0}
    N = SphereTarget(1.0)
    disc = Domain.disc()
    for s in seeds:
        rng = np.random.default_rng(s)
        u = _sphere_field(rng)
        v = _random_field(rng, 1, 3, 6, decay=0.5)
        v = BoundaryField(v.resized(u.K).coeffs, u.grid_size)
        worst["map_variation"] = max(worst["map_variation"], fd_check_map_variation(u, v, disc, N).rel_error)
        a = float(np.exp(rng.uniform(-1.0, 1.0)))
        w = _random_field(rng, 2, 3, 8, decay=0.6)
        worst["metric_variation"] = max(worst["metric_variation"], fd_check_metric_variation(w, a).rel_error)
    return worst


def suite_identities(seeds=range(50)) -> Dict[str, float]:
    out = {"dtn_pairing": 0.0, "dtn_symmetry": 0.0, "energy_pairing": 0.0,
           "metric_direction_norm": 0.0, "horizontal_idempotence": 0.0}
    for s in seeds:
        rng = np.random.default_rng(1000 + s)
        a = float(np.exp(rng.uniform(-1.5, 1.5)))
        for dom, nc in ((Domain.disc(), 1), (Domain.cylinder(a), 2)):
            u = _random_field(rng, nc, 3, 12)
            v = _random_field(rng, nc, 3, 12)
            e2 = 2.0 * half_energy(u, dom)
            out["dtn_pairing"] = max(out["dtn_pairing"], abs(boundary_inner(dtn(u, dom), u, dom) - e2) / e2)
            lhs, rhs = boundary_inner(dtn(u, dom), v, dom), boundary_inner(u, dtn(v, dom), dom)
            scale = max(abs(lhs), abs(rhs), 1e-300)
            out["dtn_symmetry"] = max(out["dtn_symmetry"], abs(lhs - rhs) / scale)
        if s < 10:
            dom = Domain.cylinder(a)
            u = _random_field(rng, 2, 3, 8)
            k = stress_energy(harmonic_extend(u, dom))
            d = energy_metric_derivative(u, dom.metric)
            p = horizontal_pairing(k)
            out["energy_pairing"] = max(out["energy_pairing"], abs(d + 0.5 * p) / max(abs(d), 1e-300))
            hd = horizontal_direction(k)
            nsq = tensor_pairing(hd, hd)
            out["metric_direction_norm"] = max(
                out["metric_direction_norm"], abs(nsq - metric_direction_norm_sq(a)) / nsq
            )
            proj = horizontal_project(hd)
            out["horizontal_idempotence"] = max(
                out["horizontal_idempotence"], float(np.max(np.abs(proj.ss - hd.ss)) / np.max(np.abs(hd.ss)))
            )
    return out


SUITE_LIMITS = {
    "map_variation": 1e-6,
    "metric_variation": 1e-6,
    "dtn_pairing": 1e-10,
    "dtn_symmetry": 1e-10,
    "energy_pairing": 1e-8,
    "metric_direction_norm": 1e-12,
    "horizontal_idempotence": 1e-12,
}


def cmd_check(suite: str) -> int:
    if suite not in ("variations", "identities", "all"):
        print(f"unknown suite {suite!r}; choose variations, identities or all", file=sys.stderr)
        return EXIT_CONFIG
    results: Dict[str, float] = {}
    if suite in ("variations", "all"):
        results.update(suite_variations())
    if suite in ("identities", "all"):
        results.update(suite_identities())
    ok = True
    print(f"{'check':<24}{'max rel. error':>16}{'limit':>10}  status")
    for name, val in results.items():
        lim = SUITE_LIMITS[name]
        passed = val <= lim
        ok &= passed
        print(f"{name:<24}{val:>16.3e}{lim:>10.0e}  {'pass' if passed else 'FAIL'}")
    return 0 if ok else 1


def cmd_catenoid(h: float, r: float = 1.0, modes: int = 32) -> int:
    if not (math.isfinite(h) and h > 0 and math.isfinite(r) and r > 0):
        print("h and r must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        ref = catenoid_reference(h, r, modes)
    except NoCatenoid as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NO_CATENOID
    rep = residuals(ref.u, Domain.cylinder(ref.a), CirclePairTarget(r, h))
    print(json.dumps({
        "h": h,
        "r": r,
        "modes": modes,
        "L_star": ref.half_length,
        "a_star": ref.a,
        "residuals": rep.as_dict(),
    }, indent=2))
    return 0


# -- entry point --------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="halfflow", description="Half-harmonic map / metric gradient flow driver.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="integrate the flow described by a config file")
    r.add_argument("config")
    rs = sub.add_parser("resume", help="continue a run from a snapshot")
    rs.add_argument("config")
    rs.add_argument("snapshot")
    rs.add_argument("--out", default=None, help="output directory (default: <output.dir>/resume_<step>)")
    c = sub.add_parser("check", help="run a validation suite")
    c.add_argument("suite")
    ct = sub.add_parser("catenoid", help="catenoid spanning two coaxial circles")
    ct.add_argument("--h", type=float, required=True, help="half-gap between the circles")
    ct.add_argument("--r", type=float, default=1.0, help="circle radius")
    ct.add_argument("--modes", type=int, default=32)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "check":
        return cmd_check(args.suite)
    if args.verb == "catenoid":
        return cmd_catenoid(args.h, args.r, args.modes)
    try:
        flat = read_config(args.config)
        if args.verb == "run":
            return execute_run(flat)
        snap = load_snapshot(args.snapshot)
        step = json.loads(Path(args.snapshot).read_text()).get("step", 0)
        out = Path(args.out) if args.out else Path(_get(flat, "output.dir")) / f"resume_{step}"
        return execute_run(flat, out_dir=out, start=snap)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
