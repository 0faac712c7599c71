"""Command line front end.

Subcommands: solve, critical-value, periodic, rotation, aubry, verify,
selftest.  Runs are configured by a JSON file (see configs/ and the README);
individual flags override config fields.  Every run writes a manifest
(resolved config plus SHA-256 hashes of the artifacts) sufficient to
reproduce it bit-exactly.

Exit codes: 0 success, 2 configuration error, 3 no convergence,
4 invariant-suite failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import selftest as selftest_mod
from .characteristics import (
    aubry_sample,
    aubry_sample_write,
    backtrack,
    characteristic_to_csv,
    rotation_number,
)
from .convergence import (
    HarnessConfig,
    rational_reduce,
    verify_theorem,
    write_report_json,
    write_residuals_csv,
)
from .errors import InsufficientData, NoConvergence, WeakKamError
from .grid import CircleGrid, TimeGrid, write_snapshots_csv
from .hamiltonian import default_v_max, spec_from_json
from .initial_data import initial_field
from .operator import DEFAULT_WINDOW, VelocityGrid, dump_foot_tables, evolve
from .spectrum import (
    LONG_TIME_AVERAGE,
    estimate_lambda,
    liminf_solution,
    periodic_solution,
    save_periodic_solution,
)


class ConfigError(WeakKamError):
    pass


@dataclass
class RunConfig:
    """Resolved run configuration (config file merged with flag overrides)."""

    spec: dict
    n_x: int = 200
    m_t: int = 50
    n_v: int = 129
    v_max: float | None = None
    n_periods: int = 200
    q_max: int = 8
    window: int = DEFAULT_WINDOW
    seed: int = 1
    u0: str = "random"
    amplitude: float = 1.0
    burn_in_fraction: float = 0.5
    rotation_probes: int = 8
    rotation_span: int = 16
    aubry_probes: int = 16
    aubry_span: int = 16
    cluster_tolerance: float | None = None
    tolerances: dict = field(
        default_factory=lambda: {"lambda_tol": 1e-3, "fixedpoint_tol": 1e-9, "period_tol": 1e-3}
    )
    output_dir: str = "weakkam_out"

    def validate(self):
        if self.n_x < 8 or self.m_t < 4:
            raise ConfigError("grid sizes out of bounds: need n_x >= 8 and m_t >= 4")
        if self.n_v < 9 or self.n_v % 2 == 0:
            raise ConfigError("n_v must be odd and at least 9")
        if self.n_periods < 1:
            raise ConfigError("n_periods must be positive")
        for key in ("lambda_tol", "fixedpoint_tol", "period_tol"):
            if self.tolerances.get(key, 0.0) <= 0.0:
                raise ConfigError(f"tolerance {key} must be positive")
        if self.u0 not in ("zero", "cosine", "random"):
            raise ConfigError(f"unknown initial condition {self.u0!r}")


_OVERRIDE_KEYS = (
    "n_x", "m_t", "n_v", "v_max", "n_periods", "q_max", "window", "seed",
    "u0", "amplitude", "burn_in_fraction", "output_dir",
)


def load_config(args) -> RunConfig:
    data = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if "spec" not in data:
        raise ConfigError("config must provide a 'spec' object")
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    cfg = RunConfig(**data)
    for key in _OVERRIDE_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    for key in ("lambda_tol", "fixedpoint_tol", "period_tol"):
        val = getattr(args, key, None)
        if val is not None:
            cfg.tolerances[key] = val
    cfg.validate()
    try:
        spec_from_json(cfg.spec)
    except (KeyError, ValueError, WeakKamError) as exc:
        raise ConfigError(f"bad Hamiltonian spec: {exc}") from exc
    return cfg


def _setup(cfg: RunConfig):
    spec = spec_from_json(cfg.spec)
    cgrid = CircleGrid(cfg.n_x)
    tgrid = TimeGrid(cfg.m_t)
    vmax = cfg.v_max if cfg.v_max is not None else default_v_max(spec)
    vgrid = VelocityGrid(vmax, cfg.n_v)
    u0 = initial_field(cgrid, cfg.u0, cfg.seed, cfg.amplitude)
    return spec, cgrid, tgrid, vgrid, u0


def _sha256(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(cfg: RunConfig, command: str, outdir: Path, artifacts) -> None:
    manifest = {
        "tool": {"name": "weakkam", "version": "0.1.0"},
        "command": command,
        "config": asdict(cfg),
        "artifacts": {name: _sha256(outdir / name) for name in sorted(artifacts)},
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _json_dump(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_solve(cfg: RunConfig, outdir: Path, dump_feet: bool) -> int:
    spec, cgrid, tgrid, vgrid, u0 = _setup(cfg)
    trace = evolve(u0, spec, cgrid, tgrid, vgrid, cfg.n_periods, cfg.window)
    write_snapshots_csv(outdir / "snapshots.csv", trace.snapshots)
    artifacts = ["snapshots.csv"]
    if dump_feet:
        dump_foot_tables(trace, outdir / "foot_tables.bin")
        artifacts.append("foot_tables.bin")
    _write_manifest(cfg, "solve", outdir, artifacts)
    return 0


def cmd_critical_value(cfg: RunConfig, outdir: Path) -> int:
    spec, cgrid, tgrid, vgrid, u0 = _setup(cfg)
    trace = evolve(u0, spec, cgrid, tgrid, vgrid, cfg.n_periods, cfg.window)
    drift = estimate_lambda(trace, cfg.burn_in_fraction)
    lta = estimate_lambda(trace, cfg.burn_in_fraction, method=LONG_TIME_AVERAGE)
    payload = {
        "lambda": drift.value,
        "method": drift.method,
        "n_periods_used": drift.n_periods_used,
        "dispersion": drift.dispersion,
        "long_time_average": lta.value,
    }
    _json_dump(payload, outdir / "lambda.json")
    _write_manifest(cfg, "critical-value", outdir, ["lambda.json"])
    print(f"lambda = {drift.value!r} (dispersion {drift.dispersion:.3e})")
    return 0


def cmd_periodic(cfg: RunConfig, outdir: Path) -> int:
    spec, cgrid, tgrid, vgrid, u0 = _setup(cfg)
    trace = evolve(u0, spec, cgrid, tgrid, vgrid, cfg.n_periods, cfg.window)
    lam = estimate_lambda(trace, cfg.burn_in_fraction)
    gauged = spec.shifted_by(lam.value)
    solution = periodic_solution(
        gauged, cgrid, tgrid, vgrid, u0,
        tol=cfg.tolerances["fixedpoint_tol"], max_periods=cfg.n_periods,
    )
    gauged_trace = evolve(u0, gauged, cgrid, tgrid, vgrid, max(20, cfg.n_periods), cfg.window)
    lim = liminf_solution(gauged_trace, 0.0)
    cross = lim.phase0.values - solution.phase0.values
    cross_gap = float(cross.max() - cross.min())
    save_periodic_solution(
        solution, gauged, cgrid, tgrid,
        outdir / "solution.json", outdir / "solution_snapshots.csv",
    )
    _json_dump(
        {"lambda": lam.value, "residual": solution.residual, "liminf_cross_gap": cross_gap},
        outdir / "periodic_summary.json",
    )
    _write_manifest(
        cfg, "periodic", outdir,
        ["solution.json", "solution_snapshots.csv", "periodic_summary.json"],
    )
    print(f"residual = {solution.residual:.3e}, liminf cross-check gap = {cross_gap:.3e}")
    return 0


def cmd_rotation(cfg: RunConfig, outdir: Path) -> int:
    spec, cgrid, tgrid, vgrid, u0 = _setup(cfg)
    window = max(cfg.window, cfg.rotation_span + 2)
    trace = evolve(u0, spec, cgrid, tgrid, vgrid, cfg.n_periods, window)
    rho, spread = rotation_number(trace, cfg.rotation_probes, cfg.rotation_span)
    rational = rational_reduce(rho, cfg.q_max, spread)
    payload = {"rho": rho, "spread": spread, "rational": None}
    if rational is not None:
        payload["rational"] = {"p": rational[0], "q": rational[1], "error": rational[2]}
    _json_dump(payload, outdir / "rotation.json")
    _write_manifest(cfg, "rotation", outdir, ["rotation.json"])
    print(f"rho = {rho!r} (spread {spread:.3e})")
    return 0


def cmd_aubry(cfg: RunConfig, outdir: Path) -> int:
    spec, cgrid, tgrid, vgrid, u0 = _setup(cfg)
    window = max(cfg.window, cfg.aubry_span + 2)
    trace = evolve(u0, spec, cgrid, tgrid, vgrid, cfg.n_periods, window)
    sample = aubry_sample(trace, cfg.aubry_probes, cfg.aubry_span, cfg.cluster_tolerance)
    aubry_sample_write(sample, outdir / "aubry.json")
    _write_manifest(cfg, "aubry", outdir, ["aubry.json"])
    print(f"{len(sample.points)} cluster(s): {sample.points}")
    return 0


def cmd_verify(cfg: RunConfig, outdir: Path) -> int:
    spec, cgrid, tgrid, vgrid, u0 = _setup(cfg)
    hc = HarnessConfig(
        n_x=cfg.n_x, m_t=cfg.m_t, n_v=cfg.n_v,
        v_max=vgrid.v_max,
        n_periods=cfg.n_periods, q_max=cfg.q_max,
        window=max(cfg.window, cfg.rotation_span + 2),
        burn_in_fraction=cfg.burn_in_fraction,
        rotation_probes=cfg.rotation_probes, rotation_span=cfg.rotation_span,
        lambda_tol=cfg.tolerances["lambda_tol"],
        fixedpoint_tol=cfg.tolerances["fixedpoint_tol"],
        period_tol=cfg.tolerances["period_tol"],
    )
    report = verify_theorem(spec, u0, hc)
    write_report_json(report, outdir / "report.json")
    write_residuals_csv(report, outdir / "residuals.csv")
    trace = report.artifacts["trace"]
    write_snapshots_csv(outdir / "snapshots.csv", trace.snapshots)
    probe = backtrack(trace, 0.0, hc.rotation_span)
    characteristic_to_csv(probe, outdir / "characteristics.csv")
    _write_manifest(
        cfg, "verify", outdir,
        ["report.json", "residuals.csv", "snapshots.csv", "characteristics.csv"],
    )
    print(
        f"lambda={report.lam.value!r} rho={report.rho!r} T={report.detected_period} "
        f"theorem_ok={report.theorem_ok} addendum_ok={report.addendum_ok}"
    )
    if report.detected_period is None:
        print("no period within q_max passed the tolerance", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakkam",
        description="Weak-KAM solver for time-periodic convex Hamilton-Jacobi equations on the circle",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in [
        ("solve", "evolve and write boundary snapshots"),
        ("critical-value", "estimate the critical value lambda"),
        ("periodic", "periodic solution by power iteration, cross-checked by the running-minimum construction"),
        ("rotation", "rotation number of backtracked minimizers"),
        ("aubry", "sample the projected invariant set"),
        ("verify", "full convergence harness"),
        ("selftest", "operator invariant suite"),
    ]:
        p = sub.add_parser(name, help=desc)
        if name != "selftest":
            p.add_argument("--config", help="JSON run configuration")
            p.add_argument("--n-x", dest="n_x", type=int)
            p.add_argument("--m-t", dest="m_t", type=int)
            p.add_argument("--n-v", dest="n_v", type=int)
            p.add_argument("--v-max", dest="v_max", type=float)
            p.add_argument("--n-periods", dest="n_periods", type=int)
            p.add_argument("--q-max", dest="q_max", type=int)
            p.add_argument("--window", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--u0", choices=["zero", "cosine", "random"])
            p.add_argument("--amplitude", type=float)
            p.add_argument("--burn-in", dest="burn_in_fraction", type=float)
            p.add_argument("--lambda-tol", dest="lambda_tol", type=float)
            p.add_argument("--fixedpoint-tol", dest="fixedpoint_tol", type=float)
            p.add_argument("--period-tol", dest="period_tol", type=float)
            p.add_argument("--output-dir", dest="output_dir")
        if name == "solve":
            p.add_argument("--dump-feet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return selftest_mod.main()
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "solve":
            return cmd_solve(cfg, outdir, args.dump_feet)
        if args.command == "critical-value":
            return cmd_critical_value(cfg, outdir)
        if args.command == "periodic":
            return cmd_periodic(cfg, outdir)
        if args.command == "rotation":
            return cmd_rotation(cfg, outdir)
        if args.command == "aubry":
            return cmd_aubry(cfg, outdir)
        if args.command == "verify":
            return cmd_verify(cfg, outdir)
    except InsufficientData as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return 3
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
