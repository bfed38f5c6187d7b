"""Command-line driver: problem configs in, certified runs out.

Commands
--------
``unfold-homog young check --config CFG``   doubling certificates for a
    Young function; exit 2 when a certificate fails.
``unfold-homog young norm --config CFG``    modular and Luxemburg norm of
    a configured field.
``unfold-homog hom solve|table --config CFG --out DIR``  cell-problem
    ladders / effective-density tables; refuses integrands that fail the
    declared growth bounds (exit 3); exit 4 when no entry solves.
``unfold-homog verify SUITE``               named assertion suites
    (unfold, two-scale, sweep, relaxation); nonzero exit iff an
    assertion fails.
``unfold-homog report --in DIR``            render figures for artifacts
    in a run directory.

Every run writes a manifest with the config hash, seed and a sha256
inventory of its outputs; identical config and seed reproduce identical
digests at any thread count (threads affect scheduling only).

Exit codes: 0 success, 1 usage/config errors, 2 certificate or assertion
failure, 3 growth refusal, 4 no solve succeeded.

All commands accept one JSON config document with a top-level ``task``
discriminator (validated against the subcommand) and a ``schema_version``
field; see the README for the schema.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .cell import SolverConfig, estimate_f_hom, hom_table
from .errors import ConfigError, SolverError, UnfoldHomogError
from .field import Box, Grid, GridField, sample
from .integrand import IntegrandSpec, growth_check
from .report import render_directory
from .suites import SUITES, run_suite
from .young import (
    YoungFunction,
    delta2_certificate,
    luxemburg_norm,
    modular,
    nabla2_certificate,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def _load_config(path, expected_task=None):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    task = cfg.get("task")
    if expected_task is not None and task is not None and task != expected_task:
        raise ConfigError(f"config task {task!r} does not match command "
                          f"{expected_task!r}")
    return cfg


def _config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Run record: config hash, seed, per-task status, output digests."""

    def __init__(self, command, cfg, seed, threads, out_dir):
        self.command = command
        self.cfg = cfg
        self.seed = seed
        self.threads = threads
        self.out_dir = out_dir
        self.tasks = []
        self.outputs = []
        self.started = _utcnow()

    def add_task(self, name, status, detail=""):
        self.tasks.append({"task": name, "status": status, "detail": detail})

    def add_output(self, path):
        self.outputs.append({
            "path": os.path.relpath(path, self.out_dir),
            "sha256": _sha256(path),
            "bytes": os.path.getsize(path),
        })

    def write(self):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "command": self.command,
            "config_hash": _config_hash(self.cfg),
            "config": self.cfg,
            "seed": self.seed,
            "threads": self.threads,
            "started_utc": self.started,
            "finished_utc": _utcnow(),
            "tasks": self.tasks,
            "outputs": self.outputs,
        }
        path = os.path.join(self.out_dir, "manifest.json")
        _write_json(path, payload)
        return path


def _utcnow():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _resolve_threads(args):
    if getattr(args, "threads", None):
        return int(args.threads)
    env = os.environ.get("UNFOLD_HOMOG_THREADS")
    return int(env) if env else 1


def _resolve_seed(args, cfg):
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(cfg.get("seed", 0))


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _build_young(section):
    if not isinstance(section, dict) or "kind" not in section:
        raise ConfigError("config needs a 'young' object with a 'kind' field")
    try:
        return YoungFunction.from_json(section)
    except UnfoldHomogError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad Young function config: {exc}") from exc


def _build_field(section, seed):
    try:
        gsec = section["grid"]
        box = Box(tuple(gsec["box"]["lower"]), tuple(gsec["box"]["upper"]))
        grid = Grid(box, tuple(gsec["resolution"]))
        bc = section.get("bc", "free")
        fn = section["fn"]
        kind = fn["kind"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad field config: {exc}") from exc
    if kind == "constant":
        c = float(fn.get("value", 1.0))
        return sample(lambda *xs: c + 0.0 * xs[0], grid, bc=bc)
    if kind == "affine":
        slope = np.asarray(fn.get("slope", [1.0] * grid.dim), dtype=float)
        offset = float(fn.get("offset", 0.0))
        return sample(lambda *xs: sum(s * x for s, x in zip(slope, xs)) + offset,
                      grid, bc=bc)
    if kind == "sin":
        freq = float(fn.get("freq", 1.0))
        amp = float(fn.get("amplitude", 1.0))
        axis = int(fn.get("axis", 0))
        return sample(lambda *xs: amp * np.sin(2 * np.pi * freq * xs[axis]),
                      grid, bc=bc)
    if kind == "random":
        rng = np.random.default_rng(seed)
        lo, hi = float(fn.get("low", -1.0)), float(fn.get("high", 1.0))
        shape = tuple(r if bc == "periodic" else r + 1 for r in grid.resolution)
        return GridField(grid, rng.uniform(lo, hi, shape), bc=bc)
    raise ConfigError(f"unknown field fn kind {kind!r}")


def _build_integrand(section):
    if not isinstance(section, dict):
        raise ConfigError("config needs an 'integrand' object")
    try:
        return IntegrandSpec.from_json(section)
    except UnfoldHomogError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad integrand config: {exc}") from exc


def _build_xi_grid(section, d, N):
    if isinstance(section, dict):
        start, stop = float(section["start"]), float(section["stop"])
        step = float(section["step"])
        vals = np.arange(start, stop + 0.5 * step, step)
        if d * N != 1:
            raise ConfigError("range-style xi grids need d = N = 1")
        return [np.asarray([[v]]) for v in vals]
    if isinstance(section, list):
        return [np.asarray(x, dtype=float).reshape(d, N) for x in section]
    raise ConfigError("xi_grid must be a list or a {start, stop, step} object")


def _build_solver(section, seed):
    section = section or {}
    known = {f for f in SolverConfig.__dataclass_fields__}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown solver options: {sorted(unknown)}")
    return SolverConfig(**{**section, "seed": seed})


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_young(args):
    task = f"young-{args.mode}"
    cfg = _load_config(args.config, task)
    seed = _resolve_seed(args, cfg)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    manifest = Manifest(task, cfg, seed, 1, out_dir)
    B = _build_young(cfg.get("young", {"kind": "power", "params": [2.0]}))

    if args.mode == "check":
        report = {"young": B.to_json(), "valid": True}
        status = 0
        try:
            B.validate()
        except UnfoldHomogError as exc:
            report["valid"] = False
            report["validation_error"] = str(exc)
            status = 2
        d2cfg = cfg.get("delta2", {})
        n2cfg = cfg.get("nabla2", {})
        cert_d = delta2_certificate(B, d2cfg.get("t0", 1.0), d2cfg.get("t_max", 1e6),
                                    d2cfg.get("samples", 800))
        cert_n = nabla2_certificate(B, n2cfg.get("t0", 1.01), n2cfg.get("t_max", 1e6))
        report["delta2"] = cert_d.to_json()
        report["nabla2"] = cert_n.to_json()
        report["passed"] = bool(report["valid"] and cert_d.passed and cert_n.passed)
        if not report["passed"]:
            status = 2
        path = os.path.join(out_dir, "young_check.json")
        _write_json(path, report)
        manifest.add_output(path)
        manifest.add_task(task, "passed" if status == 0 else "failed")
        manifest.write()
        print(f"wrote {path} (delta2 passed={cert_d.passed}, "
              f"nabla2 passed={cert_n.passed})")
        return status

    field = _build_field(cfg.get("field", _default_field_section()), seed)
    tol = float(cfg.get("tol", 1e-10))
    report = {
        "young": B.to_json(),
        "modular": modular(B, field),
        "luxemburg_norm": luxemburg_norm(B, field, tol=tol),
        "tol": tol,
        "field": cfg.get("field", _default_field_section()),
    }
    path = os.path.join(out_dir, "young_norm.json")
    _write_json(path, report)
    manifest.add_output(path)
    manifest.add_task(task, "passed")
    manifest.write()
    print(f"wrote {path} (norm={report['luxemburg_norm']:.12g})")
    return 0


def _default_field_section():
    return {"grid": {"box": {"lower": [0.0], "upper": [1.0]}, "resolution": [256]},
            "bc": "free", "fn": {"kind": "sin", "freq": 1, "amplitude": 1}}


def _cmd_hom(args):
    task = f"hom-{args.mode}"
    cfg = _load_config(args.config, task)
    if "integrand" not in cfg:
        raise ConfigError("hom commands need an 'integrand' section")
    seed = _resolve_seed(args, cfg)
    threads = _resolve_threads(args)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    manifest = Manifest(task, cfg, seed, threads, out_dir)
    spec = _build_integrand(cfg["integrand"])
    if spec.growth_B is None:
        raise ConfigError("integrand config must declare growth.B for solver use")

    gateway = growth_check(spec, spec.growth_B,
                           radius=float(cfg.get("growth_radius", 10.0)))
    if not (gateway.lower_ok and gateway.upper_ok):
        path = os.path.join(out_dir, "growth_violation.json")
        _write_json(path, gateway.to_json())
        manifest.add_output(path)
        manifest.add_task(task, "refused", "growth bounds violated")
        manifest.write()
        print(f"growth bounds violated (lower_ok={gateway.lower_ok}, "
              f"upper_ok={gateway.upper_ok}); report at {path}", file=sys.stderr)
        return 3

    solver = _build_solver(cfg.get("solver"), seed)
    t_ladder = tuple(cfg.get("t_ladder", [1, 2, 4, 8]))
    resolution = int(cfg.get("resolution", 64))

    if args.mode == "solve":
        xi = np.asarray(cfg.get("xi", 1.0), dtype=float).reshape(spec.d, spec.N)
        try:
            est = estimate_f_hom(spec, xi, t_ladder, resolution, solver,
                                 bc=cfg.get("bc", "zero"))
        except SolverError as exc:
            manifest.add_task(task, "failed", str(exc))
            manifest.write()
            print(f"solver failed: {exc}", file=sys.stderr)
            return 4
        payload = est.to_json()
        payload["growth"] = gateway.to_json()
        path = os.path.join(out_dir, "hom_solve.json")
        _write_json(path, payload)
        manifest.add_output(path)
        manifest.add_task(task, "passed", f"f_hom={est.f_hom:.12g}")
        manifest.write()
        print(f"f_hom({xi.ravel().tolist()}) = {est.f_hom:.12g} "
              f"(ladder {list(est.t_ladder)})")
        return 0

    xi_grid = _build_xi_grid(cfg.get("xi_grid", {"start": -2, "stop": 2, "step": 0.5}),
                             spec.d, spec.N)
    table = hom_table(spec, xi_grid, t_ladder, resolution, solver, threads=threads,
                      bc=cfg.get("bc", "zero"))
    wrote = []
    if args.format in ("csv", None):
        csv_path = os.path.join(out_dir, "hom_table.csv")
        table.to_csv(csv_path)
        wrote.append(csv_path)
    json_path = os.path.join(out_dir, "hom_table.json")
    table.save_json(json_path)
    wrote.append(json_path)
    for p in wrote:
        manifest.add_output(p)
    n_failed = len(table.failures)
    n_total = len(xi_grid)
    if n_total and n_failed == n_total:
        manifest.add_task(task, "failed", "no entry solved")
        manifest.write()
        print("no table entry solved", file=sys.stderr)
        return 4
    manifest.add_task(task, "passed", f"{n_total - n_failed}/{n_total} entries")
    manifest.write()
    print(f"wrote {', '.join(wrote)} ({n_total - n_failed}/{n_total} entries solved)")
    return 0


def _cmd_verify(args):
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; available: {', '.join(SUITES)}",
              file=sys.stderr)
        return 1
    task = f"verify-{args.suite}"
    cfg = _load_config(args.config, task)
    seed = _resolve_seed(args, cfg)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    manifest = Manifest(task, cfg, seed, _resolve_threads(args), out_dir)
    section = dict(cfg.get("suite", {}))
    section.setdefault("seed", seed)
    report = run_suite(args.suite, section)
    path = os.path.join(out_dir, f"verify_{args.suite.replace('-', '_')}.json")
    _write_json(path, report)
    manifest.add_output(path)
    manifest.add_task(task, "passed" if report["passed"] else "failed")
    manifest.write()
    n_pass = sum(r["passed"] for r in report["assertions"])
    print(f"{args.suite}: {n_pass}/{len(report['assertions'])} assertions passed "
          f"-> {path}")
    if not report["passed"]:
        for r in report["assertions"]:
            if not r["passed"]:
                print(f"  FAIL {r['name']}: measured={r['measured']:.6g} "
                      f"bound={r['bound']:.6g}", file=sys.stderr)
        return 2
    return 0


def _cmd_report(args):
    in_dir = args.in_dir
    if not os.path.isdir(in_dir):
        print(f"run directory not found: {in_dir}", file=sys.stderr)
        return 1
    written = render_directory(in_dir, args.out)
    for path in written:
        print(f"wrote {path}")
    if not written:
        print("no renderable artifacts found", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="unfold-homog",
        description="Numerical periodic homogenization with Orlicz growth")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    young = sub.add_parser("young", help="Young function certificates and norms")
    ysub = young.add_subparsers(dest="mode", required=True)
    for mode in ("check", "norm"):
        p = ysub.add_parser(mode)
        _common_options(p)

    hom = sub.add_parser("hom", help="cell problems and effective-density tables")
    hsub = hom.add_subparsers(dest="mode", required=True)
    for mode in ("solve", "table"):
        p = hsub.add_parser(mode)
        _common_options(p)

    verify = sub.add_parser("verify", help="named verification suites")
    verify.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    _common_options(verify)

    rep = sub.add_parser("report", help="render figures for run artifacts")
    rep.add_argument("--in", dest="in_dir", required=True, help="run directory")
    rep.add_argument("--out", default=None, help="figure directory (default: --in)")
    return parser


def _common_options(p):
    p.add_argument("--config", default=None, help="JSON config path")
    p.add_argument("--out", default=None, help="output directory (default: cwd)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (fallback: UNFOLD_HOMOG_THREADS, then 1)")
    p.add_argument("--seed", type=int, default=None,
                   help="root seed (overrides the config)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="table format (JSON summaries are always written)")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "young":
            return _cmd_young(args)
        if args.command == "hom":
            return _cmd_hom(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "report":
            return _cmd_report(args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except UnfoldHomogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
