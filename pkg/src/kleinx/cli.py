"""Command-line front end.

Exit codes: 0 success, 1 numerical failure, 2 usage error, 3 I/O error.
Settings come from defaults, then a key=value config file (``--config`` or
``$KLEINX_CONFIG``), then command-line flags.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DomainError, KleinxError
from .odeint import DEFAULT_ABS_TOL, DEFAULT_EVENT_TOL, DEFAULT_REL_TOL

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    event_tol: float = DEFAULT_EVENT_TOL
    sweep_steps: int = 999
    sturm_n: int = 256
    geometry_n: int = 64
    y_max: float = 50.0
    output_dir: str = "."
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "event_tol", "y_max"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        for name in ("sweep_steps", "sturm_n", "geometry_n", "workers"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be at least 1")
        if self.format not in ("csv", "json", "obj"):
            raise DomainError(f"unknown format {self.format!r}")

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" if f.type != "str"
                       else f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        return (base or cls()).updated(parse_config(text))

    def updated(self, values: dict) -> "RunConfig":
        kinds = {f.name: f.type for f in fields(self)}
        clean = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in kinds:
                raise DomainError(f"unknown config key {key!r}")
            if raw is None:
                continue
            kind = kinds[key]
            try:
                clean[key] = raw if kind == "str" else (int(raw) if kind == "int" else float(raw))
            except ValueError as exc:
                raise DomainError(f"bad value for {key}: {raw!r}") from exc
        return dataclasses.replace(self, **clean)


def parse_config(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val.strip("'\"")
    return out


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    path = getattr(args, "config", None) or os.environ.get("KLEINX_CONFIG")
    if path:
        cfg = RunConfig.from_text(Path(path).read_text(), cfg)
    flags = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    return cfg.updated(flags)


def _out(cfg: RunConfig, name: str) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _emit(args, payload, text: str):
    print(_dump(payload) if getattr(args, "json", False) else text, end="" if text.endswith("\n") else "\n")


# --- subcommands -------------------------------------------------------------

def cmd_verify(args, cfg) -> int:
    from . import acceptance
    only = {int(s) for s in args.only.split(",")} if args.only else None
    checks = acceptance.run_all(only, workers=max(cfg.workers, 1))
    if args.json:
        print(_dump([c.as_dict() for c in checks]), end="")
    else:
        for c in checks:
            print(c.line())
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"first failing check: {failed[0].number} {failed[0].name} ({failed[0].first_failure})",
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_solve(args, cfg) -> int:
    from . import systems
    p = float(args.p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p}")
    y_end = float(args.y_end) if args.y_end is not None else 2.0 * _period()
    if args.system == "full":
        traj = systems.integrate_full(p, y_end, cfg.rel_tol, cfg.abs_tol)
        full = traj.states
        labels = ["phi0", "phi1", "phi2", "dphi0", "dphi1", "dphi2"]
    elif args.system == "syst12":
        traj = systems.integrate_syst12(p, y_end, cfg.rel_tol, cfg.abs_tol)
        labels = ["phi1", "phi2", "dphi1", "dphi2"]
        full = None
    else:
        traj = systems.integrate_syst01(p, y_end, cfg.rel_tol, cfg.abs_tol)
        labels = ["phi0", "phi1", "dphi0", "dphi1"]
        full = None
    closed = dict(zip(("E0", "E1", "E2"), systems.integrals_closed_form(p)))
    if full is not None:
        I = systems.integrals_of_states(full)
        names = ["E0", "E1", "E2", "kappa0", "kappa1", "kappa2"]
        drift = {n: float(np.abs(I[:, i] - I[0, i]).max()) for i, n in enumerate(names)}
    else:
        s = traj.states
        k = systems.kappa0(*s.T) if args.system == "syst12" else systems.kappa2(*s.T)
        drift = {"kappa0" if args.system == "syst12" else "kappa2": float(np.abs(k - k[0]).max())}
    payload = {"p": p, "system": args.system, "trajectory": traj.to_dict(labels),
               "integrals_closed_form": closed, "drift": drift, "max_drift": max(drift.values())}
    path = _out(cfg, args.out or "trajectory.json")
    path.write_text(_dump(payload))
    summary = {"file": str(path), "steps": traj.n_steps, "E1": closed["E1"], "drift": drift,
               "max_drift": payload["max_drift"]}
    _emit(args, summary, f"wrote {path} ({traj.n_steps} steps); max first-integral drift "
                         f"{payload['max_drift']:.3e}; E1 = {closed['E1']:.12g}")
    return EXIT_OK


def _period():
    from .extremal import PERIOD
    return PERIOD


def cmd_sweep(args, cfg) -> int:
    from . import sweep
    rep = sweep.run_sweep(args.p_min, args.p_max, cfg.sweep_steps, cfg.workers, cfg.rel_tol, cfg.abs_tol,
                          cfg.y_max, refine=not args.no_refine, event_tol=cfg.event_tol)
    csv_path = _out(cfg, "sweep.csv")
    csv_path.write_text(sweep.sweep_csv(rep.records))
    summary = rep.summary()
    _out(cfg, "sweep_report.json").write_text(_dump(summary))
    text = (f"wrote {csv_path}: {len(rep.records)} points, {len(rep.sign_changes)} sign change(s) of cot(alpha), "
            f"root ~ {rep.root_bisected if rep.root_bisected is not None else rep.root_interpolated}, "
            f"{rep.monotonicity_violations} monotonicity violation(s) [{rep.label}]")
    _emit(args, summary, text)
    return EXIT_OK if rep.failures == 0 else EXIT_NUMERICAL


def cmd_rule_out(args, cfg) -> int:
    from . import sweep
    ev = sweep.rule_out_upper(args.p, cfg.y_max, cfg.rel_tol, cfg.abs_tol)
    payload = dataclasses.asdict(ev)
    _out(cfg, "rule_out.json").write_text(_dump(payload))
    print(_dump(payload), end="")
    return EXIT_NUMERICAL if ev.falsified or not ev.signs_ok else EXIT_OK


def cmd_interval_check(args, cfg) -> int:
    from . import sweep
    ev = sweep.interval_checks(args.p, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, y_max=cfg.y_max)
    payload = dataclasses.asdict(ev)
    _out(cfg, "interval_check.json").write_text(_dump(payload))
    print(_dump(payload), end="")
    return EXIT_OK if ev.passed else EXIT_NUMERICAL


def cmd_sturm(args, cfg) -> int:
    from . import sturm
    ks = [args.k] if args.k is not None else [0, 1, 2]
    channels = {str(k): [ln.as_dict() for ln in sturm.periodic_spectrum(k, None, cfg.sturm_n, args.count)]
                for k in ks}
    rep = sturm.verify_multiplicity(cfg.sturm_n, args.count)
    payload = {"n": cfg.sturm_n, "channels": channels, "multiplicity": rep.as_dict()}
    payload["multiplicity"].pop("lines")
    path = _out(cfg, "sturm.json")
    path.write_text(_dump(payload))
    print(_dump(payload), end="")
    return EXIT_OK if rep.passed else EXIT_NUMERICAL


def cmd_embed(args, cfg) -> int:
    from . import extremal
    fmt = args.format or ("obj" if cfg.format == "obj" else "csv")
    if fmt == "obj":
        axes = tuple(int(a) for a in args.axes.split(","))
        path = _out(cfg, "embedding.obj")
        extremal.write_mesh_obj(path, args.nx, args.ny, axes)
    else:
        path = _out(cfg, "embedding.csv")
        extremal.write_mesh_csv(path, args.nx, args.ny)
    _emit(args, {"file": str(path), "vertices": args.nx * args.ny},
          f"wrote {path} ({args.nx * args.ny} vertices)")
    return EXIT_OK


def cmd_geometry(args, cfg) -> int:
    from . import geometry
    status = EXIT_OK
    report = {}
    if args.check_identity or not (args.lawson or args.bipolar):
        rep = geometry.verify_g0_scaling(cfg.geometry_n)
        z = np.linspace(0.005, 0.5, 100)
        r1, r2 = geometry.wp_cn_identities(z)
        report["identity"] = {"n": rep.n, "max_rel_error": rep.max_rel_error,
                              "max_rel_error_x_equals_u": rep.max_rel_error_x_equals_u,
                              "cn_identity": float(np.abs(r1).max()), "factor_identity": float(np.abs(r2).max()),
                              "passed": rep.passed}
        if not rep.passed:
            status = EXIT_NUMERICAL
    if args.lawson:
        m, k = args.lawson
        path = _out(cfg, f"lawson_{m}_{k}.obj")
        geometry.write_lawson_obj(path, m, k)
        report["lawson"] = str(path)
    if args.bipolar:
        m, k = args.bipolar
        path = _out(cfg, f"bipolar_{m}_{k}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["u", "v", "E_coef", "G_coef"])
            for row in geometry.bipolar_table(m, k, cfg.geometry_n):
                w.writerow([f"{v:.17g}" for v in row])
        report["bipolar"] = str(path)
    _out(cfg, "geometry.json").write_text(_dump(report))
    print(_dump(report), end="")
    return status


def cmd_specfun_selftest(args, cfg) -> int:
    from .acceptance import specfun_selftest
    rows = specfun_selftest()
    ok = all(v < b for _, v, b in rows)
    payload = [{"check": n, "value": v, "bound": b, "ok": bool(v < b)} for n, v, b in rows]
    _emit(args, payload, "\n".join(f"{'ok  ' if v < b else 'FAIL'} {n}: {v:.3e} (< {b:g})" for n, v, b in rows))
    return EXIT_OK if ok else EXIT_NUMERICAL


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="key=value file; falls back to $KLEINX_CONFIG")
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--abs-tol", dest="abs_tol", type=float)
    g.add_argument("--event-tol", dest="event_tol", type=float)
    g.add_argument("--y-max", dest="y_max", type=float)
    g.add_argument("--output-dir", dest="output_dir")
    g.add_argument("--workers", type=int)
    g.add_argument("--json", action="store_true", help="machine-readable output")

    ap = argparse.ArgumentParser(prog="kleinx", description="Extremal Klein-bottle metric toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", parents=[common], help="integrate from initial_state(p)")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--y-end", dest="y_end", type=float)
    p.add_argument("--system", choices=("full", "syst12", "syst01"), default="full")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="cot(alpha) over a grid of p")
    p.add_argument("--steps", dest="sweep_steps", type=int)
    p.add_argument("--p-min", dest="p_min", type=float)
    p.add_argument("--p-max", dest="p_max", type=float)
    p.add_argument("--no-refine", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rule-out", parents=[common], help="evidence for sqrt(3)/2 < p < 1")
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_rule_out)

    p = sub.add_parser("interval-check", parents=[common], help="evidence for 0 < p < sqrt(3)/2")
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_interval_check)

    p = sub.add_parser("sturm", parents=[common], help="periodic spectra and multiplicity")
    p.add_argument("--k", type=int, choices=(0, 1, 2))
    p.add_argument("--n", dest="sturm_n", type=int)
    p.add_argument("--count", type=int, default=6)
    p.set_defaults(func=cmd_sturm)

    p = sub.add_parser("embed", parents=[common], help="export the embedding mesh")
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--ny", type=int, default=64)
    p.add_argument("--format", choices=("csv", "obj"))
    p.add_argument("--axes", default="1,2,4", help="OBJ projection coordinates, 1-based")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("geometry", parents=[common], help="g0 identity, Lawson and bipolar exports")
    p.add_argument("--check-identity", action="store_true")
    p.add_argument("--lawson", nargs=2, type=int, metavar=("M", "K"))
    p.add_argument("--bipolar", nargs=2, type=int, metavar=("M", "K"))
    p.add_argument("--n", dest="geometry_n", type=int)
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("specfun-selftest", parents=[common], help="elliptic-function identity suite")
    p.set_defaults(func=cmd_specfun_selftest)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return args.func(args, cfg)
    except DomainError as exc:
        print(f"kleinx: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"kleinx: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except KleinxError as exc:
        print(f"kleinx: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
