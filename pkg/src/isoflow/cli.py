"""Command-line front end.

Subcommands: ``simulate``, ``closed-form``, ``minimal``, ``check`` and
``catalog list``. Exit codes: 0 ok, 1 audit failure, 2 validation error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, catalog, checks, invariants
from .curvature import curvature_report
from .flow_ode import (EUCLIDEAN, SPHERICAL, FlowSpec, IntegrationError, MinimalPointError,
                       NoCollapse, find_minimal_point, integrate)
from .integrator import StepSizeUnderflow
from .rank2 import (DomainError, Rank2Config, collapse_times, euclidean_collapse_time,
                    euclidean_solution,
                    mean_curvature_closed, shape_norms_closed, spherical_series)
from .root_system import (ChamberError, RootSystemData, ValidationError, polar_inverse,
                          validate)

EXIT_OK, EXIT_AUDIT, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3
CURVATURE_COLUMNS = ["H_E_norm2", "H_S_norm2", "A_E_norm2", "A_S_norm2", "phi", "ratio_A2_over_H2"]


def read_roots_file(path: str, normalize: bool = True) -> RootSystemData:
    """Parse ``rank k`` followed by lines ``m a_1 ... a_k`` (``#`` starts a comment)."""
    rank = None
    roots, mults = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if rank is None:
                if parts[0] != "rank" or len(parts) != 2:
                    raise ValidationError(f"{path}:{lineno}: expected header 'rank k'")
                rank = int(parts[1])
                continue
            if len(parts) != rank + 1:
                raise ValidationError(f"{path}:{lineno}: expected 'm' plus {rank} coordinates")
            m = float(parts[0])
            if m != int(m):
                raise ValidationError(f"{path}:{lineno}: multiplicity must be an integer")
            mults.append(int(m))
            roots.append([float(p) for p in parts[1:]])
    if rank is None or not roots:
        raise ValidationError(f"{path}: no roots found")
    if normalize:
        return RootSystemData.from_roots(roots, mults, label=path)
    return RootSystemData.unchecked(roots, mults, normalize=False, label=path)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _json_num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return _json_num(obj.item())
    if isinstance(obj, float):
        return _json_num(obj)
    return obj


def _angle(args, value):
    if value is None:
        return None
    return math.radians(value) if args.degrees else float(value)


def _rank2_config(args) -> Rank2Config:
    for field in ("g", "m1", "m2"):
        if getattr(args, field) is None:
            raise ValidationError(f"--{field} is required without --roots")
    return Rank2Config(args.g, args.m1, args.m2, theta0=_angle(args, args.theta0),
                       checked=not args.unchecked)


def _config_echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _write(args, columns, rows, meta):
    """Emit rows as CSV (meta in a sidecar) or as one JSON document."""
    out = args.output
    if args.format == "json":
        doc = dict(meta)
        doc["columns"] = columns
        doc["rows"] = [[_json_num(float(v)) if not isinstance(v, (int, np.integer)) else int(v)
                        for v in row] for row in rows]
        text = json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    meta_text = json.dumps(_clean(meta), indent=2, allow_nan=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        with open(out + ".meta.json", "w", encoding="utf-8") as fh:
            fh.write(meta_text)
    else:
        sys.stdout.write(buf.getvalue())
        sys.stdout.write("# meta " + json.dumps(_clean(meta), allow_nan=False) + "\n")


def _curvature_row(rs, x, kind):
    rep = curvature_report(rs, x)
    if kind == SPHERICAL:
        ratio = rep.a2_spherical / rep.h2_spherical if rep.h2_spherical > 0 else math.inf
    else:
        ratio = rep.a2_euclidean / rep.h2_euclidean
    return [rep.h2_euclidean, rep.h2_spherical, rep.a2_euclidean, rep.a2_spherical, rep.phi, ratio]


def cmd_simulate(args) -> int:
    if args.roots:
        rs = read_roots_file(args.roots, normalize=not args.raw)
        if args.x0 is None:
            raise ValidationError("--x0 is required with --roots")
        x0 = np.array([float(v) for v in args.x0.split(",")])
        if args.kind == SPHERICAL:
            x0 = x0 / np.linalg.norm(x0)
        cfg = None
    else:
        cfg = _rank2_config(args)
        rs = cfg.root_system()
        x0 = polar_inverse(1.0, cfg.theta0)
    spec = FlowSpec(args.kind, rs, x0, (args.t_start, args.t_end), args.rtol, args.atol,
                    args.collapse_margin)
    traj = integrate(spec)
    if args.steps:
        ts, pts = np.array(traj.times), np.array(traj.points)
    else:
        lo, hi = traj.times[0], traj.times[-1]
        if traj.start.reason == "converged_to_fixed_point":
            lo = args.t_start
        ts = np.linspace(lo, hi, args.samples)
        pts = traj(ts)
    rank2 = rs.rank == 2
    columns = ["t", "r"] + (["theta"] if rank2 else []) + [f"x_{i + 1}" for i in range(rs.rank)]
    columns += CURVATURE_COLUMNS
    rows = []
    for t, x in zip(ts, pts):
        row = [t, float(np.linalg.norm(x))]
        if rank2:
            row.append(math.atan2(x[1], x[0]))
        row += list(x) + _curvature_row(rs, x, args.kind)
        rows.append(row)
    prov = {c: "ode" for c in columns[: 2 + rank2 + rs.rank]}
    prov.update({c: "oracle" for c in CURVATURE_COLUMNS})
    meta = {"version": __version__, "command": "simulate", "config": _config_echo(args),
            "termination": traj.termination_dict(), "provenance": prov, "stats": traj.stats}
    _write(args, columns, rows, meta)
    return EXIT_OK


def _closed_row(cfg, kind, t):
    """One closed-form row; ``None`` values mark a time outside the flow's domain."""
    if kind == SPHERICAL:
        s = spherical_series(cfg, [t])
        r, th = 1.0, float(s.theta[0])
        h2s, a2s, phi = float(s.h2[0]), float(s.a2[0]), float(s.phi[0])
        h2e, a2e = h2s + cfg.n ** 2, a2s + cfg.n
        ratio = a2s / h2s if h2s > 0 else math.inf
    else:
        r, th = euclidean_solution(cfg, t)
        he, hs = mean_curvature_closed(cfg, r, th)
        a2e, a2s = shape_norms_closed(cfg, r, th)
        h2e, h2s = float(he @ he), float(hs @ hs)
        phi = a2s - h2s / cfg.n
        ratio = a2e / h2e
    return [r, th, h2e, h2s, a2e, a2s, phi, ratio]


def cmd_closed_form(args) -> int:
    cfg = _rank2_config(args)
    if args.times:
        ts = [float(v) for v in args.times.split(",")]
    else:
        ts = list(np.linspace(args.t_start, args.t_end, args.samples))
    columns = ["t", "in_domain", "r", "theta"] + CURVATURE_COLUMNS
    rows = []
    for t in ts:
        try:
            rows.append([t, 1] + _closed_row(cfg, args.kind, t))
        except (DomainError, ChamberError):
            rows.append([t, 0] + [math.nan] * (len(columns) - 2))
    col = collapse_times(cfg) if args.kind == SPHERICAL else euclidean_collapse_time(cfg)
    meta = {"version": __version__, "command": "closed-form", "config": _config_echo(args),
            "rank2": cfg.to_dict(),
            "collapse": None if col is None else {"time": col.time, "target": col.target},
            "provenance": {c: "closed_form" for c in columns}}
    _write(args, columns, rows, meta)
    return EXIT_OK


def cmd_minimal(args) -> int:
    if args.roots:
        rs = read_roots_file(args.roots, normalize=not args.raw)
    else:
        rs = _rank2_config(args).root_system()
    z = find_minimal_point(rs)
    rep = curvature_report(rs, z)
    out = {"z": z.tolist(), "H_S_residual": math.sqrt(rep.h2_spherical),
           "H_E_norm": math.sqrt(rep.h2_euclidean), "A_S_norm2": rep.a2_spherical,
           "n": rs.n}
    if rs.rank == 2:
        out["theta_min"] = math.atan2(z[1], z[0])
    if args.format == "json":
        doc = {"version": __version__, "command": "minimal", "config": _config_echo(args),
               "result": out, "provenance": {"z": "ode", "theta_min": "ode", "H_S_residual": "oracle",
                                             "H_E_norm": "oracle", "A_S_norm2": "oracle"}}
        sys.stdout.write(json.dumps(_clean(doc), indent=2) + "\n")
        return EXIT_OK
    lines = ["z " + " ".join(_fmt(v) for v in z)]
    if "theta_min" in out:
        lines.append(f"theta_min {out['theta_min']!r}")
    lines.append(f"H_S_residual {out['H_S_residual']:.3e}")
    # 13 significant digits, so the integer-valued norms print as such
    for key in ("H_E_norm", "A_S_norm2"):
        lines.append(f"{key} {float(format(out[key], '.13g'))!r}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _check_one(job):
    """Identity checks and audits for one configuration (runs in a worker)."""
    name, rs, cfg, samples, seed, entry = job
    rng = None if seed is None else np.random.default_rng(seed)
    identities = [c.to_dict() for c in checks.check_root_system(rs, cfg, samples, rng)]
    audits = []
    informational = []
    if cfg is not None:
        flow_cfg = cfg if not cfg.is_minimal else cfg.with_theta0(0.5 * cfg.theta_min)
        col = collapse_times(flow_cfg)
        grid = np.linspace(-5.0, 0.9 * col.time, 400)
        audits.append(invariants.ancient_limits_audit(flow_cfg).to_dict())
        audits.append(invariants.ratio_chain_audit(flow_cfg, grid).to_dict())
        from .rank2 import closed_form_trajectory
        traj = closed_form_trajectory(flow_cfg, np.linspace(-20.0 / (cfg.g * cfg.n), 0.0, 401))
        try:
            informational += [a.to_dict() for a in invariants.audit_hs_conditions(traj)]
            informational.append(invariants.ratio_envelope(traj).to_dict())
        except invariants.AuditUndefined as exc:
            informational.append({"condition_id": "hs_conditions", "undefined": str(exc)})
        informational.append(invariants.phi_band(cfg, 0.1)[1].to_dict())
    facts = []
    if entry is not None:
        facts = [f.to_dict() for f in catalog.verify_entry(entry)]
    ok = (all(c["ok"] for c in identities) and all(a["holds"] for a in audits)
          and all(f["ok"] for f in facts))
    return {"name": name, "ok": ok, "validation": validate(rs).to_dict(),
            "config": cfg.to_dict() if cfg is not None else rs.to_dict(),
            "identities": identities, "audits": audits, "facts": facts,
            "informational_audits": informational}


def _run_jobs(jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_check_one, jobs))
    return [_check_one(j) for j in jobs]


def cmd_check(args) -> int:
    seed = None if checks.seedless() else args.seed
    jobs = []
    if args.sharpness:
        g, n, m1, m2 = args.sharpness
        theta0, audit = invariants.sharpness_witness(g, n, m1, m2)
        doc = {"version": __version__, "command": "check", "config": _config_echo(args),
               "theta0": theta0, "holds": audit.holds, "audit": audit.to_dict(),
               "provenance": "closed_form"}
        _emit_json(args, doc)
        return EXIT_OK if audit.holds else EXIT_AUDIT
    if args.roots:
        rs = read_roots_file(args.roots, normalize=not args.raw)
        found = rs.as_rank2()
        cfg = Rank2Config(*found, checked=False) if found else None
        jobs.append((args.roots, rs, cfg, args.samples, seed, None))
    elif args.g is not None:
        cfg = _rank2_config(args)
        jobs.append((f"g{cfg.g}_m{cfg.m1}_{cfg.m2}", cfg.root_system(), cfg, args.samples, seed, None))
    else:
        for i, e in enumerate(catalog.named_entries()):
            s = None if seed is None else seed + i
            jobs.append((e.name, e.config.root_system(), e.config, args.samples, s, e))
    results = _run_jobs(jobs, args.jobs)
    ok = all(r["ok"] for r in results)
    doc = {"version": __version__, "command": "check", "config": _config_echo(args),
           "seedless": seed is None, "ok": ok, "entries": results,
           "provenance": {"identities": "oracle vs closed_form", "audits": "closed_form",
                          "facts": "catalog"}}
    _emit_json(args, doc)
    return EXIT_OK if ok else EXIT_AUDIT


def _emit_json(args, doc):
    text = json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_catalog(args) -> int:
    entries = catalog.named_entries()
    if args.format == "json":
        _emit_json(args, {"version": __version__, "entries": [e.to_dict() for e in entries]})
        return EXIT_OK
    for e in entries:
        c = e.config
        sys.stdout.write(f"{e.name:<22} g={c.g} m=({c.m1},{c.m2}) n={c.n} "
                         f"delta={c.delta:.6g} theta_min={c.theta_min!r}\n")
    return EXIT_OK


def _add_rank2(p, theta=True):
    p.add_argument("--g", type=int)
    p.add_argument("--m1", type=int)
    p.add_argument("--m2", type=int)
    if theta:
        p.add_argument("--theta0", type=float, help="initial angle (radians unless --degrees)")
        p.add_argument("--degrees", action="store_true", help="read angles in degrees")
    p.add_argument("--unchecked", action="store_true",
                   help="skip the multiplicity classification rules")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isoflow", description="Mean curvature flow of isoparametric families.")
    parser.add_argument("--version", action="version", version=f"isoflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a flow and write a time series")
    _add_rank2(p)
    p.add_argument("--roots", help="roots file (general rank)")
    p.add_argument("--raw", action="store_true", help="keep root norms from the file")
    p.add_argument("--x0", help="comma-separated initial point (with --roots)")
    p.add_argument("--kind", choices=[SPHERICAL, EUCLIDEAN], default=SPHERICAL)
    p.add_argument("--t-start", type=float, default=-1.0)
    p.add_argument("--t-end", type=float, default=0.0)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--collapse-margin", type=float, default=1e-8)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--steps", action="store_true", help="write integrator steps instead of a uniform grid")
    p.add_argument("-o", "--output")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("closed-form", help="evaluate the rank-2 closed forms")
    _add_rank2(p)
    p.add_argument("--kind", choices=[SPHERICAL, EUCLIDEAN], default=SPHERICAL)
    p.add_argument("--times", help="comma-separated times (write --times=-1,0 for a leading minus)")
    p.add_argument("--t-start", type=float, default=-1.0)
    p.add_argument("--t-end", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("-o", "--output")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_closed_form)

    p = sub.add_parser("minimal", help="locate the minimal point of the chamber")
    _add_rank2(p, theta=False)
    p.add_argument("--roots")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_minimal, degrees=False, theta0=None)

    p = sub.add_parser("check", help="run identity checks and audits (JSON)")
    _add_rank2(p)
    p.add_argument("--roots")
    p.add_argument("--raw", action="store_true", help="keep root norms from the file")
    p.add_argument("--sharpness", type=int, nargs=4, metavar=("G", "N", "M1", "M2"))
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("catalog", help="catalog operations")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("list", help="list named configurations")
    q.add_argument("--format", choices=["text", "json"], default="text")
    q.set_defaults(func=cmd_catalog, output=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ChamberError, DomainError, ValueError, OSError) as exc:
        print(f"isoflow: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationError, StepSizeUnderflow, MinimalPointError, NoCollapse,
            FloatingPointError, ArithmeticError) as exc:
        print(f"isoflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
