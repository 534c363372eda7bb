"""Command line interface: simulate, analytic, verify, report.

CSV dump formats:

* path:   ``t,re,im``
* trace:  ``t,theta,log_r,theta_plus,theta_minus``
* exits:  ``t_bm,t_ou,censored``
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analytic, exit_cone
from .core import OuParams, SeedSpec, TimeGrid
from .harness import experiments as ex
from .simulate import sample_bm, sample_ou_exact
from .stable_ou import sample_ousp
from .windings import track_winding


def _common(p):
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="json")


def _emit(args, payload, csv_writer=None):
    fh = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.format == "csv" and csv_writer is not None:
            csv_writer(fh)
        else:
            fh.write(json.dumps(ex._clean(payload), indent=None) + "\n")
    finally:
        if args.out:
            fh.close()


# ---------------------------------------------------------------- simulate

def cmd_simulate(args):
    lam = 1.0 if args.lam is None else args.lam
    t = args.t or 1.0
    step = args.step or 0.01 / max(lam, 1.0)
    grid = TimeGrid.uniform(t, step)
    seed = SeedSpec(args.seed, 0)
    if args.what == "exits":
        c = args.c or 0.5
        b = exit_cone.exit_times_bm(c, args.boundary, args.paths or 1000, args.seed, lam=lam)

        def w(fh):
            fh.write("t_bm,t_ou,censored\n")
            for a, o, k in zip(b.t_bm, b.t_ou, b.censored):
                fh.write(f"{a:.17g},{o:.17g},{int(k)}\n")
        _emit(args, {"c": c, "boundary": args.boundary, "lambda": lam, "t_bm": b.t_bm,
                     "t_ou": b.t_ou, "censored": b.censored.astype(int)}, w)
        return 0
    if args.kind == "ousp":
        path = sample_ousp(grid, OuParams(lam, 1.0, args.alpha or 1.0), seed).as_planar(seed)
    elif args.kind == "bm":
        path = sample_bm(grid, 1.0, seed)
    else:
        path = sample_ou_exact(grid, OuParams(lam), seed)
    if args.what == "trace":
        tr = track_winding(path)
        _emit(args, {"t": tr.grid.t, "theta": tr.theta, "log_r": tr.log_r,
                     "theta_plus": tr.theta_plus, "theta_minus": tr.theta_minus}, tr.to_csv)
    else:
        _emit(args, {"t": path.t, "re": path.z.real, "im": path.z.imag}, path.to_csv)
    return 0


# ---------------------------------------------------------------- analytic

def _analytic_ops():
    return {
        "cauchy-cdf": (lambda a: analytic.cauchy_cdf(a.x, a.scale), "x", "scale"),
        "two-sided-exit-cdf": (lambda a: analytic.two_sided_exit_cdf(a.x, a.c), "x", "c"),
        "abs-exit-position-cdf": (lambda a: analytic.abs_exit_position_cdf(a.x, a.c), "x", "c"),
        "ou-modulus-cdf": (lambda a: analytic.ou_modulus_cdf(a.x, a.t, a.lam), "x", "t", "lambda"),
        "expected-log-exit": (lambda a: analytic.expected_log_exit_bm(a.c), "c"),
        "sinh4-closed": (lambda a: analytic.sinh4_moment_closed(a.c), "c"),
        "sinh4-integral": (lambda a: analytic.sinh4_moment_integral(a.c), "c"),
        "sinh2-closed": (lambda a: analytic.sinh2_moment_closed(a.c), "c"),
        "laplace-exit-level": (lambda a: analytic.laplace_exit_level(a.mu, a.r, a.lam), "mu", "r", "lambda"),
        "invariant-disk-mass": (lambda a: analytic.invariant_disk_mass(a.r, a.lam), "r", "lambda"),
        "levy-constants": (lambda a: {"printed": analytic.levy_density_constant_printed(a.alpha),
                                      "closed": analytic.levy_density_constant_closed(a.alpha),
                                      "quadrature": analytic.levy_density_constant_quadrature(a.alpha)},
                           "alpha"),
    }


def cmd_analytic(args):
    fn = _analytic_ops()[args.op][0]
    args.lam = 1.0 if args.lam is None else args.lam
    args.c = 0.3 if args.c is None else args.c
    args.alpha = 1.0 if args.alpha is None else args.alpha
    args.t = 1.0 if args.t is None else args.t
    value = fn(args)
    _emit(args, {"op": args.op, "value": value})
    return 0


# ---------------------------------------------------------------- verify / report

def _config(args, name):
    if args.config:
        with open(args.config) as fh:
            return ex.config_from_json(json.load(fh))
    cfg = ex.default_config(name, seed=args.seed, n_paths=args.paths, horizon=args.t, step=args.step)
    if args.lam is not None or args.alpha is not None:
        p = cfg.params
        cfg.params = OuParams(p.lam if args.lam is None else args.lam, p.z0,
                              p.alpha if args.alpha is None else args.alpha)
    if args.c is not None:
        cfg.options["c"] = args.c
    return cfg


def cmd_verify(args):
    names = [e.value for e in ex.Experiment] if args.experiment.lower() == "all" else [args.experiment.upper()]
    configs = [_config(args, n) for n in names]
    summary, code = ex.run_all(configs, out=args.out)
    s = summary["summary"]
    print(f"{s['experiments']} experiments, {s['gates']} gates, {len(s['failed'])} failed")
    for f in s["failed"]:
        print(f"FAIL {f}")
    return code


def cmd_report(args):
    code = 0
    with open(args.file) as fh:
        for line in fh:
            rec = json.loads(line)
            if "meta" in rec:
                print(f"run at {rec['meta']['timestamp']}")
            elif "summary" in rec:
                s = rec["summary"]
                print(f"summary: {s['gates'] - len(s['failed'])}/{s['gates']} gates passed")
                code = 0 if s["passed"] else 1
            else:
                print(rec["experiment"])
                for g in rec["gates"]:
                    print(f"  {'PASS' if g['passed'] else 'FAIL'}  {g['name']}: {g['value']} (threshold {g['threshold']})")
                for g in rec.get("diagnostics", []):
                    print(f"  {'ok  ' if g['passed'] else 'note'}  {g['name']}: {g['value']}")
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="ouwind", description="Windings of complex OU processes")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="dump a path, its winding trace, or exit times")
    _common(s)
    s.add_argument("what", choices=["path", "trace", "exits"], nargs="?", default="path")
    s.add_argument("--kind", choices=["ou", "bm", "ousp"], default="ou")
    s.add_argument("--boundary", choices=["SINGLE", "DOUBLE"], default="DOUBLE")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analytic", help="evaluate a closed form or quadrature")
    _common(a)
    a.add_argument("op", choices=sorted(_analytic_ops()))
    a.add_argument("--x", type=float, default=1.0)
    a.add_argument("--scale", type=float, default=1.0)
    a.add_argument("--mu", type=float, default=1.0)
    a.add_argument("--r", type=float, default=2.0)
    a.set_defaults(func=cmd_analytic)

    v = sub.add_parser("verify", help="run one experiment's gates, or 'all'")
    _common(v)
    v.add_argument("experiment")
    v.add_argument("--config", default=None, help="experiment config JSON (overrides flags)")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="pretty-print a JSONL report")
    r.add_argument("file")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
