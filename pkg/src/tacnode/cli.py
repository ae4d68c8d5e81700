"""Command line interface: ``tacnode <command> [options]``.

Every command writes its outputs plus ``manifest.json`` into ``--out``.
Exit codes: 0 success, 1 failed ``--check``, 2 precondition violation,
3 precision escalation failure.  Errors are reported as one JSON object on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import mpmath as mp
import numpy as np

from . import __version__
from ._mp import PrecisionError, fmt
from .config import (
    EnsembleConfig,
    Geometry,
    ScalingFamily,
    classify_separation,
    hull_boundary,
    hull_csv,
    load_family,
    scaled_config,
    tacnode_parameters,
)

MANIFEST_SCHEMA = "tacnode.manifest/1"
MAX_BITS = 1024


class CheckFailed(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict
    precision_bits: int
    seed: int | None
    version: str = __version__
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    checks: dict = field(default_factory=dict)
    schema: str = MANIFEST_SCHEMA

    def write(self, out):
        path = Path(out) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _write(out, name, text, manifest):
    path = Path(out) / name
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    manifest.outputs.append(name)
    return path


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _floats(spec):
    """'a,b,c' or 'lo:hi:count' to a list of decimal strings."""
    spec = str(spec)
    if ":" in spec:
        lo, hi, cnt = spec.split(":")
        lo, hi, cnt = mp.mpf(lo), mp.mpf(hi), int(cnt)
        if cnt < 2:
            return [lo]
        return [lo + (hi - lo) * i / (cnt - 1) for i in range(cnt)]
    return [mp.mpf(s) for s in spec.split(",") if s]


def _ints(spec):
    return [int(s) for s in str(spec).split(",") if s]


def _family(args):
    if not args.config:
        raise ValueError("--config is required for this command")
    obj, _ = load_family(args.config)
    return obj


def _critical(args):
    fam = _family(args)
    if not isinstance(fam, ScalingFamily):
        raise ValueError("this command needs a critical (tacnode) configuration")
    return fam


def _check(manifest, name, ok, detail=None):
    manifest.checks[name] = {"ok": bool(ok), "detail": detail}


# commands


def cmd_classify(args, m):
    geo = _family(args)
    if isinstance(geo, ScalingFamily):
        geo = geo.geometry
    reg = classify_separation(geo.p1_star, geo.a1_star - geo.a2_star, geo.b1_star - geo.b2_star, geo.T,
                              prec=args.prec)
    margin = float(reg.margin)
    out = {"regime": reg.kind.value, "margin": margin if margin != 0 else 0.0,
           "margin_decimal": fmt(reg.margin)}
    _write(args.out, "classify.json", _json(out), m)
    print(json.dumps({"regime": out["regime"], "margin": out["margin"]}))
    if args.check:
        t = geo.a1_star - geo.a2_star
        _check(m, "margin_formula", abs(reg.margin - (t * (geo.b1_star - geo.b2_star)
                                                      - geo.T * (mp.sqrt(geo.p1_star) + mp.sqrt(geo.p2_star)) ** 2))
               < mp.mpf(2) ** (-args.prec // 2))


def cmd_hull(args, m):
    geo = _family(args)
    k = args.points
    ts = [mp.mpf(i + 1) / (k + 1) for i in range(k)]
    rows = hull_boundary(geo, ts, prec=args.prec)
    _write(args.out, "hull.csv", hull_csv(rows), m)
    if args.check:
        _check(m, "ordered", all(r[1] < r[2] and r[3] < r[4] and r[4] <= r[1] + mp.mpf("1e-20") for r in rows))


def cmd_equilibrium(args, m):
    from .equilibrium import EquilibriumData, density, density_csv, lambda_, lambda_csv

    fam = _critical(args)
    with mp.workprec(args.prec):
        cfg = scaled_config(fam, args.n)
        eq = EquilibriumData.from_config(cfg, fam.x_tangency)
        lo, hi = -eq.alpha * mp.mpf("1.2"), eq.beta * mp.mpf("1.2")
        xs = [lo + (hi - lo) * (i + mp.mpf(1) / 2) / args.points for i in range(args.points)]
        _write(args.out, "mu.csv", density_csv(eq, xs), m)
        _write(args.out, "lambda.csv", lambda_csv(eq, [x for x in xs if x != 0]), m)
        summary = {k: fmt(getattr(eq, k)) for k in ("beta", "delta1", "alpha", "delta2", "p1", "p2")}
        summary["shift"] = fmt(eq.shift)
        _write(args.out, "equilibrium.json", _json(summary), m)
        if args.check:
            m1 = mp.quad(density(eq, 1), [0, eq.beta])
            m2 = mp.quad(density(eq, 2), [-eq.alpha, 0])
            _check(m, "mass1", abs(m1 - eq.p1) < 1e-10, fmt(m1, 20))
            _check(m, "mass2", abs(m2 - eq.p2) < 1e-10, fmt(m2, 20))
            _check(m, "im_lambda1_beta", abs(mp.im(lambda_(eq, 1, eq.beta, "+")) - mp.pi * eq.p1) < 1e-12)
            _check(m, "re_lambda1_cut", abs(mp.re(lambda_(eq, 1, eq.beta / 3, "+"))) < 1e-12)
            _check(m, "re_lambda1_outside", mp.re(lambda_(eq, 1, eq.beta + mp.mpf("0.5"), "+")) > 0)


def _kernel_config(args):
    fam = _family(args)
    if isinstance(fam, ScalingFamily):
        cfg = scaled_config(fam, args.n)
    else:
        n1 = int(mp.ceil(fam.p1_star * args.n - mp.mpf(1) / 2))
        cfg = EnsembleConfig(args.n, n1, fam.a1_star, fam.a2_star, fam.b1_star, fam.b2_star, args.t or "0.5")
    if args.t is not None:
        cfg = cfg.with_time(args.t)
    return cfg


def cmd_kernel(args, m):
    from .biorthogonal import kernel_trace, make_kernel_evaluator, reproducing_integral

    cfg = _kernel_config(args)
    ev = make_kernel_evaluator(cfg, precision_bits=args.prec)
    xs = _floats(args.x)
    lines = ["x,y,K\n"]
    for x in xs:
        for y in xs:
            lines.append(f"{fmt(x)},{fmt(y)},{fmt(ev(x, y))}\n")
    _write(args.out, "kernel.csv", "".join(lines), m)
    tr = kernel_trace(ev)
    report = {"n": cfg.n, "trace": fmt(tr), "condition_log2": fmt(ev.gram.condition_estimate, 6),
              "t": fmt(cfg.t)}
    _write(args.out, "trace.json", _json(report), m)
    if args.check:
        _check(m, "trace", abs(tr - cfg.n) < 1e-8, fmt(tr, 20))
        x0, y0 = xs[0], xs[-1]
        rep = reproducing_integral(ev, x0, y0)
        _check(m, "reproducing", abs(rep - ev(x0, y0)) < 1e-6, fmt(rep - ev(x0, y0), 6))


def cmd_tacnode(args, m):
    from .biorthogonal import TacnodeKernel

    fam = _critical(args)
    us = _floats(args.u)
    ns = _ints(args.n_list)
    grids = {}
    lines = ["n,u,v,K\n"]
    for n in ns:
        K = TacnodeKernel(fam, n, precision_bits=args.prec_explicit, gauge=args.gauge)
        grids[n] = K.grid(us, us)
        for i, u in enumerate(us):
            for j, v in enumerate(us):
                lines.append(f"{n},{fmt(u)},{fmt(v)},{fmt(grids[n][i][j])}\n")
    _write(args.out, "tacnode.csv", "".join(lines), m)
    table = []
    for a, b in zip(ns, ns[1:]):
        d = max(abs(grids[b][i][j] - grids[a][i][j]) for i in range(len(us)) for j in range(len(us)))
        table.append({"n_prev": a, "n": b, "sup_diff": fmt(d, 12)})
    tp = tacnode_parameters(fam)
    _write(args.out, "cauchy.json", _json({"gauge": args.gauge, "sigma": fmt(tp.sigma), "table": table}), m)
    if args.check and len(table) >= 2:
        ds = [mp.mpf(r["sup_diff"]) for r in table]
        _check(m, "cauchy_contraction", all(b < a for a, b in zip(ds, ds[1:])))


def cmd_painleve(args, m):
    from .painleve import airy, hastings_mcleod

    sol = hastings_mcleod(args.smin, args.smax, tol=args.tol)
    _write(args.out, "painleve.csv", sol.to_csv(), m)
    report = {"s_min": sol.s_min, "s_max": sol.s_max, "residual_max": sol.residual_max,
              "iterations": sol.iterations, "nodes": len(sol.s), "tol": args.tol}
    _write(args.out, "residual.json", _json(report), m)
    print(json.dumps({"residual_max": sol.residual_max}))
    if args.check:
        _check(m, "residual", sol.residual_max <= args.tol, sol.residual_max)
        if sol.contains(8.0):
            r = sol.q_at(8.0) / airy(8.0)[0]
            _check(m, "airy_tail", abs(r - 1) < 1e-6, r)


def cmd_m1(args, m):
    from .painleve import default_solution, m1_scalars

    sc = m1_scalars(default_solution(), args.r1, args.r2, args.s1, args.s2)
    d = sc.as_dict()
    if args.check:
        lhs = (2 * sc.a + sc.c**2) * sc.r1
        rhs = sc.r2 * sc.d**2 + sc.s1
        _check(m, "compat_a", abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs)))
        lhs = (2 * sc.a_tilde + sc.c_tilde**2) * sc.r2
        rhs = sc.r1 * sc.d**2 + sc.s2
        _check(m, "compat_a_tilde", abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs)))
        h = 1e-4
        fd = (m1_scalars(default_solution(), args.r1, args.r2, args.s1 + h, args.s2).d
              - m1_scalars(default_solution(), args.r1, args.r2, args.s1 - h, args.s2).d) / (2 * h)
        _check(m, "dd_ds1", abs(fd - sc.dd_ds1) < 1e-6, fd - sc.dd_ds1)
        d["identity_checks"] = m.checks
    _write(args.out, "m1.json", _json(d), m)


def _solve_escalating(cfg, bits):
    from .biorthogonal import solve_y_rows

    while True:
        try:
            return solve_y_rows(cfg, precision_bits=bits), bits
        except PrecisionError as e:
            nxt = max(e.suggested_bits or 0, 2 * bits)
            if nxt > MAX_BITS:
                raise PrecisionError(f"{e}; refusing to exceed {MAX_BITS} bits", nxt) from e
            bits = nxt


def cmd_recurrence(args, m):
    from .biorthogonal import recurrence_products
    from .painleve import default_solution, recurrence_prediction

    fam = _critical(args)
    sol = default_solution()
    lines = ["n,c12,c14,c12_pred,c14_pred,ratio12,ratio14,precision_bits\n"]
    used = []
    for n in _ints(args.n_list):
        bits = args.prec_explicit or (256 if n >= 30 else 128)
        y1, bits = _solve_escalating(scaled_config(fam, n), bits)
        used.append(bits)
        with mp.workprec(bits):
            c12, c14 = recurrence_products(y1)
            p12, p14 = recurrence_prediction(fam, sol, n)
            r12, r14 = c12 / p12, c14 / p14
            lines.append(",".join([str(n)] + [fmt(v) for v in (c12, c14, p12, p14, r12, r14)] + [str(bits)]) + "\n")
    m.precision_bits = max(used) if used else args.prec
    _write(args.out, "recurrence.csv", "".join(lines), m)
    sys.stdout.write("".join(lines))


def cmd_sample(args, m):
    from .biorthogonal import make_kernel_evaluator
    from .sampler import empirical_intensity, histogram_csv, sample_ensemble, samples_csv, time_grid

    cfg = _kernel_config(args)
    grid = time_grid(args.grid_points - 1)
    t_obs = float(cfg.t)
    if not np.any(np.abs(grid - t_obs) <= 1e-12):
        grid = np.unique(np.concatenate([grid, [t_obs]]))
    res = sample_ensemble(cfg, grid, count=args.count, seed=args.seed, mode=args.mode)
    _write(args.out, "samples.csv", samples_csv(res), m)
    hist = empirical_intensity(res, t_obs, bins=args.bins)
    _write(args.out, "histogram.csv", histogram_csv(hist), m)
    ev = make_kernel_evaluator(cfg, precision_bits=args.prec)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    z = []
    for lo, hi, dens, se in zip(hist.edges[:-1], hist.edges[1:], hist.density, hist.density_se):
        if se == 0:
            continue
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        k = sum(w * float(ev(mid + half * x, mid + half * x)) for x, w in zip(nodes, weights)) / 2
        z.append(float((dens - k) / se))
    frac = float(np.mean(np.abs(z) < 3)) if z else 0.0
    report = {"acceptance_rate": res.acceptance_rate, "proposals": res.proposals,
              "samples": len(res), "t": t_obs, "bins_within_3se": frac, "mode": args.mode}
    _write(args.out, "intensity.json", _json(report), m)
    if args.check:
        _check(m, "intensity_3se", frac >= 0.95, frac)


COMMANDS = {
    "classify": cmd_classify,
    "hull": cmd_hull,
    "equilibrium": cmd_equilibrium,
    "kernel": cmd_kernel,
    "tacnode": cmd_tacnode,
    "painleve": cmd_painleve,
    "m1": cmd_m1,
    "recurrence": cmd_recurrence,
    "sample": cmd_sample,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON model family")
    common.add_argument("--prec", type=int, default=None, help="working precision in bits (default 128)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--check", action="store_true", help="re-verify invariants, exit 1 on failure")

    p = argparse.ArgumentParser(prog="tacnode", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common])
    s = sub.add_parser("hull", parents=[common])
    s.add_argument("--points", type=int, default=99)
    s = sub.add_parser("equilibrium", parents=[common])
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--points", type=int, default=200)
    for name in ("kernel", "sample"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--n", type=int, default=4)
        s.add_argument("--t", default=None, help="observation time (default t_crit)")
        if name == "kernel":
            s.add_argument("--x", default="-1.5:1.5:7", help="points 'a,b,..' or 'lo:hi:count'")
        else:
            s.add_argument("--count", type=int, default=1000)
            s.add_argument("--grid-points", type=int, default=101)
            s.add_argument("--bins", type=int, default=40)
            s.add_argument("--mode", choices=("exact", "grid"), default="exact")
    s = sub.add_parser("tacnode", parents=[common])
    s.add_argument("--n", dest="n_list", default="10,20,40")
    s.add_argument("--u", default="-2:2:5")
    s.add_argument("--gauge", choices=("balanced", "linear"), default="balanced")
    s = sub.add_parser("painleve", parents=[common])
    s.add_argument("--smin", type=float, default=-10.0)
    s.add_argument("--smax", type=float, default=10.0)
    s.add_argument("--tol", type=float, default=1e-10)
    s = sub.add_parser("m1", parents=[common])
    for k, v in (("r1", 1.0), ("r2", 1.0), ("s1", 0.0), ("s2", 0.0)):
        s.add_argument(f"--{k}", type=float, default=v)
    s = sub.add_parser("recurrence", parents=[common])
    s.add_argument("--n", dest="n_list", default="10,20,40")
    return p


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message), "exit_code": code}) + "\n")
    return code


def main(argv=None):
    from .painleve import ConvergenceError
    from .sampler import SamplerTimeout

    parser = build_parser()
    args = parser.parse_args(argv)
    args.prec_explicit = args.prec
    args.prec = args.prec or 128
    if args.prec < 53:
        return _fail(2, "precondition", "--prec must be at least 53")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = {k: v for k, v in vars(args).items() if k not in ("prec_explicit",)}
    manifest = RunManifest(args.command, params, args.prec, args.seed)
    start = time.perf_counter()
    try:
        with mp.workprec(args.prec):
            COMMANDS[args.command](args, manifest)
    except PrecisionError as e:
        return _fail(3, "precision", e)
    except ConvergenceError as e:
        return _fail(3, "convergence", e)
    except (ValueError, KeyError, FileNotFoundError, SamplerTimeout) as e:
        return _fail(2, "precondition", e)
    manifest.wall_time = time.perf_counter() - start
    manifest.write(out)
    failed = [k for k, v in manifest.checks.items() if not v["ok"]]
    if failed:
        return _fail(1, "check", "failed checks: " + ", ".join(failed))
    return 0


if __name__ == "__main__":
    sys.exit(main())
