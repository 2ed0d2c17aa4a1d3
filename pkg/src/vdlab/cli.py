"""Command-line front end.

Exit codes: 0 success, 1 check failed, 2 usage or configuration error,
3 runtime state error (e.g. nonpositive density), 4 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, helmholtz
from .config import load_config, parse_window
from .errors import InputError, SnapshotError, StateError, VDLabError
from .grid import GridSpec
from .io import read_series_csv, read_snapshot, read_snapshot_header
from .symbols import (PhysParams, eigen_compressible, eigen_shear, laurent_residual,
                      spectral_bounds_scan, taylor_residual)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_STATE, EXIT_IO = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors raised as InputError instead of SystemExit."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise SnapshotError(f"cannot write {path}: {exc}") from exc


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise SnapshotError(f"output directory {parent} does not exist")


def _params(args):
    return PhysParams(args.mu, args.lam, getattr(args, "gamma", 2.0))


def _add_phys(p, gamma=False):
    p.add_argument("--mu", type=float, default=None if gamma else 1.0, help="shear viscosity")
    p.add_argument("--lambda", dest="lam", type=float, default=None if gamma else 0.0,
                   help="bulk viscosity")
    if gamma:
        p.add_argument("--gamma", type=float, default=None, help="pressure exponent")


# -- symbol-scan ------------------------------------------------------------------

def cmd_symbol_scan(args):
    params = _params(args)
    if args.samples < 1 or args.r_min > args.r_max or args.r_min < 0:
        raise InputError(f"empty or invalid |xi| range [{args.r_min}, {args.r_max}] "
                         f"with {args.samples} samples")
    if args.log:
        if args.r_min <= 0:
            raise InputError("--log needs --r-min > 0")
        r = np.geomspace(args.r_min, args.r_max, args.samples)
    else:
        r = np.linspace(args.r_min, args.r_max, args.samples)
    lines = ["block,r,re_kappa_plus,im_kappa_plus,re_kappa_minus,im_kappa_minus,degenerate"]
    for block, fn in (("compressible", eigen_compressible), ("shear", eigen_shear)):
        eig = fn(params, r)
        for i in range(r.size):
            kp, km = eig.kappa_plus[i], eig.kappa_minus[i]
            lines.append(",".join([block] + ["%.17g" % x for x in
                                             (r[i], kp.real, kp.imag, km.real, km.imag)]
                                  + [str(int(eig.degenerate[i]))]))
    text = "\n".join(lines) + "\n"
    summary = {"mu": params.mu, "lambda": params.lam, "bounds": []}
    r1, r2 = params.default_radii()
    for block in ("compressible", "shear"):
        low = r[(r > 0) & (r <= r1)]
        high = r[r >= r2]
        for region, samp in (("low", low), ("high", high)):
            if samp.size:
                rep = spectral_bounds_scan(params, region, samp, block)
                summary["bounds"].append({**rep.__dict__, "positive": rep.positive})
    if args.out:
        _ensure_parent(args.out)
        _write_text(args.out, text)
        _write_text(args.out + ".json", json.dumps(summary, indent=2) + "\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- expansion-check ----------------------------------------------------------------

def cmd_expansion_check(args):
    params = _params(args)
    small = np.geomspace(1e-3, 1e-1, args.samples)
    large = np.geomspace(1e2, 1e4, args.samples)
    tay = taylor_residual(params, small)
    lau = laurent_residual(params, large)
    ok_t = tay.order >= args.taylor_min_order
    ok_l = lau.order <= args.laurent_max_order
    report = {
        "mu": params.mu, "lambda": params.lam,
        "taylor_order": tay.order, "taylor_min_order": args.taylor_min_order, "taylor_pass": ok_t,
        "laurent_order": lau.order, "laurent_max_order": args.laurent_max_order,
        "laurent_pass": ok_l, "passed": ok_t and ok_l,
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        _ensure_parent(args.out)
        _write_text(args.out, text)
    print(f"taylor order {tay.order:.4f} (need >= {args.taylor_min_order}): "
          f"{'PASS' if ok_t else 'FAIL'}")
    print(f"laurent order {lau.order:.4f} (need <= {args.laurent_max_order}): "
          f"{'PASS' if ok_l else 'FAIL'}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


# -- propagate ----------------------------------------------------------------------

_RUN_FLAGS = {
    "mu": "mu", "lam": "lam", "gamma": "gamma", "grid_n": "n_points", "box_l": "box_half_width",
    "amplitude": "amplitude", "seed": "seed", "mode": "mode", "t_final": "t_final",
    "t_start": "t_start", "outputs": "outputs", "dt": "dt", "q": "q", "r1": "r1", "r2": "r2",
    "window": "window", "out": "out", "profile": "profile", "width": "width",
    "spacing": "spacing", "integrator": "integrator", "normalize": "normalize",
    "snapshots": "snapshots", "potential_weight": "potential_weight",
    "swirl_weight": "swirl_weight",
}


def _run_config(args):
    overrides = {}
    for flag, key in _RUN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value if not isinstance(value, (int, float)) else str(value)
    return load_config(args.config, overrides)


def cmd_propagate(args):
    from .propagator import run_simulation

    cfg = _run_config(args)
    if cfg.out is None:
        raise InputError("--out: propagate needs an output directory")
    try:
        result = run_simulation(cfg)
    except StateError as exc:
        n = len(getattr(exc, "series", []) or [])
        print(f"error: {exc} (t={exc.t}); {n} output rows flushed to {cfg.out}", file=sys.stderr)
        return EXIT_STATE
    print(f"wrote {len(result.series)} rows to {os.path.join(cfg.out, 'series.csv')}")
    return EXIT_OK


# -- decay-fit ----------------------------------------------------------------------

def _wrap_time_from_metadata(meta):
    try:
        L = float(meta["box_half_width"])
        width = float(meta.get("width", 0.0))
    except (KeyError, ValueError):
        return None
    return analysis.wraparound_time(GridSpec(8, L), radius=3.0 * width)


def cmd_decay_fit(args):
    series = read_series_csv(args.series)
    wrap = _wrap_time_from_metadata(series.metadata)
    if args.window:
        window = parse_window(args.window)
    elif wrap is not None:
        window = (5.0, min(50.0, 0.9 * wrap))
    else:
        window = (5.0, 50.0)
    norms = [n.strip() for n in args.norms.split(",") if n.strip()]
    table = analysis.rate_table(series, norms, args.q, window, wrap)
    if wrap is not None and window[0] >= wrap:
        print(f"warning: window starts past the wrap-around time {wrap:.3g}; "
              "rows are unreliable", file=sys.stderr)
    elif wrap is not None and window[1] > wrap:
        print(f"warning: window ends past the wrap-around time {wrap:.3g}; "
              "rows are unreliable", file=sys.stderr)
    print(table.format())
    if args.out:
        _ensure_parent(args.out)
        _write_text(args.out, json.dumps(table.as_dict(), indent=2) + "\n")
    return EXIT_OK if table.passed else EXIT_FAIL


# -- band-report --------------------------------------------------------------------

def cmd_band_report(args):
    series = read_series_csv(args.series)
    low = parse_window(args.window) if args.window else None
    if low is None:
        wrap = _wrap_time_from_metadata(series.metadata)
        low = (5.0, min(50.0, 0.9 * wrap)) if wrap is not None else (5.0, 50.0)
    high = parse_window(args.high_window)
    rows = analysis.band_decay_report(series, args.q, low, high)
    ok = True
    for r in rows:
        if r.skipped:
            print(f"{r.band:<5} skipped ({r.note})")
            continue
        label = "slope" if r.kind == "power" else "rate"
        print(f"{r.band:<5} {r.kind:<12} {label} {r.value:.4f}  r2 {r.r2:.5f}  "
              f"{'PASS' if r.passed else 'FAIL'}")
        ok = ok and r.passed
    if args.out:
        _ensure_parent(args.out)
        _write_text(args.out, json.dumps([r.__dict__ for r in rows], indent=2) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


# -- helmholtz-check ----------------------------------------------------------------

def cmd_helmholtz_check(args):
    grid = GridSpec(args.grid_n, args.box_l)
    rng = np.random.default_rng(args.seed)
    v_hat = grid.forward(rng.standard_normal((3,) + grid.shape))
    # band-limit: Nyquist modes carry no derivative information
    v_hat *= grid.dealias_mask
    parts = helmholtz.decompose(grid, v_hat)
    back = helmholtz.reconstruct(grid, parts)
    err = float(np.abs(grid.inverse(back) - grid.inverse(v_hat)).max())
    grad_part = helmholtz.reconstruct(grid, helmholtz.HelmholtzParts(
        parts.d_hat, np.zeros_like(parts.w_hat), np.zeros(3, dtype=complex)))
    rot_part = helmholtz.reconstruct(grid, helmholtz.HelmholtzParts(
        np.zeros_like(parts.d_hat), parts.w_hat, np.zeros(3, dtype=complex)))
    total = grid.spectral_norm(v_hat) ** 2
    split = (grid.spectral_norm(grad_part) ** 2 + grid.spectral_norm(rot_part) ** 2
             + float(np.sum(np.abs(parts.mean) ** 2)))
    orth = abs(total - split) / total
    ok = err <= 1e-11 and orth <= 1e-10
    print(f"round trip max error {err:.3e} (<= 1e-11), orthogonality defect {orth:.3e} (<= 1e-10): "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


# -- plot ---------------------------------------------------------------------------

GUIDE_SLOPES = (-0.75, -1.25, -1.5)


def cmd_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = read_series_csv(args.series)
    if len(series) == 0:
        raise InputError(f"{args.series}: empty series, nothing to plot")
    names = [n.strip() for n in args.norms.split(",") if n.strip()]
    t = series.times
    if np.any(t <= 0):
        raise InputError("log-log plot needs positive times")
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for name in names:
        y = series.column(name)
        good = y > 0
        ax.loglog(t[good], y[good], marker="o", ms=3, label=name)
    t_ref = np.array([t[0], t[-1]])
    anchor = series.column(names[0])[0] if names else 1.0
    for s in GUIDE_SLOPES:
        ax.loglog(t_ref, anchor * (t_ref / t_ref[0]) ** s, ls="--", lw=0.8,
                  label=f"guide slope {s:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(fontsize=8)
    try:
        fig.savefig(args.out, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise SnapshotError(f"cannot write {args.out}: {exc}") from exc
    finally:
        plt.close(fig)
    return EXIT_OK


# -- snapshot-info ------------------------------------------------------------------

def cmd_snapshot_info(args):
    head = read_snapshot_header(args.snapshot)
    if args.verify:
        U, _, _ = read_snapshot(args.snapshot)
        head["finite"] = bool(np.all(np.isfinite(U.data)))
    elif head["payload_bytes"] != head["payload_expected"]:
        raise SnapshotError(f"payload has {head['payload_bytes']} bytes, expected "
                            f"{head['payload_expected']}", offset=54 + head["payload_bytes"])
    print(json.dumps(head, indent=2))
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="vdlab", description="Viscoelastic decay laboratory")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("symbol-scan", help="eigenvalues of both 2x2 blocks over |xi|")
    _add_phys(s)
    s.add_argument("--r-min", type=float, default=1e-3)
    s.add_argument("--r-max", type=float, default=1e3)
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--log", action="store_true", help="logarithmic spacing")
    s.add_argument("--out", help="CSV path (a JSON bounds summary is written next to it)")
    s.set_defaults(func=cmd_symbol_scan)

    s = sub.add_parser("expansion-check", help="fitted orders of the small/large |xi| expansions")
    _add_phys(s)
    s.add_argument("--samples", type=int, default=25)
    s.add_argument("--taylor-min-order", type=float, default=2.9)
    s.add_argument("--laurent-max-order", type=float, default=-3.9)
    s.add_argument("--out", help="JSON report path")
    s.set_defaults(func=cmd_expansion_check)

    s = sub.add_parser("propagate", help="run a linear or nonlinear simulation")
    s.add_argument("--config", help="key = value configuration file")
    _add_phys(s, gamma=True)
    s.add_argument("--grid-n", type=int)
    s.add_argument("--box-l", type=float)
    s.add_argument("--amplitude", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=("linear-reduced", "linear-full13", "nonlinear"))
    s.add_argument("--t-start", type=float)
    s.add_argument("--t-final", type=float)
    s.add_argument("--outputs", type=int)
    s.add_argument("--spacing", choices=("linear", "log"))
    s.add_argument("--dt", type=float)
    s.add_argument("--integrator", choices=("etd_midpoint", "duhamel_trapezoid"))
    s.add_argument("--profile", choices=("gaussian", "random_bandlimited"))
    s.add_argument("--width", type=float)
    s.add_argument("--normalize", choices=("h2", "l2"))
    s.add_argument("--potential-weight", type=float, help="weight of grad(psi) in the data")
    s.add_argument("--swirl-weight", type=float, help="weight of the divergence-free swirl")
    s.add_argument("--snapshots", choices=("none", "final", "all"))
    s.add_argument("--q", type=float)
    s.add_argument("--r1", type=float)
    s.add_argument("--r2", type=float)
    s.add_argument("--window")
    s.add_argument("--out", help="output directory")
    s.set_defaults(func=cmd_propagate)

    s = sub.add_parser("decay-fit", help="rate table from a series CSV")
    s.add_argument("series")
    s.add_argument("--q", type=float, default=1.0)
    s.add_argument("--window", help="T0,T1 (default [5, min(50, 0.9 wrap-around time)])")
    s.add_argument("--norms", default="l2_total,grad_dt,linf_total")
    s.add_argument("--out", help="JSON path")
    s.set_defaults(func=cmd_decay_fit)

    s = sub.add_parser("band-report", help="low/mid/high band decay from a series CSV")
    s.add_argument("series")
    s.add_argument("--q", type=float, default=1.0)
    s.add_argument("--window", help="low-band window T0,T1")
    s.add_argument("--high-window", default="1,10", help="mid/high band window T0,T1")
    s.add_argument("--r1", type=float, help="recorded in the series; accepted for symmetry")
    s.add_argument("--r2", type=float)
    s.add_argument("--out", help="JSON path")
    s.set_defaults(func=cmd_band_report)

    s = sub.add_parser("helmholtz-check", help="round trip and orthogonality of the velocity split")
    s.add_argument("--grid-n", type=int, default=16)
    s.add_argument("--box-l", type=float, default=float(np.pi))
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_helmholtz_check)

    s = sub.add_parser("plot", help="log-log SVG of a series with guide slopes")
    s.add_argument("series")
    s.add_argument("--norms", default="l2_total,l2_grad,linf_total")
    s.add_argument("--out", required=True, help="SVG path")
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("snapshot-info", help="print a snapshot header")
    s.add_argument("snapshot")
    s.add_argument("--verify", action="store_true", help="read and check the full payload")
    s.set_defaults(func=cmd_snapshot_info)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except VDLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
