"""Command line: ``coinfect {analyze,diagram,sweep,simulate} --params FILE ...``.

Tables are written with 17 significant digits; the summary printed to the
terminal uses 6.  On failure a JSON error record is written to stderr and
the exit status is 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import branch, equilibria, simulate, stability
from .exceptions import CoinfectError, ConfigParseError
from .params import ScaledParamSet, load_params, materialize_scaled


def _K_range(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not (0 < lo < hi):
        raise argparse.ArgumentTypeError(f"need 0 < lo < hi, got {text!r}")
    return lo, hi


def _y0(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected S,I1,I2,I12[,R], got {text!r}") from None
    if len(vals) not in (4, 5):
        raise argparse.ArgumentTypeError("initial state needs 4 or 5 comma-separated values")
    return vals


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", required=True, help="parameter file (key = value lines)")
    common.add_argument("--scaled", action="store_true", help="contact rates scale like 1/K")
    common.add_argument("--out", type=Path, help="output directory (default: print to stdout)")
    common.add_argument("--format", choices=("csv", "doc"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="coinfect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="equilibria and verdicts at one K")
    p.add_argument("--K", type=float, help="carrying capacity (default: K from the parameter file)")

    p = sub.add_parser("diagram", parents=[common], help="transition diagram and plot script")
    p.add_argument("--K", type=float, help="largest carrying capacity K_max")
    p.add_argument("--K-range", type=_K_range, help="lo:hi; hi is K_max, lo starts the plot data")
    p.add_argument("--grid", type=int, default=branch.DEFAULT_GRID, help="samples per interval")

    p = sub.add_parser("sweep", parents=[common], help="stable equilibrium over a K grid")
    p.add_argument("--K-range", type=_K_range, required=True)
    p.add_argument("--grid", type=int, default=200, help="number of K values (linear spacing)")

    p = sub.add_parser("simulate", parents=[common], help="integrate the full model")
    p.add_argument("--K", type=float)
    p.add_argument("--y0", type=_y0, help="S,I1,I2,I12[,R] (default: K/2 and 1%% of r/alpha_i)")
    p.add_argument("--horizon", type=float, default=simulate.HORIZON)
    p.add_argument("--rtol", type=float, default=simulate.RTOL)
    p.add_argument("--atol", type=float, default=simulate.ATOL)
    p.add_argument("--stride", type=int, default=1, help="write every n-th sample")
    return parser


def _threads():
    try:
        return max(1, int(os.environ.get("COINFECT_THREADS", "1")))
    except ValueError:
        raise ConfigParseError("COINFECT_THREADS must be an integer") from None


def _K_or_file(args, params):
    K = getattr(args, "K", None)
    if K is None and not isinstance(params, ScaledParamSet):
        K = params.K
    if K is None:
        raise ConfigParseError("no carrying capacity: pass --K or set K in the parameter file")
    if not K > 0:
        raise ConfigParseError(f"--K must be positive, got {K}")
    return K


def _emit(args, name, text):
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / name).write_text(text)


def _at(params, K):
    return materialize_scaled(params, K) if isinstance(params, ScaledParamSet) else params


def cmd_analyze(args, params):
    K = _K_or_file(args, params)
    p = _at(params, K)
    pts = equilibria.all_equilibria(p, K)
    d = stability.derive(p)
    rows = [(pt, stability.assess(p, K, pt, d)) for pt in pts if pt.admissible]
    if args.format == "doc":
        doc = {
            "K": K,
            "equilibria": [{"label": pt.label, "coords": list(pt.coords), "admissible": pt.admissible,
                            "residual": pt.residual} for pt in pts],
            "verdicts": [{"label": pt.label, "max_real_part": v.max_real_part,
                          "classification": v.classification, "closed_form": v.closed_form,
                          "agreement": v.agreement} for pt, v in rows],
        }
        _emit(args, "analyze.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        _emit(args, "equilibria.csv", equilibria.equilibrium_table(pts))
        _emit(args, "verdicts.csv", stability.verdict_table(rows, K))
    if args.out is not None:
        for pt, v in rows:
            print(f"{pt.label}: ({', '.join(format(c, '.6g') for c in pt.coords)}) "
                  f"{v.classification} (max Re {v.max_real_part:.6g})")
    return 0


def _sweep_rows(params, Ks):
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(lambda K: branch.sweep_row(params, float(K)), Ks))


PLOT_SCRIPT = '''\
"""Plot stable equilibrium coordinates against the carrying capacity."""
import csv
import sys

import matplotlib.pyplot as plt

THRESHOLDS = {thresholds!r}
SEGMENTS = {segments!r}


def main(path="{data}", out="{figure}"):
    K, cols = [], {{c: [] for c in ("S", "I1", "I2", "I12")}}
    with open(path) as fh:
        for row in csv.DictReader(fh):
            K.append(float(row["K"]))
            for c in cols:
                cols[c].append(float(row[c]) if row[c] else float("nan"))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for c, values in cols.items():
        ax.plot(K, values, label=c)
    for k, event in THRESHOLDS:
        ax.axvline(k, color="0.6", lw=0.8, ls="--")
    for lo, hi, label in SEGMENTS:
        ax.text(0.5 * (lo + hi), 1.02, label, transform=ax.get_xaxis_transform(), ha="center")
    ax.set_xlabel("carrying capacity K")
    ax.set_ylabel("stable equilibrium")
    ax.legend()
    fig.savefig(out, dpi=150, bbox_inches="tight")


if __name__ == "__main__":
    main(*sys.argv[1:])
'''


def cmd_diagram(args, params):
    if args.K_range is not None:
        lo, K_max = args.K_range
    elif args.K is not None:
        K_max = args.K
        lo = K_max / 1000
    else:
        raise ConfigParseError("diagram needs --K (K_max) or --K-range")
    diagram = branch.transition_diagram(params, K_max, args.grid)
    if args.format == "doc":
        _emit(args, "diagram.json", diagram.to_json())
    else:
        _emit(args, "diagram.csv", branch.segments_table(diagram))
    if args.out is not None:
        Ks = np.linspace(lo, K_max, 400)
        _emit(args, "diagram_sweep.csv", branch.sweep_table(_sweep_rows(params, Ks)))
        script = PLOT_SCRIPT.format(
            thresholds=[(t.K, t.event) for t in diagram.thresholds],
            segments=[(s.lo, s.hi, s.label) for s in diagram.segments],
            data="diagram_sweep.csv", figure="diagram.png")
        _emit(args, "plot_diagram.py", script)
        print(f"scenario {diagram.scenario}: " + " -> ".join(diagram.labels))
    return 0


def cmd_sweep(args, params):
    lo, hi = args.K_range
    if args.grid < 1:
        raise ConfigParseError("--grid must be positive")
    Ks = np.linspace(lo, hi, args.grid)
    rows = _sweep_rows(params, Ks)
    if args.format == "doc":
        doc = [{"K": K, "stable_label": label, "coords": None if c is None else list(c),
                "max_real_part": m} for K, label, c, m in rows]
        _emit(args, "sweep.json", json.dumps(doc, indent=2) + "\n")
    else:
        _emit(args, "sweep.csv", branch.sweep_table(rows))
    return 0


def cmd_simulate(args, params):
    K = _K_or_file(args, params)
    p = _at(params, K)
    y0 = args.y0
    if y0 is None:
        y0 = [K / 2] + [0.01 * p.r / a for a in p.alpha] + [0.0]
    traj = simulate.integrate(p, y0, horizon=args.horizon, rtol=args.rtol, atol=args.atol, K=K)
    _emit(args, "trajectory.csv", simulate.trajectory_table(traj, args.stride))
    if args.out is not None:
        end = traj.state()
        print(f"{traj.termination.kind} at t={end.t:.6g}: S={end.S:.6g} I1={end.I1:.6g} "
              f"I2={end.I2:.6g} I12={end.I12:.6g} R={end.R:.6g}")
    return 0


COMMANDS = {"analyze": cmd_analyze, "diagram": cmd_diagram, "sweep": cmd_sweep,
            "simulate": cmd_simulate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params = load_params(args.params, scaled=True if args.scaled else None)
        return COMMANDS[args.command](args, params)
    except CoinfectError as exc:
        sys.stderr.write(json.dumps(exc.record(), sort_keys=True) + "\n")
        return 2
    except (ValueError, ArithmeticError) as exc:
        sys.stderr.write(json.dumps(_record(exc), sort_keys=True) + "\n")
        return 2


def _record(exc):
    # attribute plain errors to the innermost package module that raised them
    tb, module = exc.__traceback__, "cli"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("coinfect."):
            module = name.rsplit(".", 1)[1]
        tb = tb.tb_next
    return {"error": type(exc).__name__, "module": module, "message": str(exc)}


if __name__ == "__main__":
    sys.exit(main())
