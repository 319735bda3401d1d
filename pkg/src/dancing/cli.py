"""Command line interface: ``dancing verify | plot | sample``.

Exit status is 0 when a verification report has no failures, 1 when it has
some, and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import conics, ellipses, flat
from .errors import DanceError, InvalidParams
from .render import PLOTS, plot
from .suites import SUITES, random_state, run_verify, sample_rng

SAMPLE_KINDS = ("flat-pairs", "conic-pairs", "ellipse-states", "trajectory")

DEFAULT_SAMPLES = {"flat-metric": 100, "rigidity-identity": 100, "sextic": 10000, "ode": 100,
                   "conics": 1000}
DEFAULT_TOL = {"flat-metric": 1e-8, "rigidity-identity": 1e-7, "sextic": 1e-10, "ode": 1e-8,
               "conics": 1e-8}


# --------------------------------------------------------------------------
# samples


def _sample_rows(kind: str, seed: int, count: int):
    if kind == "flat-pairs":
        header = ["P0", "P1", "P2", "L0", "L1", "L2"]
        rows = []
        for i in range(count):
            P, L = flat.random_pair(sample_rng(seed, i))
            rows.append([*P, *L])
        return header, rows
    if kind == "conic-pairs":
        header = ["a0", "a1", "a2", "A11", "A12", "A22", "A13", "A23", "A33"]
        rows = []
        for i in range(count):
            a, A = conics.random_pair(sample_rng(seed, i))
            rows.append([*a, A[0, 0], A[0, 1], A[1, 1], A[0, 2], A[1, 2], A[2, 2]])
        return header, rows
    if kind == "ellipse-states":
        header = ["x", "y", "a", "b", "xdot", "ydot", "adot", "bdot"]
        rows = []
        for i in range(count):
            st = random_state(sample_rng(seed, i))
            rows.append([st.x, st.y, st.a, st.b, *st.v])
        return header, rows
    if kind == "trajectory":
        # one path of y'' = (x y' - y)^3 with ``count`` steps from a seeded start
        rng = sample_rng(seed, 0)
        x0, y0 = rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.2)
        p0 = rng.uniform(-0.5, 0.5)
        traj = ellipses.path_ode_integrate(x0, y0, p0, x0 + 0.5, step=0.5 / count, max_slope=1e3)
        return ["x", "y", "yprime"], traj.tolist()
    raise InvalidParams(f"unknown sample kind {kind!r}; choose from {', '.join(SAMPLE_KINDS)}")


def write_samples(kind: str, seed: int, count: int, out_path) -> Path:
    if count < 1:
        raise InvalidParams("count must be positive")
    header, rows = _sample_rows(kind, seed, count)
    out = Path(out_path)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    return out


def read_trajectory(path) -> list:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [(float(r["x"]), float(r["y"]), float(r["yprime"])) for r in reader]


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dancing", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a seeded verification suite")
    v.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--tol", type=float, default=None)
    v.add_argument("--json", dest="json_path", default=None, help="write the report here ('-' for stdout)")

    p = sub.add_parser("plot", help="render a configuration as SVG")
    p.add_argument("kind", help=f"one of: {', '.join(PLOTS)}")
    p.add_argument("--b", type=float, default=None, help="section coordinate for ellipse-dance")
    p.add_argument("--pair-file", default=None, help="JSON file with the configuration")
    p.add_argument("--trajectory", default=None, help="CSV trajectory to overlay (ellipse-dance)")
    p.add_argument("--out", required=True)

    s = sub.add_parser("sample", help="write reproducible samples as CSV")
    s.add_argument("kind", help=f"one of: {', '.join(SAMPLE_KINDS)}")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--out", required=True)
    return parser


def _cmd_verify(args) -> int:
    samples = args.samples if args.samples is not None else DEFAULT_SAMPLES.get(args.suite, 100)
    tol = args.tol if args.tol is not None else DEFAULT_TOL.get(args.suite, 1e-8)
    report = run_verify(args.suite, args.seed, samples, tol)
    text = report.to_json()
    if args.json_path and args.json_path != "-":
        Path(args.json_path).write_text(text)
    else:
        sys.stdout.write(text)
    status = "PASS" if report.ok else "FAIL"
    print(f"{status} {report.suite}: {len(report.failures)} failures, "
          f"maxResidual {report.max_residual:.3e}", file=sys.stderr)
    return 0 if report.ok else 1


def _cmd_plot(args) -> int:
    params = {}
    if args.pair_file:
        try:
            params = json.loads(Path(args.pair_file).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"pair file is not valid JSON: {exc}") from None
    if args.b is not None:
        params["b"] = args.b
    if args.trajectory:
        params["trajectory"] = read_trajectory(args.trajectory)
    out = plot(args.kind, params, args.out)
    print(f"wrote {out}", file=sys.stderr)
    return 0


def _cmd_sample(args) -> int:
    out = write_samples(args.kind, args.seed, args.count, args.out)
    print(f"wrote {out}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"verify": _cmd_verify, "plot": _cmd_plot, "sample": _cmd_sample}[args.command]
    try:
        return handler(args)
    except (DanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
