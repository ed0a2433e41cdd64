"""Command-line front end.

Subcommands:

    modes      build a mode table and write it to disk
    response   evaluate one detector-pair response against a table
    sweep      run a gamma/delay/radius sweep from a JSON config
    geodesic   null propagation times or a propagation-time curve (CSV)
    validate   run the brute-force oracle suites

Exit codes: 0 success, 2 validation failure, 3 table-coverage error,
4 I/O or file-format error.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import CoverageError, DomainError, EntlensError, TableFormatError
from .geometry import GeodesicBranch, SpacetimeParams, null_propagation_time
from .modecache import GridSpec, build, load, save
from .response import ConvergenceControls, DetectorPairSpec, DetectorSpec, pair_response
from .states import FieldState
from .sweeps import SweepSpec, run_sweep, write_rows_csv
from .validation import run_suite


def _add_modes(sub):
    p = sub.add_parser("modes", help="build and persist a mode table")
    p.add_argument("--lmax", type=int, default=100)
    p.add_argument("--omega-min", type=float, default=1e-3)
    p.add_argument("--omega-max", type=float, default=10.0)
    p.add_argument("--omega-step", type=float, default=1e-3)
    p.add_argument("--radii", required=True,
                   help="comma-separated radii in units of M, e.g. 6.009,9.0")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--resume", action="store_true",
                   help="keep/reuse per-ell row files next to the output")
    p.add_argument("--rtol", type=float, default=None)
    p.set_defaults(func=_cmd_modes)


def _cmd_modes(args):
    radii = tuple(float(x) for x in args.radii.split(",") if x.strip())
    grid = GridSpec(lmax=args.lmax, omega_min=args.omega_min,
                    omega_max=args.omega_max, omega_step=args.omega_step,
                    radii=radii)
    kwargs = {"workers": args.workers, "progress": True}
    if args.rtol is not None:
        kwargs["rtol"] = args.rtol
    if args.resume:
        kwargs["resume_dir"] = f"{args.out}.rows"
    table = build(grid, **kwargs)
    checksum = save(table, args.out)
    print(f"wrote {args.out} (sha256 {checksum})")
    return 0


def _add_response(sub):
    p = sub.add_parser("response", help="evaluate one detector-pair response")
    p.add_argument("--table", required=True)
    p.add_argument("--state", default="boulware")
    p.add_argument("--radius-a", type=float, required=True)
    p.add_argument("--radius-b", type=float, required=True)
    p.add_argument("--gap-a", type=float, default=5.0)
    p.add_argument("--gap-b", type=float, default=5.0)
    p.add_argument("--coupling-a", type=float, default=1.0)
    p.add_argument("--coupling-b", type=float, default=1.0)
    p.add_argument("--width-a", type=float, default=1.0)
    p.add_argument("--width-b", type=float, default=1.0)
    p.add_argument("--center-a", type=float, default=0.0)
    p.add_argument("--center-b", type=float, default=0.0)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--l-cut", type=int, default=None)
    p.set_defaults(func=_cmd_response)


def _cmd_response(args):
    table = load(args.table)
    a = DetectorSpec(radius=args.radius_a, gap=args.gap_a, coupling=args.coupling_a,
                     width=args.width_a, center=args.center_a)
    b = DetectorSpec(radius=args.radius_b, gap=args.gap_b, coupling=args.coupling_b,
                     width=args.width_b, center=args.center_b)
    pair = DetectorPairSpec(a=a, b=b, gamma=args.gamma, state=FieldState.parse(args.state))
    controls = None
    if args.l_cut is not None:
        controls = ConvergenceControls(l_cut=args.l_cut)
    resp = pair_response(pair, table, controls)
    out = {
        "state": pair.state.value,
        "l_aa": resp.l_aa,
        "l_bb": resp.l_bb,
        "l_ab": [resp.l_ab.real, resp.l_ab.imag],
        "m": [resp.m.real, resp.m.imag],
        "m_plus": [resp.m_plus.real, resp.m_plus.imag],
        "m_minus": [resp.m_minus.real, resp.m_minus.imag],
        "negativity": resp.negativity,
        "diagnostics": {
            "l_tail_fraction": resp.diagnostics.l_tail_fraction,
            "omega_tail_fraction": resp.diagnostics.omega_tail_fraction,
            "sliver_bound": resp.diagnostics.sliver_bound,
            "warnings": resp.diagnostics.warnings,
        },
        "table_checksum": table.checksum,
    }
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true", help="also write a JSON mirror")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field (repeatable)")
    p.set_defaults(func=_cmd_sweep)


def _parse_override(text):
    if "=" not in text:
        raise DomainError(f"override {text!r} is not KEY=VALUE")
    key, val = text.split("=", 1)
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def _cmd_sweep(args):
    with open(args.config) as fh:
        cfg = json.load(fh)
    for item in args.set:
        key, val = _parse_override(item)
        cfg[key] = val
    spec = SweepSpec.from_dict(cfg)
    table = load(args.table)
    result = run_sweep(spec, table, workers=args.workers)
    result.meta["peaks"] = json.dumps(result.peaks, sort_keys=True)
    result.to_csv(args.out, json_mirror=args.json)
    print(f"wrote {args.out} ({len(result.rows)} rows)")
    return 0


def _add_geodesic(sub):
    p = sub.add_parser("geodesic", help="null propagation times")
    p.add_argument("--r-a", type=float, required=True)
    p.add_argument("--r-b", type=float, default=None)
    p.add_argument("--gamma", type=float, default=math.pi)
    p.add_argument("--branch", default="primary",
                   choices=[b.value for b in GeodesicBranch])
    p.add_argument("--curve", action="store_true",
                   help="sweep equal radii from --r-a to --r-max")
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_geodesic)


def _cmd_geodesic(args):
    params = SpacetimeParams()
    branch = GeodesicBranch(args.branch)
    rows = []
    if args.curve:
        if args.r_max is None:
            raise DomainError("--curve needs --r-max")
        for r in np.linspace(args.r_a, args.r_max, args.count):
            dt = null_propagation_time(params, float(r), float(r), args.gamma, branch)
            rows.append({"branch": branch.value, "r_A/M": float(r),
                         "r_B/M": float(r), "gamma": args.gamma, "dt/M": dt})
    else:
        r_b = args.r_a if args.r_b is None else args.r_b
        dt = null_propagation_time(params, args.r_a, r_b, args.gamma, branch)
        rows.append({"branch": branch.value, "r_A/M": args.r_a, "r_B/M": r_b,
                     "gamma": args.gamma, "dt/M": dt})
    meta = {"code_version": __version__}
    if args.out:
        write_rows_csv(args.out, rows, meta)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        for row in rows:
            print(",".join(f"{v}" for v in row.values()))
    return 0


def _add_validate(sub):
    p = sub.add_parser("validate", help="run the brute-force oracle suites")
    p.add_argument("--suite", default="all",
                   choices=["windows", "negativity", "modes", "m-quadrature", "all"])
    p.set_defaults(func=_cmd_validate)


def _cmd_validate(args):
    reports = run_suite(args.suite)
    ok = True
    for report in reports:
        for line in report.lines():
            print(line)
        ok = ok and report.passed
    print(f"validate: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 2


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="entlens",
        description="Detector-pair correlations and entanglement negativity "
                    "outside a Schwarzschild black hole (units of M).",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_modes(sub)
    _add_response(sub)
    _add_sweep(sub)
    _add_geodesic(sub)
    _add_validate(sub)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (TableFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except EntlensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
