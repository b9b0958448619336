"""Command line entry point.

    curvewidth volumes    ball volume tables with their bounds
    curvewidth verify     randomized inequality checkers (JSON lines)
    curvewidth stability  inradius-deficit scaling fit and the end-to-end run

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 input
outside a numeric domain.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import DomainError, NotApplicable
from .geometry_core import Kind, space

SPACES = [k.value for k in Kind]


def _add_common(p):
    p.add_argument("--space", choices=SPACES + ["all"], default="all")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--D", type=float, default=1.0, help="diameter or width")
    p.add_argument("--eps", type=float, default=None, help="volume deficit fraction")
    p.add_argument("--rho", type=float, default=None, help="parallel-domain radius")
    p.add_argument("--R", type=float, default=None, help="ball radius for the triangle checks")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples per estimate")
    p.add_argument("--budget-evals", type=int, default=None,
                   help="cap on Monte Carlo samples per estimate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker cap (sets CURVEWIDTH_THREADS)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="curvewidth", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volumes", help="ball volume tables")
    _add_common(p)
    p.add_argument("--radii", type=float, nargs="+", default=[0.25, 0.5, 1.0, 1.5])

    from .verify import CHECKS

    p = sub.add_parser("verify", help="run inequality checkers")
    _add_common(p)
    p.add_argument("check", choices=list(CHECKS) + ["all"])
    p.add_argument("--mode", choices=["illustrative", "strict"], default="illustrative")

    p = sub.add_parser("stability", help="scaling fit and end-to-end sandwich")
    _add_common(p)
    p.add_argument("--mode", choices=["illustrative", "strict"], default="illustrative")
    p.add_argument("--grid", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4, 1e-5])
    return parser


def _spaces(args):
    kinds = SPACES if args.space == "all" else [args.space]
    return [space(k, args.dim) for k in kinds]


def _samples(args, default):
    s = args.samples or default
    if args.budget_evals is not None:
        s = min(s, args.budget_evals)
    return s


class _Out:
    def __init__(self, path):
        self.path = path
        self.parts = []

    def write(self, text):
        self.parts.append(text)

    def close(self):
        data = "".join(self.parts)
        if self.path is None:
            sys.stdout.write(data)
            sys.stdout.flush()
        else:
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)


def cmd_volumes(args, out):
    from .measures import ball_volume_global_upper, volume_table, write_csv

    samples = _samples(args, 100_000)
    header = ["space", "dim", "r", "exact", "quadrature", "mc", "mc_stderr", "global_upper", "seed"]
    rows = []
    for sp in _spaces(args):
        radii = [r for r in args.radii if sp.kind is not Kind.SPHERICAL or r <= 3.141592653589793]
        for r, ex, qd, mc, se in volume_table(sp, radii, samples, args.seed):
            rows.append([sp.kind.value, sp.dim, r, ex, qd, mc, se, ball_volume_global_upper(sp, r),
                         args.seed])
    if args.format == "csv":
        out.write(write_csv(header, rows))
    else:
        import json

        for row in rows:
            out.write(json.dumps(dict(zip(header, row)), separators=(",", ":")) + "\n")
    return 0


def _cfg(args):
    # None leaves each checker on its own default sample count
    samples = args.samples
    if args.budget_evals is not None:
        samples = min(samples or args.budget_evals, args.budget_evals)
    return {"seed": args.seed, "R": args.R, "eta": args.eta, "rho": args.rho, "D": args.D,
            "eps": args.eps, "trials": args.trials, "mode": getattr(args, "mode", None),
            "samples": samples}


def _summary(reports):
    lines = [f"{'check':<20} {'space':<11} {'dim':>3} {'margin':>12}  result"]
    for r in reports:
        lines.append(f"{r.check_name:<20} {r.space:<11} {r.dim:>3} {r.margin:>12.4g}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _report_rows(reports):
    from .measures import write_csv

    header = ["check_name", "space", "dim", "trials", "bound", "margin", "passed", "seed", "notes"]
    return write_csv(header, [[r.check_name, r.space, r.dim, r.trials, r.bound, r.margin,
                               r.passed, r.seed, r.notes] for r in reports])


def cmd_verify(args, out):
    from .verify import CHECKS, suite

    names = list(CHECKS) if args.check == "all" else [args.check]
    reports = []
    for sp in _spaces(args):
        for name in names:
            try:
                reports.extend(suite(name, sp, _cfg(args)))
            except NotApplicable:
                if args.check != "all":
                    raise
    if args.format == "csv":
        out.write(_report_rows(reports))
    else:
        for r in reports:
            out.write(r.to_json() + "\n")
    sys.stderr.write(_summary(reports))
    return 0 if all(r.passed for r in reports) else 1


def cmd_stability(args, out):
    import json

    from .measures import stability_constants
    from .verify import run_stability_endtoend, run_stability_scaling, scaling_csv

    ok = True
    eps = 1e-3 if args.eps is None else args.eps
    for sp in _spaces(args):
        fit = run_stability_scaling(sp, args.D, args.grid, seed=args.seed)
        rep = run_stability_endtoend(sp, args.D, eps, _samples(args, 200_000), args.seed, args.mode)
        thr = stability_constants(sp, args.D).eps_threshold
        if rep.parameters["mode"] == "illustrative":
            sys.stderr.write(f"ILLUSTRATIVE MODE ({sp.kind.value}): eps={eps!r} >= threshold {thr!r}; "
                             "sandwich radii are reported, not a verdict on the theorem\n")
        if args.format == "csv":
            out.write(f"# {sp.kind.value} dim={sp.dim} D={args.D!r} seed={args.seed}\r\n")
            out.write(scaling_csv(fit))
            out.write(f"# slope={fit.slope!r} stderr={fit.slope_stderr!r} expected={fit.expected!r} "
                      f"passed={fit.passed}\r\n")
        else:
            out.write(json.dumps({"kind": "scaling_fit", **fit.as_dict()}, separators=(",", ":")) + "\n")
            out.write(rep.to_json() + "\n")
        sys.stderr.write(f"{sp.kind.value}: slope {fit.slope:.4f} +- {fit.slope_stderr:.4f} "
                         f"(expected {fit.expected:.4f}) {'PASS' if fit.passed else 'FAIL'}; "
                         f"end-to-end {'PASS' if rep.passed else 'FAIL'}\n")
        ok &= fit.passed and rep.passed
    return 0 if ok else 1


COMMANDS = {"volumes": cmd_volumes, "verify": cmd_verify, "stability": cmd_stability}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be positive")
        os.environ["CURVEWIDTH_THREADS"] = str(args.threads)
    if args.dim < 2:
        parser.error("--dim must be at least 2")
    out = _Out(args.out)
    try:
        code = COMMANDS[args.command](args, out)
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return 3
    try:
        out.close()
    except OSError as exc:
        sys.stderr.write(f"cannot write output: {exc}\n")
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
