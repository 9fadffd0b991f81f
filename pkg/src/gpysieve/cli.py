"""Command-line entry point: ``gpysieve <subcommand> ...``.

Reports go to stdout (JSON by default, CSV for ladders and trends). Wall
time goes to stderr so stdout depends only on argv. Exit codes: 0 success,
2 domain error, 3 resource cap, 64 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from typing import Sequence

from gpysieve import __version__
from gpysieve import report as rp
from gpysieve.arith import build_factor_table
from gpysieve.correlations import (
    CorrelationSpec,
    SieveParams,
    convergence_ladder,
    correlate,
    eq1_scan,
)
from gpysieve.errors import DomainError, ResourceError
from gpysieve.f2 import (
    F2Params,
    delta_prime,
    k_ladder,
    optimize_lambda,
    positivity_sum,
    search_positive,
)
from gpysieve.gallagher import (
    DEFAULT_ENUMERATION_CAP,
    Part,
    SubintervalConfig,
    SubintervalTemplate,
    exact_average,
    ratio_trend,
)
from gpysieve.singular import singular_series
from gpysieve.weights import OffsetTuple

EXIT_DOMAIN = 2
EXIT_RESOURCE = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int(text: str) -> int:
    """Integers, also written as ``1e6``."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def _int_list(text: str) -> list[int]:
    return [_int(t) for t in text.split(",") if t.strip()]


def _offsets(text: str) -> OffsetTuple:
    try:
        return OffsetTuple.of(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad offset list: {text!r}")


def _tuples(text: str) -> list[OffsetTuple]:
    return [_offsets(t) for t in text.split("|")]


def _part(text: str) -> Part:
    try:
        b, c, k = text.split(":")
        return Part(int(b), int(c), int(k))
    except ValueError:
        raise argparse.ArgumentTypeError(f"part must be B:C:k, got {text!r}")


def _template_part(text: str) -> tuple[float, float, int]:
    try:
        b, c, k = text.split(":")
        return float(b), float(c), int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"template part must be b:c:k with fractions b, c, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--cutoff", type=_int, default=None, help="singular-series prime cutoff")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gpysieve", description="sieve-weight experiment harness")
    p.add_argument("--version", action="version", version=f"gpysieve {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("singular", parents=[common], help="singular series of an offset set")
    s.add_argument("--set", dest="offsets", type=_offsets, required=True, metavar="H", help="e.g. 0,2,6")

    g = sub.add_parser("gallagher", parents=[common], help="exact subinterval average")
    g.add_argument("--h", type=_int, required=True)
    g.add_argument("--part", type=_part, action="append", required=True, metavar="B:C:k")
    g.add_argument("--cap", type=_int, default=DEFAULT_ENUMERATION_CAP)

    t = sub.add_parser("gallagher-trend", parents=[common], help="ratio trend over h (CSV)")
    t.add_argument("--template", type=_template_part, action="append", required=True, metavar="b:c:k")
    t.add_argument("--h", type=_int_list, required=True, metavar="H1,H2,...")
    t.add_argument("--cap", type=_int, default=DEFAULT_ENUMERATION_CAP)

    c = sub.add_parser("correlate", parents=[common], help="weighted correlation sum vs main term")
    c.add_argument("--mode", choices=["prop1", "prop2", "thm1", "eq1"], required=True)
    c.add_argument("--N", type=_int, default=10**6)
    c.add_argument("--theta-exp", type=float, default=0.24)
    c.add_argument("--lambda", dest="lambda_", type=float, default=1.0)
    c.add_argument("--tuples", type=_tuples, required=True, metavar="H1|H2|...")
    c.add_argument("--l", dest="ls", type=_int_list, default=None, metavar="l1,l2,...")
    c.add_argument("--theta", dest="theta_offsets", type=_int_list, default=[], metavar="h0[,h0']")
    c.add_argument("--h0", type=int, default=None, help="eq1: first prime offset")
    c.add_argument("--h1", type=int, default=None, help="eq1: second prime offset")
    c.add_argument("--ladder", type=_int_list, default=None, metavar="N1,N2,...")

    f = sub.add_parser("f2", help="F2 positivity machinery")
    fsub = f.add_subparsers(dest="f2_command", parser_class=_Parser)
    fsub.required = True
    fb = fsub.add_parser("bound", parents=[common])
    fb.add_argument("--lambda", dest="lambda_", type=float, required=True)
    fo = fsub.add_parser("optimize", parents=[common])
    fo.add_argument("--from", dest="lo", type=float, required=True)
    fo.add_argument("--to", dest="hi", type=float, required=True)
    fo.add_argument("--tolerance", type=float, default=1e-10)
    fp = fsub.add_parser("positivity", parents=[common])
    fp.add_argument("--lambda", dest="lambda_", type=float, required=True)
    fp.add_argument("--delta", type=float, required=True)
    fp.add_argument("--k", type=_int, required=True)
    fp.add_argument("--l", type=_int, required=True)
    fp.add_argument("--theta", type=float, default=None, help="default (1/4)(1 - 1/l)")
    fp.add_argument("--use-bound", action="store_true", help="sixth-power bound for S")
    fp.add_argument("--breakdown", action="store_true", help="include every (r, log f, P)")
    fs = fsub.add_parser("search", parents=[common])
    fs.add_argument("--lambda", dest="lambda_", type=float, required=True)
    fs.add_argument("--delta", type=float, required=True)
    fs.add_argument("--k-min", type=_int, default=100)
    fs.add_argument("--k-max", type=_int, required=True)
    fs.add_argument("--k-factor", type=float, default=2.0)
    fs.add_argument("--l", dest="ls", type=_int_list, default=None, help="fixed l values (default ~ c sqrt k)")
    fs.add_argument("--theta", type=float, default=None)
    fs.add_argument("--exact", action="store_true", help="exact S instead of the bound form")
    return p


def _params(args) -> dict:
    skip = {"command", "f2_command", "workers", "verbose"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, OffsetTuple):
            v = list(v.offsets)
        elif isinstance(v, Part):
            v = [v.B, v.C, v.k]
        elif isinstance(v, list):
            v = [
                list(x.offsets) if isinstance(x, OffsetTuple) else [x.B, x.C, x.k] if isinstance(x, Part) else x
                for x in v
            ]
        out[k] = v
    return out


def _cmd_singular(a, stderr):
    return rp.singular_dict(singular_series(a.offsets, a.cutoff), a.offsets.offsets), "json"


def _cmd_gallagher(a, stderr):
    cfg = SubintervalConfig(a.h, tuple(a.part))
    rep = exact_average(cfg, a.cutoff, cap=a.cap, workers=a.workers)
    return rp.gallagher_dict(rep, cfg), "json"


def _cmd_trend(a, stderr):
    reps = ratio_trend(SubintervalTemplate(tuple(a.template)), a.h, a.cutoff, cap=a.cap, workers=a.workers)
    return rp.csv_text(["h", "ratio", "error_bound"], [(r.h, r.ratio, r.error_bound) for r in reps]), "csv"


def _cmd_correlate(a, stderr):
    spec = CorrelationSpec(tuple(a.theta_offsets), tuple(a.tuples), tuple(a.ls or ()))
    if a.mode == "eq1":
        if a.h0 is None or a.h1 is None:
            raise DomainError("eq1 mode needs --h0 and --h1")
        params = SieveParams(a.N, a.theta_exp, a.lambda_)
        top = 2 * a.N + max(spec.max_offset, a.h0, a.h1)
        scan = eq1_scan(a.h0, a.h1, spec.tuples, params, build_factor_table(top), l=(spec.ls[0] if spec.ls else 0))
        scan.update(mode="eq1", h0=a.h0, h1=a.h1, sieve=rp.sieve_dict(params), spec=spec.summary())
        scan["holds"] = scan["violations"] == 0
        return scan, "json"
    if a.ladder:
        reps = convergence_ladder(spec, a.ladder, a.theta_exp, lambda_=a.lambda_, cutoff=a.cutoff, workers=a.workers)
        _check_mode(a.mode, reps[0].mode)
        rows = [(r.params.N, r.empirical, r.main_term, r.ratio) for r in reps]
        return rp.csv_text(["N", "empirical", "main", "ratio"], rows), "csv"
    rep = correlate(spec, SieveParams(a.N, a.theta_exp, a.lambda_), cutoff=a.cutoff, workers=a.workers)
    _check_mode(a.mode, rep.mode)
    return rp.correlation_dict(rep), "json"


def _check_mode(asked: str, got: str) -> None:
    if asked != got:
        raise DomainError(f"--mode {asked} does not match the spec's shape, which is {got}")


def _cmd_f2(a, stderr):
    if a.f2_command == "bound":
        return rp.bound_dict(delta_prime(a.lambda_)), "json"
    if a.f2_command == "optimize":
        return rp.bound_dict(optimize_lambda(a.lo, a.hi, a.tolerance)), "json"
    if a.f2_command == "positivity":
        rep = positivity_sum(F2Params(a.lambda_, a.delta, a.k, a.l, a.theta), a.use_bound)
        return rp.positivity_dict(rep, a.breakdown), "json"
    ks = k_ladder(a.k_min, a.k_max, a.k_factor)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = search_positive(a.lambda_, a.delta, ks, a.ls, use_bound=not a.exact, theta=a.theta, workers=a.workers)
    for w in caught:
        print(f"warning: {w.message}", file=stderr)
    schedule = {
        "k_values": ks,
        "l_rule": "given" if a.ls else "round(c sqrt k), c in 0.35, 0.7, 1.4",
        "use_bound": not a.exact,
    }
    return rp.search_dict(res, schedule), "json"


COMMANDS = {
    "singular": _cmd_singular,
    "gallagher": _cmd_gallagher,
    "gallagher-trend": _cmd_trend,
    "correlate": _cmd_correlate,
    "f2": _cmd_f2,
}


def dispatch(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Run one subcommand; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=stderr)
    command = args.command + (f" {args.f2_command}" if args.command == "f2" else "")
    start = time.perf_counter()
    try:
        body, fmt = COMMANDS[args.command](args, stderr)
    except DomainError as e:
        print(f"domain error: {e}", file=stderr)
        return EXIT_DOMAIN
    except ResourceError as e:
        print(f"resource error: {e}", file=stderr)
        return EXIT_RESOURCE
    if fmt == "json":
        stdout.write(rp.dumps(rp.with_provenance(body, command, _params(args))) + "\n")
    else:
        stdout.write(body)
    print(f"wall time: {time.perf_counter() - start:.3f} s", file=stderr)
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
