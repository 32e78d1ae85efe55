"""Command-line interface.

Every command writes one JSON document (sorted keys, fixed formatting) that
records the sha256 of each input file and every parameter used. Exit
status: 0 success, 2 malformed input, 3 mathematical failure, 4 tolerance
failure.
"""

import argparse
import hashlib
import json
import math
import sys

from . import __version__
from .errors import StokesResumError, ToleranceError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MATH = 3
EXIT_TOLERANCE = 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _load(path, hashes, key):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    hashes[key] = hashlib.sha256(raw).hexdigest()
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _parse(fn, data, what):
    try:
        return fn(data)
    except (ValueError, KeyError, TypeError, IndexError, ZeroDivisionError) as exc:
        if isinstance(exc, StokesResumError) and not isinstance(exc, ValueError):
            raise
        raise InputError(f"malformed {what}: {exc}") from exc


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True, default=_json_default) + "\n"


def _emit(obj, output):
    text = dumps(obj)
    if output:
        with open(output, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _header(command, args, hashes, params):
    return {
        "command": command,
        "version": __version__,
        "inputs": dict(sorted(hashes.items())),
        "parameters": params,
    }


# ---------------------------------------------------------------------------
# commands


def _system(args, hashes, key="system"):
    from .connection import MeromorphicSystem

    return _parse(MeromorphicSystem.from_json, _load(getattr(args, key), hashes, key), "system")


def _chart(args):
    from .groupoid import GroupoidChart

    if args.mu_chart and (args.chart != "pair" or args.k != 2):
        raise InputError("--mu-chart needs --chart pair --k 2")
    return GroupoidChart(args.chart, args.k, mu=args.mu_chart)


def cmd_gauge(args):
    from .resummation import ExponentialModel, solve_formal_gauge

    hashes = {}
    sys_ = _system(args, hashes)
    model = _parse(ExponentialModel.from_json, _load(args.model, hashes, "model"), "model")
    pre = _pre_gauge(args, hashes)
    phi = solve_formal_gauge(model, sys_, args.degree, pre_gauge=pre)
    out = _header("gauge", args, hashes, {"degree": args.degree})
    out["gauge"] = phi.to_json()
    out["residual_vanishes"] = _residual_ok(phi)
    return out, EXIT_OK


def _residual_ok(phi):
    from .resummation import residual_vanishes

    return residual_vanishes(phi.residual())


def _pre_gauge(args, hashes):
    from .resummation import MonomialGauge

    if not args.pre_gauge:
        return None
    return _parse(MonomialGauge.from_json, _load(args.pre_gauge, hashes, "pre_gauge"), "pre-gauge")


def cmd_resum(args):
    from .resummation import (
        ExponentialModel,
        FormalGauge,
        resum_model,
        solve_formal_gauge,
    )

    hashes = {}
    model = _parse(ExponentialModel.from_json, _load(args.model, hashes, "model"), "model")
    chart = _chart(args)
    pre = _pre_gauge(args, hashes)
    if args.gauge:
        data = _load(args.gauge, hashes, "gauge")
        if isinstance(data, dict) and data.get("command") == "gauge":
            data = data.get("gauge")
        phi = _parse(FormalGauge.from_json, data, "gauge")
        if pre is None:
            pre = phi.pre_gauge
    else:
        if not args.system:
            raise InputError("resum needs --system or --gauge")
        sys_ = _system(args, hashes)
        r = math.lcm(sys_.ramification, model.ramification)
        spread = 0
        if pre is not None:
            r = math.lcm(r, pre.ramification())
            spread = pre.spread()
        phi = solve_formal_gauge(model, sys_, math.ceil(r * (args.degree + spread)) + 1, pre_gauge=pre)
    rep = resum_model(phi, model, chart, pre_gauge=pre, degree=args.degree)
    params = {
        "chart": args.chart,
        "k": args.k,
        "mu_chart": args.mu_chart,
        "degree": args.degree,
        "check_degree": args.check_degree,
    }
    out = _header("resum", args, hashes, params)
    out["representation"] = rep.to_json()
    checks = {"identity": rep.check_identity()}
    if args.check_degree:
        checks["multiplicative"] = rep.check_multiplicativity(min(args.check_degree, args.degree))
    out["checks"] = checks
    status = EXIT_OK if all(checks.values()) else EXIT_MATH
    return out, status


def cmd_transport(args):
    from .oracle import PathSpec, transport

    hashes = {}
    sys_ = _system(args, hashes)
    try:
        path = PathSpec.parse(args.path, args.min_distance)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.tol < 1e-13:
        raise InputError("--tol must be at least 1e-13")
    res = transport(sys_, path, args.tol)
    out = _header("transport", args, hashes, {"path": args.path, "tol": args.tol, "min_distance": args.min_distance})
    out["result"] = res.to_json()
    if res.error_estimate > 10 * args.tol * max(1.0, float(abs(res.matrix).max())):
        out["verdict"] = "error estimate exceeds tolerance"
        return out, EXIT_TOLERANCE
    out["verdict"] = "ok"
    return out, EXIT_OK


def cmd_check_groupoid(args):
    from .groupoid import check_axioms

    res = check_axioms(args.kind, args.k, degree=args.degree, samples=args.samples, seed=args.seed, tol=args.tol)
    params = {
        "kind": args.kind,
        "k": args.k,
        "degree": args.degree,
        "samples": args.samples,
        "seed": args.seed,
        "tol": args.tol,
    }
    out = _header("check-groupoid", args, {}, params)
    out["axioms"] = res
    passed = all(v["pass"] for v in res.values())
    out["all_pass"] = passed
    if passed:
        return out, EXIT_OK
    numeric_only = all(v["pass"] or name == "numeric" for name, v in res.items())
    return out, EXIT_TOLERANCE if numeric_only else EXIT_MATH


def cmd_demo(args):
    from .demos import run_airy, run_euler

    if args.name == "euler":
        rep, verdict = run_euler(args.degree)
    else:
        rep, verdict = run_airy(args.degree)
    out = _header("demo", args, {}, {"name": args.name, "degree": args.degree})
    out["representation"] = rep.to_json()
    out["verdict"] = verdict
    return out, EXIT_OK if verdict["exact_match"] else EXIT_MATH


def cmd_push(args):
    from .connection import pushforward

    hashes = {}
    sys_ = _system(args, hashes)
    res = pushforward(sys_, args.n)
    out = _header("push", args, hashes, {"n": args.n})
    out["system"] = res.to_json()
    return out, EXIT_OK


def cmd_pull(args):
    from .connection import pullback

    hashes = {}
    sys_ = _system(args, hashes)
    res = pullback(sys_, args.n)
    out = _header("pull", args, hashes, {"n": args.n})
    out["system"] = res.to_json()
    return out, EXIT_OK


def cmd_stokes_directions(args):
    from .connection import anti_stokes

    hashes = {}
    sys_ = _system(args, hashes)
    out = _header("stokes-directions", args, hashes, {})
    out["anti_stokes"] = anti_stokes(sys_).to_json()
    return out, EXIT_OK


def cmd_companion(args):
    from .connection import ScalarOperator, companion

    hashes = {}
    op = _parse(ScalarOperator.from_json, _load(args.operator, hashes, "operator"), "operator")
    out = _header("companion", args, hashes, {})
    out["system"] = companion(op).to_json()
    return out, EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="stokes-resum", description="Exact resummation of formal solutions on Stokes groupoids.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
    p.add_argument("--output", "-o", help="write JSON here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def chart_opts(q):
        q.add_argument("--chart", choices=["sto", "pair"], required=True)
        q.add_argument("--k", type=int, required=True)
        q.add_argument("--mu-chart", action="store_true", help="additive chart of the order-two pair groupoid")

    q = sub.add_parser("resum", help="resum a formal gauge into a groupoid representation")
    q.add_argument("--system")
    q.add_argument("--model", required=True)
    q.add_argument("--gauge", help="precomputed gauge JSON (skips the solver)")
    q.add_argument("--pre-gauge")
    q.add_argument("--degree", type=int, required=True)
    q.add_argument("--check-degree", type=int, default=0, help="verify multiplicativity to this degree")
    chart_opts(q)
    q.set_defaults(func=cmd_resum)

    q = sub.add_parser("gauge", help="solve for a formal gauge")
    q.add_argument("--system", required=True)
    q.add_argument("--model", required=True)
    q.add_argument("--pre-gauge")
    q.add_argument("--degree", type=int, required=True, help="order in w = z^(1/r)")
    q.set_defaults(func=cmd_gauge)

    q = sub.add_parser("transport", help="numeric parallel transport along a polyline")
    q.add_argument("--system", required=True)
    q.add_argument("--path", required=True, help='waypoints "x0,y0;x1,y1;..."')
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--min-distance", type=float, default=1e-3)
    q.set_defaults(func=cmd_transport)

    q = sub.add_parser("check-groupoid", help="verify the groupoid axioms of a chart")
    q.add_argument("--kind", choices=["sto", "pair"], required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--degree", type=int, default=10)
    q.add_argument("--samples", type=int, default=100)
    q.add_argument("--tol", type=float, default=1e-9)
    q.set_defaults(func=cmd_check_groupoid)

    q = sub.add_parser("demo", help="reproduce a worked example")
    q.add_argument("name", choices=["euler", "airy"])
    q.add_argument("--degree", type=int, required=True)
    q.set_defaults(func=cmd_demo)

    for name, func, hlp in (("push", cmd_push, "direct image along z -> z^n"), ("pull", cmd_pull, "pullback along z -> z^n")):
        q = sub.add_parser(name, help=hlp)
        q.add_argument("--system", required=True)
        q.add_argument("--n", type=int, required=True)
        q.set_defaults(func=func)

    q = sub.add_parser("stokes-directions", help="leading eigenvalues and anti-Stokes directions")
    q.add_argument("--system", required=True)
    q.set_defaults(func=cmd_stokes_directions)

    q = sub.add_parser("companion", help="companion system of a scalar operator")
    q.add_argument("--operator", required=True)
    q.set_defaults(func=cmd_companion)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("degree", "k", "n", "samples"):
        v = getattr(args, name, None)
        if v is not None and v < (1 if name in ("k", "n") else 0):
            sys.stderr.write(f"stokes-resum: --{name} out of range\n")
            return EXIT_INPUT
    try:
        out, status = args.func(args)
    except InputError as exc:
        sys.stderr.write(f"stokes-resum: {exc}\n")
        return EXIT_INPUT
    except ToleranceError as exc:
        sys.stderr.write(f"stokes-resum: tolerance failure: {exc}\n")
        return EXIT_TOLERANCE
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"stokes-resum: invalid input: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
    except StokesResumError as exc:
        sys.stderr.write(f"stokes-resum: {type(exc).__name__}: {exc}\n")
        return EXIT_MATH
    _emit(out, args.output)
    return status


if __name__ == "__main__":
    sys.exit(main())
