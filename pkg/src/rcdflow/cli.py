"""Command-line interface: ``rcdflow <group> <command> [options]``.

Results go to stdout (or ``--out``); a JSON run manifest goes to stderr (or
``--manifest``) exactly once per invocation.  Exit codes: 0 success,
1 malformed input or spec, 2 certification or contract failure, 3 resource
limit.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from importlib import resources
from pathlib import Path

from . import __version__
from .ball import Ball
from .dyadic import Dyadic
from .errors import CertificationError, ContractError, DecodeError, RcdError, ResourceLimitError, SpecError

EXIT_OK, EXIT_INPUT, EXIT_CERT, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class Run:
    """Collects what goes into the manifest."""

    def __init__(self, argv, hook=None):
        self.argv = list(argv)
        self.command = ""
        self.inputs: dict = {}
        self.outputs: list[str] = []
        self.timings: dict[str, float] = {}
        self.peak = 0
        self.extra: dict = {}
        self.hook = hook

    def time(self, name):
        run = self

        class _T:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = round(time.perf_counter() - self.t, 6)

        return _T()

    def tracker(self):
        from .robust import MemoryTracker

        tr = MemoryTracker()
        tr.hook = self.hook
        return tr

    def manifest(self, code: int, error: str | None) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "versions": {"rcdflow": __version__, "python": platform.python_version()},
            "timings": self.timings,
            "peak_live_vectors": self.peak,
            "exit_code": code,
        }
        out.update(self.extra)
        if error:
            out["error"] = error
        return out


# formatting ---------------------------------------------------------------------


def ball_out(b: Ball, digits: int = 30) -> dict:
    return {"mid": b.c.to_decimal(digits), "rad": f"{float(b.r):.6e}", "exact": b.to_json()}


def _emit(args, run: Run, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
        run.outputs.append(str(args.out))
    else:
        sys.stdout.write(text)


def _emit_json(args, run: Run, obj) -> None:
    _emit(args, run, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _dyadic(text: str) -> Dyadic:
    return Dyadic.parse(text)


def _ballarg(text: str) -> Ball:
    return Ball.coerce(text)


def _load_machine(path: str):
    from .tm import parse_tm_spec

    p = Path(path)
    if not p.exists():
        bundled = resources.files("rcdflow") / "machines" / p.name
        if bundled.is_file():
            return parse_tm_spec(bundled)
    return parse_tm_spec(p)


# gadget -------------------------------------------------------------------------

BESTIARY = ("xi1", "xi2", "sigma1", "sigma2", "lambda", "mod2", "div2")


def cmd_gadget_eval(args, run: Run) -> int:
    from .elementary import elem_eval
    from .gadgets import relutanh, sigtanh
    from .xi import bestiary_eval, xi_ext

    x = _ballarg(args.x)
    z = Dyadic(1, args.m)
    run.inputs = {"kind": args.kind, "m": args.m, "n": args.n, "x": args.x}
    with run.time("eval"):
        if args.kind == "relutanh":
            v = relutanh(z, x)
        elif args.kind == "sigtanh":
            run.inputs.update(a=args.a, b=args.b)
            v = sigtanh(z, _dyadic(args.a), _dyadic(args.b), x)
        elif args.kind == "xi":
            v = xi_ext((args.m, args.n), x)
        elif args.kind in BESTIARY:
            v = bestiary_eval(args.kind, (args.m, args.n), x)
        else:
            v = elem_eval(args.kind, x, args.m)
    _emit_json(args, run, {"kind": args.kind, "m": args.m, "n": args.n, "x": args.x, "value": ball_out(v)})
    return EXIT_OK


# tm ---------------------------------------------------------------------------------


def _config_json(c) -> dict:
    return {"q": c.q, "left": c.left, "right": c.right}


def cmd_tm_run(args, run: Run) -> int:
    from .tm import initial_config, run_exact

    tm = _load_machine(args.spec)
    run.inputs = {"spec": args.spec, "input": args.input, "steps": args.steps}
    with run.time("run"):
        trace = run_exact(tm, initial_config(tm, args.input), args.steps)
    halt = next((i for i, c in enumerate(trace) if tm.is_final(c.q)), None)
    if args.space is not None:
        _check_space(trace, args.space)
    _emit_json(
        args,
        run,
        {"steps": args.steps, "config": _config_json(trace[-1]), "halted_at": halt, "trace": [_config_json(c) for c in trace]},
    )
    return EXIT_OK


def _check_space(trace, S: int) -> None:
    worst = max(c.cells() for c in trace)
    if worst > S:
        raise ResourceLimitError(f"the machine uses {worst} cells, more than the space bound {S}")


def cmd_tm_ode_sim(args, run: Run) -> int:
    from .branicky import exec_flow_run
    from .tm import EncodedConfig, decode_config, initial_config, run_exact

    tm = _load_machine(args.spec)
    S, m, k = args.space, args.precision_bits, args.steps
    run.inputs = {"spec": args.spec, "input": args.input, "steps": k, "precision_bits": m, "space": S}
    with run.time("direct"):
        trace = run_exact(tm, initial_config(tm, args.input), k)
        _check_space(trace, S)
    with run.time("flow"):
        traj = exec_flow_run(tm, args.input, k, m, S, substeps=args.substeps)
    ec = EncodedConfig(*traj.state_at(k))
    run.peak = 2  # y1 and y2
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            traj.to_csv(fh)
        run.outputs.append(str(args.csv))
    cfg = decode_config(ec, S)
    exact = trace[-1].normalized()
    err = max(abs(a.c - b) + a.r for a, b in zip(ec.as_list(), _enc(exact)))
    result = {
        "steps": k,
        "config": _config_json(cfg),
        "direct": _config_json(exact),
        "matches_direct": cfg == exact,
        "error_bound": f"{float(err):.6e}",
        "encoded": [ball_out(b) for b in ec.as_list()],
    }
    _emit_json(args, run, result)
    if cfg != exact:
        raise CertificationError("decoded flow configuration differs from the direct run")
    if err > Dyadic(1, -m):
        raise CertificationError(f"flow state is {float(err):.3g} from the encoding, above 2^-{m}")
    return EXIT_OK


def _enc(c):
    from .tm import encode_config

    return [b.c for b in encode_config(c).as_list()]


# ivp --------------------------------------------------------------------------------


def _build_ivp(args, run: Run):
    from . import robust

    desc = {}
    if args.ivp:
        try:
            desc = json.loads(Path(args.ivp).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"{args.ivp}: {exc}") from None
    kind = args.kind or desc.get("kind")
    if not kind:
        raise SpecError("ivp: missing kind")
    delta = args.delta or desc.get("delta")
    poly = desc.get("stability_poly")
    if kind == "builtin:decay":
        ivp = robust.decay_ivp(delta or "1/2")
    elif kind == "builtin:vdp":
        ivp = robust.vdp_ivp(args.mu or desc.get("mu", "1"), delta or "1/4")
    elif kind == "builtin:tm":
        if not (args.spec and args.input is not None and args.space):
            raise SpecError("builtin:tm needs --spec, --input and --space")
        ivp = robust.tm_ivp(_load_machine(args.spec), args.input, args.precision_bits, args.space)
    elif kind == "expr":
        ivp = _expr_ivp(desc, delta)
    else:
        raise SpecError(f"ivp: unknown kind {kind!r}")
    if poly is not None and kind != "builtin:tm":
        if not isinstance(poly, list) or not all(isinstance(c, int) and c >= 0 for c in poly):
            raise SpecError("stability_poly: expected a list of nonnegative integers")
        ivp.stability_poly = tuple(poly)
    run.inputs.update(kind=kind, delta=str(ivp.delta), stability_poly=list(ivp.stability_poly))
    return ivp


def _expr_ivp(desc: dict, delta):
    from .expr import eval_expr, parse_sexpr
    from .robust import RobustIVP

    problems = []
    exprs = desc.get("exprs")
    if not isinstance(exprs, list) or not exprs:
        raise SpecError("exprs: expected a nonempty list of s-expressions")
    parsed = []
    for i, text in enumerate(exprs):
        try:
            parsed.append(parse_sexpr(text))
        except RcdError as exc:
            problems.append(f"exprs[{i}]: {exc}")
        except ValueError as exc:
            problems.append(f"exprs[{i}]: {exc}")
    if problems:
        raise SpecError(problems)
    d = len(parsed)
    init = [Ball.coerce(v) for v in desc.get("init", [0] * d)]
    if len(init) != d:
        raise SpecError(f"init: expected {d} values")
    lip = desc.get("lipschitz")
    acc = desc.get("accel")

    def u(f, hv, t, x):
        return [eval_expr(e, f, 64) for e in parsed]

    def g(x):
        return list(x) if x else list(init)

    return RobustIVP(
        d,
        u,
        g,
        Dyadic.parse(str(delta or "1/2")),
        tuple(desc.get("stability_poly", (8, 1))),
        lipschitz=Dyadic.parse(str(lip)) if lip is not None else None,
        accel=(lambda y, span, a=Dyadic.parse(str(acc)): a) if acc is not None else None,
        name="expr",
    )


def cmd_ivp_solve(args, run: Run) -> int:
    from .robust import FlowQuery, bisect_flow, euler_direct, tm_state

    ivp = _build_ivp(args, run)
    x = [_ballarg(v) for v in args.x.split(",")] if args.x else []
    q = FlowQuery(x, _dyadic(args.t), args.precision_bits)
    run.inputs.update(t=args.t, precision_bits=args.precision_bits, method=args.method, x=args.x)
    methods = ["bisect", "euler-direct"] if args.compare else [args.method]
    peaks = {}
    result = None
    for meth in methods:
        tr = run.tracker()
        with run.time(meth):
            if meth == "bisect":
                vals = bisect_flow(ivp, q, tr, seed=args.seed)
                info = {"depth": tr.max_depth}
            else:
                vals, samples = euler_direct(ivp, q, tr, retain=True)
                info = {"stored_samples": len(samples)}
        peaks[meth] = tr.peak
        if meth == args.method or result is None:
            result = {"method": meth, "values": [ball_out(b) for b in vals], "windows": tr.windows, **info}
            if ivp.name == "tm":
                from .tm import EncodedConfig, decode_config

                result["config"] = _config_json(decode_config(EncodedConfig(*tm_state(vals)), args.space))
    run.peak = peaks[args.method]
    if args.trace_memory or args.compare:
        result["peak_live_vectors"] = peaks[args.method]
    if args.compare:
        run.extra["compare"] = {"peak_live_vectors": peaks}
        result["compare"] = peaks
    _emit_json(args, run, result)
    return EXIT_OK


# graph ------------------------------------------------------------------------------


def cmd_graph_reach(args, run: Run) -> int:
    from .graphs import FiniteGraph, GraphStats

    g = FiniteGraph.load(args.graph)
    run.inputs = {"graph": args.graph, "from": args.source, "to": args.to, "t": args.t}
    if args.t < 0:
        raise ValueError("t must be nonnegative")
    stats = GraphStats()
    with run.time("reach"):
        ok = reach_within(g, args.source, args.to, args.t, stats)
    _emit_json(args, run, {"reachable": ok, "depth": stats.max_depth, "peak_live_vertices": stats.peak_live})
    return EXIT_OK


def reach_within(g, u: int, v: int, t: int, stats) -> bool:
    """Reachability for any horizon: split t into its binary blocks."""
    from .graphs import can_yield, graph_flow

    g.check(v)
    if u == v:
        return True
    for k in reversed(range(t.bit_length())):
        block = 1 << k
        if t & block:
            if can_yield(g, u, v, block, stats):
                return True
            u = graph_flow(g, u, block)
    return False


def cmd_graph_flow(args, run: Run) -> int:
    from .graphs import FiniteGraph, GraphStats, graph_flow

    g = FiniteGraph.load(args.graph)
    run.inputs = {"graph": args.graph, "from": args.source, "T": args.T}
    stats = GraphStats()
    with run.time("flow"):
        v = graph_flow(g, args.source, args.T, stats)
    _emit_json(args, run, {"vertex": v, "depth": stats.max_depth})
    return EXIT_OK


# encode -----------------------------------------------------------------------------


def cmd_encode_word(args, run: Run) -> int:
    from .tm import encode_word

    run.inputs = {"value": args.value}
    d = encode_word(args.value)
    _emit(args, run, d.to_decimal() + "\n")
    return EXIT_OK


def cmd_encode_dyadic(args, run: Run) -> int:
    from .tm import encode_dyadic

    run.inputs = {"value": args.value, "decimal": args.decimal}
    d = Dyadic.parse(args.value) if args.decimal else Dyadic.parse_binary(args.value)
    _emit(args, run, encode_dyadic(d) + "\n")
    return EXIT_OK


def cmd_encode_nat(args, run: Run) -> int:
    from .tm import encode_dyadic
    from .tm_real import decode_nat

    n = args.value
    run.inputs = {"value": n, "m": args.m}
    code = encode_dyadic(Dyadic(n))
    with run.time("gadget"):
        real = decode_nat((args.m, max(1, n.bit_length())), n)
    _emit_json(args, run, {"n": n, "code": code, "real": ball_out(real)})
    return EXIT_OK


# parser -----------------------------------------------------------------------------

GADGET_KINDS = ("relutanh", "sigtanh", "xi", *BESTIARY, "tanh", "sin", "cos", "pi")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--manifest", help="write the run manifest here instead of stderr")

    p = _Parser(prog="rcdflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rcdflow {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    gad = groups.add_parser("gadget", help="evaluate a gadget").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    ge = gad.add_parser("eval", parents=[common], help="certified gadget value")
    ge.add_argument("--kind", required=True, choices=GADGET_KINDS)
    ge.add_argument("--m", type=int, required=True, help="accuracy 2^-m (sharpness 2^m)")
    ge.add_argument("--n", type=int, default=4, help="argument range [-2^n, 2^n]")
    ge.add_argument("--x", default="0")
    ge.add_argument("--a", default="0")
    ge.add_argument("--b", default="1")
    ge.set_defaults(func=cmd_gadget_eval)

    tm = groups.add_parser("tm", help="Turing machines").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    tr = tm.add_parser("run", parents=[common], help="exact execution")
    tr.add_argument("--spec", required=True)
    tr.add_argument("--input", default="")
    tr.add_argument("--steps", type=int, required=True)
    tr.add_argument("--space", type=int)
    tr.set_defaults(func=cmd_tm_run)
    to = tm.add_parser("ode-sim", parents=[common], help="execution inside the two-phase flow")
    to.add_argument("--spec", required=True)
    to.add_argument("--input", default="")
    to.add_argument("--steps", type=int, required=True)
    to.add_argument("--precision-bits", type=int, required=True)
    to.add_argument("--space", type=int, required=True)
    to.add_argument("--csv", help="trajectory CSV path")
    to.add_argument("--substeps", type=int, default=4)
    to.set_defaults(func=cmd_tm_ode_sim)

    iv = groups.add_parser("ivp", help="robust IVPs").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    isv = iv.add_parser("solve", parents=[common], help="flow at time t")
    isv.add_argument("--kind", help="builtin:decay, builtin:vdp, builtin:tm or expr")
    isv.add_argument("--ivp", help="JSON IVP descriptor")
    isv.add_argument("--t", required=True)
    isv.add_argument("--delta")
    isv.add_argument("--precision-bits", type=int, required=True)
    isv.add_argument("--method", choices=("bisect", "euler-direct"), default="bisect")
    isv.add_argument("--trace-memory", action="store_true")
    isv.add_argument("--compare", action="store_true", help="run both methods and record both peaks")
    isv.add_argument("--x", help="comma-separated initial values / parameters")
    isv.add_argument("--mu")
    isv.add_argument("--spec", help="machine file for builtin:tm")
    isv.add_argument("--input", help="machine input for builtin:tm")
    isv.add_argument("--space", type=int)
    isv.add_argument("--seed", type=int, default=0)
    isv.set_defaults(func=cmd_ivp_solve)

    gr = groups.add_parser("graph", help="functional graphs").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    grr = gr.add_parser("reach", parents=[common], help="reachability within t steps")
    grr.add_argument("--graph", required=True)
    grr.add_argument("--from", dest="source", type=int, required=True)
    grr.add_argument("--to", type=int, required=True)
    grr.add_argument("--t", type=int, required=True)
    grr.set_defaults(func=cmd_graph_reach)
    grf = gr.add_parser("flow", parents=[common], help="T-th successor")
    grf.add_argument("--graph", required=True)
    grf.add_argument("--from", dest="source", type=int, required=True)
    grf.add_argument("--T", type=int, required=True)
    grf.set_defaults(func=cmd_graph_flow)

    en = groups.add_parser("encode", help="encodings").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    ew = en.add_parser("word", parents=[common], help="radix-4 value of a tape word")
    ew.add_argument("--value", required=True)
    ew.set_defaults(func=cmd_encode_word)
    ed = en.add_parser("dyadic", parents=[common], help="pair code of a dyadic (binary input)")
    ed.add_argument("--value", required=True)
    ed.add_argument("--decimal", action="store_true", help="read --value as decimal or a/b")
    ed.set_defaults(func=cmd_encode_dyadic)
    enn = en.add_parser("nat", parents=[common], help="pair code of n, also computed by gadgets")
    enn.add_argument("--value", type=int, required=True)
    enn.add_argument("--m", type=int, default=10)
    enn.set_defaults(func=cmd_encode_nat)
    return p


def main(argv=None, hook=None) -> int:
    """Entry point; ``hook(live)`` observes every live-vector count (for tests)."""
    argv = sys.argv[1:] if argv is None else list(argv)
    run = Run(argv, hook)
    args = None
    code, error = EXIT_OK, None
    try:
        args = build_parser().parse_args(argv)
        run.command = f"{args.group} {args.cmd}"
        code = args.func(args, run)
    except UsageError as exc:
        code, error = EXIT_INPUT, str(exc)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ResourceLimitError as exc:
        code, error = EXIT_RESOURCE, f"resource limit: {exc}"
    except (CertificationError, ContractError, DecodeError) as exc:
        code, error = EXIT_CERT, f"certification failed: {exc}"
    except SpecError as exc:
        code, error = EXIT_INPUT, "malformed spec:\n  " + "\n  ".join(exc.problems)
    except (RcdError, ValueError) as exc:
        code, error = EXIT_INPUT, f"invalid input: {exc}"
    if error:
        print(f"error: {error}", file=sys.stderr)
    doc = json.dumps(run.manifest(code, error), sort_keys=True)
    target = getattr(args, "manifest", None) if args is not None else None
    if target:
        Path(target).write_text(doc + "\n")
    else:
        print(doc, file=sys.stderr)
    return code


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
