"""Command-line entry point: ``sessadapt <command> ...``.

Exit codes: 0 success, 1 a check failed or a run got stuck, 2 parse, projection
or type error (and bad flags), 3 an internal bound was exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import __version__
from .checks import SCHEMA_VERSION, check_progress, check_safety, initial_env, well_formed_program
from .env_lts import DEFAULT_MAX_STATES, StateBoundExceeded, reachable
from .frontend import ParseError, parse_program_file, parse_protocol, program_str, protocol_file_str
from .frontend.printer import local_str, protocol_str
from .projection import ProjectionError, project, project_protocol
from .syntax import Protocol, TypeTable, global_roles, rename_rec_vars

EXIT_OK, EXIT_FAIL, EXIT_ERROR, EXIT_BOUND = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}")


def _is_program(path: str) -> bool:
    return path.endswith(".act")


def _max_states(args) -> int:
    if args.max_states is not None:
        return args.max_states
    env = os.environ.get("SESSADAPT_MAX_STATES")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"SESSADAPT_MAX_STATES must be an integer, got {env!r}")
        if value < 1:
            raise UsageError("SESSADAPT_MAX_STATES must be positive")
        return value
    return DEFAULT_MAX_STATES


def load_protocols(path: str) -> list[Protocol]:
    """Role-to-type protocols of a file; global protocols are projected first."""
    if _is_program(path):
        return list(parse_program_file(path).protocols)
    pf = parse_protocol(_read(path))
    out = list(pf.protocols)
    names = {p.name for p in out}
    for gp in pf.globals:
        if gp.name not in names:
            out.append(project_protocol(gp))
    return out


def _select(protocols: list[Protocol], name: str | None) -> list[Protocol]:
    if name is None:
        return protocols
    chosen = [p for p in protocols if p.name == name]
    if not chosen:
        raise UsageError(f"no protocol named {name!r}; have {', '.join(p.name for p in protocols)}")
    return chosen


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_parse(args, out) -> int:
    if _is_program(args.file):
        prog = parse_program_file(args.file)
        if args.json:
            out.write(_dump({
                "schema": SCHEMA_VERSION, "kind": "program",
                "protocols": [{"name": p.name, "roles": list(p.roles)} for p in prog.protocols],
                "actors": [d.cls for d in prog.definitions],
            }) + "\n")
        else:
            out.write(program_str(prog))
        return EXIT_OK
    pf = parse_protocol(_read(args.file))
    if args.json:
        out.write(_dump({
            "schema": SCHEMA_VERSION, "kind": "protocols",
            "protocols": [{"name": p.name, "roles": list(p.roles)} for p in pf.protocols],
            "globals": [{"name": g.name, "roles": sorted(g.roles or global_roles(g.gtype))}
                        for g in pf.globals],
        }) + "\n")
    else:
        out.write(protocol_file_str(pf.declarations))
    return EXIT_OK


def cmd_project(args, out) -> int:
    pf = parse_protocol(_read(args.file))
    if not pf.globals:
        raise UsageError(f"{args.file} contains no global protocol")
    results = []
    for gp in pf.globals:
        if args.role is not None:
            if args.role not in global_roles(gp.gtype) and args.role not in gp.roles:
                raise UsageError(f"role {args.role!r} does not occur in {gp.name}")
            results.append((gp.name, Protocol(gp.name, ((args.role, project(gp.gtype, args.role)),))))
        else:
            results.append((gp.name, project_protocol(gp)))
    if args.normalise:
        results = [(name, Protocol(p.name, tuple((r, rename_rec_vars(t)) for r, t in p.entries)))
                   for name, p in results]
    if args.json:
        out.write(_dump({"schema": SCHEMA_VERSION, "projections": [
            {"protocol": name, "roles": {r: local_str(t) for r, t in p.entries}} for name, p in results
        ]}) + "\n")
    else:
        out.write("\n\n".join(protocol_str(p) for _, p in results) + "\n")
    return EXIT_OK


def cmd_check(args, out) -> int:
    bound = _max_states(args)
    protocols = _select(load_protocols(args.file), args.protocol)
    fn = check_safety if args.property == "safety" else check_progress
    table = TypeTable(protocols)
    reports = [(p.name, fn(p, table, bound)) for p in protocols]
    if args.json:
        out.write(_dump({"schema": SCHEMA_VERSION, "check": args.property, "reports": [
            {"protocol": name, **r.to_json()} for name, r in reports]}) + "\n")
    else:
        for name, r in reports:
            line = f"{args.property} {name}: {r.verdict.upper()} ({r.states_explored} states)"
            if r.violation is not None:
                line += f"\n  {r.violation.kind}: {r.violation.message}"
                if r.witness:
                    line += "\n  witness: " + " ; ".join(str(w) for w in r.witness)
            out.write(line + "\n")
    return EXIT_OK if all(r.passed for _, r in reports) else EXIT_FAIL


def cmd_typecheck(args, out) -> int:
    prog = parse_program_file(args.file)
    report = well_formed_program(prog, _max_states(args))
    if args.json:
        out.write(_dump(report.to_json()) + "\n")
    else:
        if report.passed:
            out.write(f"{args.file}: well-formed ({len(prog.definitions)} actor classes, "
                      f"{len(prog.protocols)} protocols)\n")
        for d in report.diagnostics:
            where = f"{d.line}:{d.column}: " if d.line is not None else ""
            out.write(f"{args.file}:{where}clause {d.clause} [{d.kind}]: {d.message}\n")
    return EXIT_OK if report.passed else EXIT_ERROR


def cmd_run(args, out) -> int:
    from .runtime import STEP_LIMIT, STUCK, load_fault_plan, run
    from .runtime.preservation import PreservationError, PreservationHarness

    plan = []
    if args.fault_plan:
        try:
            plan = load_fault_plan(_read(args.fault_plan))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"invalid fault plan {args.fault_plan}: {exc}")
    prog = parse_program_file(args.file)
    report = well_formed_program(prog, _max_states(args))
    if not report.passed:
        for d in report.diagnostics:
            sys.stderr.write(f"{args.file}: clause {d.clause} [{d.kind}]: {d.message}\n")
        return EXIT_ERROR
    harness = PreservationHarness(prog) if args.check_preservation else None
    try:
        outcome = run(prog, args.seed, args.max_steps, plan, args.discover_timeout,
                      observer=harness.observe if harness else None)
    except PreservationError as exc:
        sys.stderr.write(f"preservation check failed: {exc}\n")
        return EXIT_FAIL
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(outcome.trace_jsonl())
    if args.json:
        out.write(_dump({"schema": SCHEMA_VERSION, "seed": args.seed, **outcome.to_json()}) + "\n")
    else:
        out.write(f"{outcome.status} after {outcome.steps} steps (seed {args.seed})\n")
        for v in outcome.actors:
            out.write(f"  {v.actor} {v.cls or 'boot'}: {v.kind}\n")
    if outcome.status == STUCK:
        return EXIT_FAIL
    if outcome.status == STEP_LIMIT and args.strict:
        return EXIT_BOUND
    return EXIT_OK


def cmd_graph(args, out) -> int:
    bound = _max_states(args)
    protocols = _select(load_protocols(args.file), args.protocol)
    table = TypeTable(protocols)
    chunks = []
    for p in protocols:
        env0 = initial_env(p)
        if env0 is None:
            raise UsageError(f"protocol {p.name} has no unique initiator")
        chunks.append(reachable(env0, table, args.exception_aware, bound).to_dot())
    text = "".join(chunks)
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--max-states", type=_positive, default=None,
                        help=f"state bound for exploration (default {DEFAULT_MAX_STATES}, "
                             "or SESSADAPT_MAX_STATES)")
    common.add_argument("--strict", action="store_true", help="treat a step limit as an error (exit 3)")

    ap = argparse.ArgumentParser(prog="sessadapt", description="Session-typed actor toolchain.")
    ap.add_argument("--version", action="version", version=f"sessadapt {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse and pretty-print a .mpst or .act file")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("project", parents=[common], help="project global protocols to local types")
    p.add_argument("file")
    p.add_argument("--role")
    p.add_argument("--normalise", action="store_true",
                   help="rename recursion variables to Rec0, Rec1, ... in each local type")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("check", parents=[common], help="check safety or progress of protocols")
    p.add_argument("property", choices=("safety", "progress"))
    p.add_argument("file")
    p.add_argument("--protocol")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("typecheck", parents=[common], help="check that a program is well-formed")
    p.add_argument("file")
    p.set_defaults(func=cmd_typecheck)

    p = sub.add_parser("run", parents=[common], help="execute a program in the seeded simulator")
    p.add_argument("file")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-steps", type=_positive, default=10_000)
    p.add_argument("--fault-plan")
    p.add_argument("--trace", help="write the JSON-lines trace here")
    p.add_argument("--discover-timeout", type=_positive, default=None,
                   help="raise in an actor whose discover stays unmatched this many ticks (extension)")
    p.add_argument("--check-preservation", action="store_true",
                   help="re-typecheck the configuration after every step")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("graph", parents=[common], help="emit the environment LTS as Graphviz")
    p.add_argument("file")
    p.add_argument("--protocol")
    p.add_argument("--dot", help="output file (default stdout)")
    p.add_argument("--exception-aware", action="store_true")
    p.set_defaults(func=cmd_graph)
    return ap


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    json_mode = getattr(args, "json", False)
    try:
        return args.func(args, out)
    except ParseError as exc:
        if json_mode:
            out.write(_dump({"schema": SCHEMA_VERSION, "error": "parse",
                             "diagnostics": [d.to_json() for d in exc.diagnostics]}) + "\n")
        for d in exc.diagnostics:
            sys.stderr.write(d.render(args.file) + "\n")
        return EXIT_ERROR
    except ProjectionError as exc:
        if json_mode:
            out.write(_dump({"schema": SCHEMA_VERSION, "error": "projection", **exc.to_json()}) + "\n")
        sys.stderr.write(f"{args.file}: projection failed: {exc}\n")
        return EXIT_ERROR
    except UsageError as exc:
        sys.stderr.write(f"sessadapt: {exc}\n")
        return EXIT_ERROR
    except StateBoundExceeded as exc:
        if json_mode:
            out.write(_dump({"schema": SCHEMA_VERSION, "error": "bound", "bound": exc.bound}) + "\n")
        sys.stderr.write(f"sessadapt: {exc}\n")
        return EXIT_BOUND


if __name__ == "__main__":
    sys.exit(main())
