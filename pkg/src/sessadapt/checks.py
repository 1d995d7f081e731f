"""Safety, progress and well-formedness checks over the environment LTS."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable

from .env_lts import (
    DEFAULT_MAX_STATES, ReachGraph, RuntimeEnv, SyncLabel, TypeGraph, Zap,
    accept_branch, reachable,
)
from .frontend.parser import _boot_nodes as boot_nodes
from .projection import unique_initiator
from .syntax import ActionKind, Choice, Protocol, TypeTable, active, payload_equal
from . import syntax as ast
from .typecheck import TypeContext, TypingError, is_end_post, type_computation, type_definition

SCHEMA_VERSION = 1

SAFETY_KINDS = ("PayloadMismatch", "UnreceivableLabel", "NotConnected", "AcceptorBusyOrAbsent",
                "NoUniqueInitiator")
PROGRESS_KINDS = ("RoleStuck", "OrphanSend", "BadTermination")


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    roles: tuple[str, ...] = ()
    label: str | None = None


@dataclass
class CheckReport:
    check: str
    verdict: str
    violation: Violation | None = None
    witness: list[SyncLabel] = field(default_factory=list)
    state: RuntimeEnv | None = None
    initial: RuntimeEnv | None = None
    states_explored: int = 0
    initiator: str | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "check": self.check,
            "verdict": self.verdict,
            "initiator": self.initiator,
            "states": self.states_explored,
            "violation": None,
            "witness": [w.to_json() for w in self.witness],
        }
        if self.violation is not None:
            out["violation"] = {
                "kind": self.violation.kind,
                "message": self.violation.message,
                "roles": list(self.violation.roles),
                "label": self.violation.label,
            }
            if self.state is not None:
                out["violation"]["state"] = self.state.to_json()
        return out


def _table_for(p: Protocol, table: TypeTable | None) -> TypeTable:
    return table if table is not None else TypeTable(p)


def initial_env(p: Protocol, session: str = "s") -> RuntimeEnv | None:
    q = unique_initiator(p)
    if q is None:
        return None
    return RuntimeEnv.initial(q, p[q], session)


# ---------------------------------------------------------------------------
# Safety
# ---------------------------------------------------------------------------


def safety_violation(env: RuntimeEnv, table: TypeTable, graph: TypeGraph) -> Violation | None:
    """First violated safety clause in ``env`` (clauses 1 and 2, heads unfolded)."""
    heads = {key: (e, graph.head(e.stype)) for key, e in env.sessions}
    for (s, p), (e, head) in heads.items():
        if not isinstance(head, Choice):
            continue
        for a in head.actions:
            q = a.peer
            if a.kind is ActionKind.SEND:
                other = heads.get((s, q))
                if other is None:
                    continue
                qe, qhead = other
                if not (isinstance(qhead, Choice)
                        and all(b.kind is ActionKind.RECV and b.peer == p for b in qhead.actions)):
                    continue
                match = [b for b in qhead.actions if b.label == a.label]
                if not match:
                    return Violation("UnreceivableLabel",
                                     f"{p} may send {a.label} to {q}, which cannot receive it",
                                     (p, q), a.label)
                if q not in e.connected or p not in qe.connected:
                    return Violation("NotConnected",
                                     f"{p} and {q} exchange {a.label} without being connected",
                                     (p, q), a.label)
                if not payload_equal(match[0].payload, a.payload):
                    return Violation("PayloadMismatch",
                                     f"{p} sends {a.label} to {q} with a payload type {q} does not expect",
                                     (p, q), a.label)
            elif a.kind is ActionKind.CONNECT:
                if q in e.connected or (s, q) in heads:
                    return Violation("AcceptorBusyOrAbsent",
                                     f"{p} connects to {q}, which is already in session {s}",
                                     (p, q), a.label)
                declared = table.get(q)
                if declared is None or accept_branch(declared, p, a.label, a.payload) is None:
                    return Violation("AcceptorBusyOrAbsent",
                                     f"{p} connects to {q} with {a.label}, which ty({q}) does not accept",
                                     (p, q), a.label)
    return None


def check_safety_env(env0: RuntimeEnv, table: TypeTable, exception_aware: bool = False,
                     max_states: int = DEFAULT_MAX_STATES,
                     reach: ReachGraph | None = None) -> CheckReport:
    graph = TypeGraph()
    reach = reach or reachable(env0, table, exception_aware, max_states, graph)
    for sid, st in enumerate(reach.states):
        v = safety_violation(st, table, graph)
        if v is not None:
            return CheckReport("safety", "fail", v, reach.witness(sid), st, env0, len(reach))
    return CheckReport("safety", "pass", initial=env0, states_explored=len(reach))


def _no_initiator(check: str) -> CheckReport:
    return CheckReport(check, "fail", Violation(
        "NoUniqueInitiator", "the protocol has no unique initiator"))


def check_safety(p: Protocol, table: TypeTable | None = None,
                 max_states: int = DEFAULT_MAX_STATES) -> CheckReport:
    env0 = initial_env(p)
    if env0 is None:
        return _no_initiator("safety")
    report = check_safety_env(env0, _table_for(p, table), max_states=max_states)
    report.initiator = unique_initiator(p)
    return report


# ---------------------------------------------------------------------------
# Progress
# ---------------------------------------------------------------------------


def _backward(reach: ReachGraph, targets: Iterable[int], avoid: str | None = None) -> set[int]:
    """States with a path into ``targets``; edges mentioning ``avoid`` are not taken."""
    preds: dict[int, list[int]] = defaultdict(list)
    for i, out in enumerate(reach.edges):
        for label, j in out:
            if avoid is not None and avoid in label.roles:
                continue
            preds[j].append(i)
    seen = set(targets)
    queue = deque(seen)
    while queue:
        j = queue.popleft()
        for i in preds.get(j, ()):
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return seen


def _offers_receive(env: RuntimeEnv, s: str, q: str, p: str, label: str, payload, graph: TypeGraph) -> bool:
    e = env.entry((s, q))
    if e is None or p not in e.connected:
        return False
    head = graph.head(e.stype)
    if not isinstance(head, Choice):
        return False
    return any(a.kind is ActionKind.RECV and a.peer == p and a.label == label
               and payload_equal(a.payload, payload) for a in head.actions)


def progress_violation_in(reach: ReachGraph, graph: TypeGraph) -> tuple[int, Violation] | None:
    aware = reach.exception_aware
    # Correct termination
    for sid in reach.terminal_states():
        st = reach.states[sid]
        if not (st.is_final() or (aware and st.is_failed())):
            return sid, Violation("BadTermination",
                                  f"environment cannot reduce but is not final: {st.render()}")
    # Role progress (for every reachable state, some continuation involves the role)
    can_move: dict[str, set[int]] = {}
    for sid, st in enumerate(reach.states):
        for (s, p), e in st.sessions:
            if not active(e.stype):
                continue
            if p not in can_move:
                direct = [i for i, out in enumerate(reach.edges) if any(p in lab.roles for lab, _ in out)]
                can_move[p] = _backward(reach, direct)
            if sid not in can_move[p]:
                return sid, Violation("RoleStuck", f"active role {p} can never act again", (p,))
    # Eventual communication
    cache: dict[tuple, set[int]] = {}
    for sid, st in enumerate(reach.states):
        for (s, p), e in st.sessions:
            head = graph.head(e.stype)
            if not isinstance(head, Choice):
                continue
            for a in head.actions:
                if a.kind is not ActionKind.SEND or a.peer not in e.connected:
                    continue
                q = a.peer
                key = (s, p, q, a.label, ast.canonical(ast.prefix(a, ast.END)))
                if key not in cache:
                    targets = [i for i, t in enumerate(reach.states)
                               if _offers_receive(t, s, q, p, a.label, a.payload, graph)]
                    if aware:
                        targets += [i for i, out in enumerate(reach.edges)
                                    if any(isinstance(lab, Zap) and lab.failed == q and lab.victim == p
                                           for lab, _ in out)]
                    cache[key] = _backward(reach, targets, avoid=p)
                if sid not in cache[key]:
                    return sid, Violation("OrphanSend",
                                          f"{p} may send {a.label} to {q}, which never receives it",
                                          (p, q), a.label)
    return None


def check_progress_env(env0: RuntimeEnv, table: TypeTable, exception_aware: bool = False,
                       max_states: int = DEFAULT_MAX_STATES) -> CheckReport:
    graph = TypeGraph()
    reach = reachable(env0, table, exception_aware, max_states, graph)
    safety = check_safety_env(env0, table, exception_aware, max_states, reach)
    if not safety.passed:
        safety.check = "progress"
        return safety
    found = progress_violation_in(reach, graph)
    if found is None:
        return CheckReport("progress", "pass", initial=env0, states_explored=len(reach))
    sid, v = found
    return CheckReport("progress", "fail", v, reach.witness(sid), reach.states[sid], env0, len(reach))


def check_progress(p: Protocol, table: TypeTable | None = None,
                   max_states: int = DEFAULT_MAX_STATES) -> CheckReport:
    """Progress of ``{s[q, ∅] : ty(q)}``; safety is checked first and reported if it fails."""
    env0 = initial_env(p)
    if env0 is None:
        return _no_initiator("progress")
    report = check_progress_env(env0, _table_for(p, table), max_states=max_states)
    report.initiator = unique_initiator(p)
    return report


# ---------------------------------------------------------------------------
# Well-formedness
# ---------------------------------------------------------------------------


@dataclass
class WellFormedness:
    protocol: str
    unique_initiator: str | None
    safety: CheckReport
    progress: CheckReport

    @property
    def passed(self) -> bool:
        return self.unique_initiator is not None and self.safety.passed

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "protocol": self.protocol,
            "initiator": self.unique_initiator,
            "wellFormed": self.passed,
            "safety": self.safety.to_json(),
            "progress": self.progress.to_json(),
        }


def well_formed_protocol(p: Protocol, table: TypeTable | None = None,
                         max_states: int = DEFAULT_MAX_STATES) -> WellFormedness:
    return WellFormedness(p.name, unique_initiator(p), check_safety(p, table, max_states),
                          check_progress(p, table, max_states))


@dataclass(frozen=True)
class ProgramDiagnostic:
    clause: int
    message: str
    line: int | None = None
    column: int | None = None
    kind: str | None = None

    def to_json(self) -> dict:
        return {"clause": self.clause, "kind": self.kind, "message": self.message,
                "line": self.line, "column": self.column}


@dataclass
class ProgramReport:
    diagnostics: list[ProgramDiagnostic]
    protocols: list[WellFormedness]

    @property
    def passed(self) -> bool:
        return not self.diagnostics

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "check": "program",
            "verdict": self.verdict,
            "diagnostics": [d.to_json() for d in self.diagnostics],
            "protocols": [w.to_json() for w in self.protocols],
        }


def well_formed_program(prog: ast.Program, max_states: int = DEFAULT_MAX_STATES) -> ProgramReport:
    diags: list[ProgramDiagnostic] = []
    try:
        table = prog.types()
    except ValueError as exc:
        return ProgramReport([ProgramDiagnostic(2, str(exc))], [])

    # clause 1
    for d in prog.definitions:
        if table.role_for_type(d.declared) is None:
            diags.append(ProgramDiagnostic(
                1, f"actor {d.cls} follows a session type that is not ty(p) for any role",
                d.span.line if d.span else None, d.span.column if d.span else None, "UnknownRole"))
            continue
        try:
            type_definition(d, prog)
        except TypingError as exc:
            diags.append(ProgramDiagnostic(1, f"actor {d.cls}: {exc.message}",
                                           exc.line, exc.column, exc.kind))
    # clause 2
    reports = []
    for p in prog.protocols:
        wf = well_formed_protocol(p, table, max_states)
        reports.append(wf)
        if not wf.passed:
            reason = ("no unique initiator" if wf.unique_initiator is None
                      else wf.safety.violation.message if wf.safety.violation else "unsafe")
            diags.append(ProgramDiagnostic(2, f"protocol {p.name} is not well-formed: {reason}",
                                           kind="IllFormedProtocol"))
    # clause 3
    if any(isinstance(n, ast.COMMUNICATION_TYPES) for n in boot_nodes(prog.boot)):
        diags.append(ProgramDiagnostic(3, "the boot clause performs communication actions",
                                       kind="BootCommunicates"))
    else:
        try:
            _, post = type_computation(TypeContext(), ast.END, ast.END, prog.boot, prog)
            if not is_end_post(post):
                diags.append(ProgramDiagnostic(3, "the boot clause does not end at end",
                                               kind="LeftoverSession"))
        except TypingError as exc:
            diags.append(ProgramDiagnostic(3, f"boot: {exc.message}", exc.line, exc.column, exc.kind))
    return ProgramReport(diags, reports)

