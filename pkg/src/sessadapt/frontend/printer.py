"""Pretty-printer producing text that :mod:`.parser` reads back to an equal node."""

from __future__ import annotations

from functools import singledispatch

from .. import syntax as ast
from ..syntax import (
    Action, ActionKind, BaseType, Choice, Disconnect, End, GChoice, GEnd, GRec, GVar,
    GlobalAction, GlobalKind, GlobalProtocol, PidType, Protocol, Rec, TypeTable, UnitType, Var,
)
from .lexer import quote


def payload_str(p: ast.PayloadType) -> str:
    if isinstance(p, UnitType):
        return ""
    if isinstance(p, BaseType):
        return p.name
    return f"pid({local_str(p.declared)})"


def action_str(a: Action) -> str:
    if a.kind is ActionKind.WAIT:
        return f"wait {a.peer}"
    return f"{a.peer}{a.kind.value}{a.label}({payload_str(a.payload)})"


def _cont_str(s: ast.LocalType) -> str:
    if isinstance(s, Choice) and len(s.branches) > 1:
        return f"({local_str(s)})"
    return local_str(s)


def local_str(s: ast.LocalType) -> str:
    if isinstance(s, End):
        return "end"
    if isinstance(s, Var):
        return s.name
    if isinstance(s, Disconnect):
        return f"disconnect {s.peer}"
    if isinstance(s, Rec):
        return f"rec {s.var} {{ {local_str(s.body)} }}"
    return " + ".join(f"{action_str(a)}.{_cont_str(c)}" for a, c in s.branches)


def global_action_str(a: GlobalAction) -> str:
    if a.kind is GlobalKind.DISCONNECT:
        return f"{a.src} disconnects {a.dst}"
    return f"{a.src} {a.kind.value} {a.dst}: {a.label}({payload_str(a.payload)})"


def _gcont_str(g: ast.GlobalType) -> str:
    if isinstance(g, GChoice) and len(g.branches) > 1:
        return f"({global_str(g)})"
    return global_str(g)


def global_str(g: ast.GlobalType) -> str:
    if isinstance(g, GEnd):
        return "end"
    if isinstance(g, GVar):
        return g.name
    if isinstance(g, GRec):
        return f"rec {g.var} {{ {global_str(g.body)} }}"
    return " + ".join(f"{global_action_str(a)}.{_gcont_str(c)}" for a, c in g.branches)


def protocol_str(p: Protocol) -> str:
    lines = [f"protocol {p.name} {{"]
    for role, s in p.entries:
        lines.append(f"  role {role}: {local_str(s)};")
    lines.append("}")
    return "\n".join(lines)


def global_protocol_str(gp: GlobalProtocol) -> str:
    header = ""
    if gp.roles:
        header = "(" + ", ".join(f"role {r}" for r in gp.roles) + ")"
    return f"global protocol {gp.name}{header} {{\n  {global_str(gp.gtype)}\n}}"


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


def value_str(v: ast.Value) -> str:
    if isinstance(v, ast.VVar):
        return v.name
    if isinstance(v, ast.VUnit):
        return "()"
    if isinstance(v, ast.VActor):
        return f"@{v.name}"
    if isinstance(v.value, bool):
        return "true" if v.value else "false"
    if isinstance(v.value, int):
        return str(v.value)
    return quote(v.value)


def _msg(label: str, v: ast.Value) -> str:
    if isinstance(v, ast.VUnit):
        return f"{label}()"
    return f"{label}({value_str(v)})"


class _TermPrinter:
    def __init__(self, table: TypeTable | None):
        self.table = table

    def stype(self, s: ast.LocalType) -> str:
        if self.table is not None:
            role = self.table.role_for_type(s)
            if role is not None:
                return f"ty({role})"
        return local_str(s)

    def comp(self, m: ast.Behaviour, ind: int) -> str:
        pad = " " * ind
        if isinstance(m, ast.Stop):
            return "stop"
        if isinstance(m, ast.Let):
            bound = self.comp(m.bound, ind)
            if isinstance(m.bound, ast.Let):
                bound = "{ " + self.comp(m.bound, ind + 2) + " }"
            body = self.comp(m.body, ind)
            if m.binder == ast.SEQ_BINDER:
                return f"{bound};\n{pad}{body}"
            return f"let {m.binder} = {bound} in\n{pad}{body}"
        if isinstance(m, ast.Try):
            return (f"try {self.comp(m.action, ind)} catch {{\n{pad}  "
                    f"{self.comp(m.handler, ind + 2)}\n{pad}}}")
        if isinstance(m, ast.Loop):
            return f"loop {m.label} {{\n{pad}  {self.comp(m.body, ind + 2)}\n{pad}}}"
        return self.action(m, ind)

    def cases(self, cases: tuple[ast.Case, ...], ind: int) -> str:
        pad = " " * ind
        parts = []
        for i, c in enumerate(cases):
            lead = "  " if i == 0 else "| "
            parts.append(f"{pad}{lead}{c.label}({c.binder}) -> {self.comp(c.body, ind + 4)}")
        return "{\n" + "\n".join(parts) + f"\n{pad}}}"

    def action(self, m: ast.ActionTerm, ind: int) -> str:
        if isinstance(m, ast.Return):
            return f"return {value_str(m.value)}"
        if isinstance(m, ast.Continue):
            return f"continue {m.label}"
        if isinstance(m, ast.Raise):
            return "raise"
        if isinstance(m, ast.New):
            return f"new {m.cls}"
        if isinstance(m, ast.SelfRef):
            return "self"
        if isinstance(m, ast.Replace):
            if isinstance(m.behaviour, ast.Stop):
                return f"replace {value_str(m.target)} with stop"
            pad = " " * ind
            return (f"replace {value_str(m.target)} with {{\n{pad}  "
                    f"{self.comp(m.behaviour, ind + 2)}\n{pad}}}")
        if isinstance(m, ast.Discover):
            return f"discover {self.stype(m.stype)}"
        if isinstance(m, ast.ConnectTo):
            return f"connect {_msg(m.label, m.payload)} to {value_str(m.target)} as {m.role}"
        if isinstance(m, ast.AcceptFrom):
            return f"accept from {m.role} {self.cases(m.cases, ind)}"
        if isinstance(m, ast.SendTo):
            return f"send {_msg(m.label, m.payload)} to {m.role}"
        if isinstance(m, ast.RecvFrom):
            return f"receive from {m.role} {self.cases(m.cases, ind)}"
        if isinstance(m, ast.WaitFor):
            return f"wait {m.role}"
        if isinstance(m, ast.DisconnectFrom):
            return f"disconnect from {m.role}"
        raise TypeError(f"not a term: {m!r}")


def computation_str(m: ast.Behaviour, table: TypeTable | None = None, indent: int = 0) -> str:
    return _TermPrinter(table).comp(m, indent)


def program_str(prog: ast.Program) -> str:
    table = prog.types()
    tp = _TermPrinter(table)
    chunks = [protocol_str(p) for p in prog.protocols]
    for d in prog.definitions:
        chunks.append(f"actor {d.cls} follows {tp.stype(d.declared)} {{\n  {tp.comp(d.body, 2)}\n}}")
    chunks.append(f"boot {{\n  {tp.comp(prog.boot, 2)}\n}}")
    return "\n\n".join(chunks) + "\n"


@singledispatch
def to_text(node) -> str:
    """Print any syntax node."""
    if isinstance(node, ast.ACTION_TYPES + (ast.Let, ast.Try, ast.Loop, ast.Stop)):
        return computation_str(node)
    if isinstance(node, (ast.VVar, ast.VUnit, ast.VLit, ast.VActor)):
        return value_str(node)
    if isinstance(node, (UnitType, BaseType)):
        return payload_str(node) or "()"
    raise TypeError(f"cannot print {type(node).__name__}")


for _cls in (Choice, Rec, Var, Disconnect, End):
    to_text.register(_cls)(local_str)
for _cls in (GChoice, GRec, GVar, GEnd):
    to_text.register(_cls)(global_str)
to_text.register(Protocol)(protocol_str)
to_text.register(GlobalProtocol)(global_protocol_str)
to_text.register(ast.Program)(program_str)
to_text.register(Action)(action_str)
to_text.register(GlobalAction)(global_action_str)
to_text.register(PidType)(lambda p: payload_str(p))


def protocol_file_str(decls) -> str:
    return "\n\n".join(to_text(d) for d in decls) + "\n"
