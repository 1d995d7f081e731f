"""The term typing judgement ``Γ ⊢_T ⟨S⟩ M : A ⟨S'⟩`` and behaviour/definition typing.

``Continue`` and ``Raise`` never return, so their result and postcondition are
the polymorphic :data:`BOTTOM`, which joins with whatever a sibling branch
produces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from . import syntax as ast
from .frontend.printer import local_str, payload_str
from .syntax import (
    END, UNIT, ActionKind, BaseType, Choice, Disconnect, End, LocalType, PayloadType,
    PidType, TypeTable, payload_equal, session_equal, type_equal, unfold_head,
)

ERROR_KINDS = ("UnboundVar", "LabelNotInChoice", "PayloadMismatch", "RoleTypeMismatch",
               "BranchPostDisagree", "LoopPreMismatch", "LeftoverSession", "HandlerShapeMismatch")


class _Bottom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "BOTTOM"


BOTTOM = _Bottom()

Result = Union[PayloadType, _Bottom]
Post = Union[LocalType, _Bottom]


class TypingError(Exception):
    def __init__(self, kind: str, message: str, node: ast.Node | None = None):
        assert kind in ERROR_KINDS, kind
        self.kind = kind
        self.message = message
        self.span = getattr(node, "span", None)
        super().__init__(f"{kind}: {message}")

    @property
    def line(self) -> int | None:
        return self.span.line if self.span else None

    @property
    def column(self) -> int | None:
        return self.span.column if self.span else None

    def to_json(self) -> dict:
        return {"code": self.kind, "message": self.message, "line": self.line, "column": self.column}


@dataclass(frozen=True)
class TypeContext:
    """``Γ``: value variables, loop labels ``l : S`` and runtime actor names."""

    vars: Mapping[str, PayloadType] = field(default_factory=dict)
    loops: Mapping[str, LocalType] = field(default_factory=dict)
    actors: Mapping[str, LocalType] = field(default_factory=dict)

    def bind(self, name: str, t: PayloadType) -> "TypeContext":
        if name == ast.SEQ_BINDER:
            return self
        return TypeContext({**self.vars, name: t}, self.loops, self.actors)

    def bind_loop(self, label: str, s: LocalType) -> "TypeContext":
        return TypeContext(self.vars, {**self.loops, label: s}, self.actors)

    def without_loops(self) -> "TypeContext":
        return TypeContext(self.vars, {}, self.actors)


@dataclass(frozen=True)
class Signature:
    """What the judgement needs from the program: ``ty(p)`` and each class's declared type."""

    table: TypeTable
    classes: Mapping[str, LocalType]

    @classmethod
    def of(cls, prog: "ast.Program | Signature") -> "Signature":
        if isinstance(prog, Signature):
            return prog
        return cls(prog.types(), {d.cls: d.declared for d in prog.definitions})


def is_end_post(post: Post) -> bool:
    return post is BOTTOM or isinstance(unfold_head(post), End)


def _show(t) -> str:
    if t is BOTTOM:
        return "⊥"
    if isinstance(t, (ast.UnitType, BaseType, PidType)):
        return payload_str(t) or "()"
    return local_str(t)


def _same_result(a: Result, b: Result) -> bool:
    return a is BOTTOM or b is BOTTOM or payload_equal(a, b)


def _same_post(a: Post, b: Post) -> bool:
    return a is BOTTOM or b is BOTTOM or session_equal(a, b)


def _join(a: Result, b: Result) -> Result:
    return b if a is BOTTOM else a


def type_value(ctx: TypeContext, v: ast.Value) -> PayloadType:
    if isinstance(v, ast.VUnit):
        return UNIT
    if isinstance(v, ast.VLit):
        return BaseType(v.base)
    if isinstance(v, ast.VVar):
        if v.name not in ctx.vars:
            raise TypingError("UnboundVar", f"unbound variable {v.name}", v)
        return ctx.vars[v.name]
    if isinstance(v, ast.VActor):
        if v.name not in ctx.actors:
            raise TypingError("UnboundVar", f"unknown actor {v.name}", v)
        return PidType(ctx.actors[v.name])
    raise TypeError(f"not a value: {v!r}")


def _choice(pre: LocalType) -> Choice | None:
    head = unfold_head(pre)
    return head if isinstance(head, Choice) else None


def _find_branch(pre: LocalType, kind: ActionKind, role: str, label: str, node) -> tuple[ast.Action, LocalType]:
    c = _choice(pre)
    if c is not None:
        for a, cont in c.branches:
            if a.kind is kind and a.peer == role and a.label == label:
                return a, cont
    raise TypingError("LabelNotInChoice",
                      f"{role}{kind.value}{label} is not offered by the session type {local_str(pre)}", node)


def _type_cases(ctx: TypeContext, static: LocalType, pre: LocalType, kind: ActionKind,
                role: str, cases: tuple[ast.Case, ...], sig: Signature, node) -> tuple[Result, Post]:
    c = _choice(pre)
    if c is None or not all(a.kind is kind and a.peer == role for a in c.actions):
        raise TypingError("LabelNotInChoice",
                          f"expected a choice of {role}{kind.value} actions, session type is {local_str(pre)}",
                          node)
    offered = {a.label: (a, cont) for a, cont in c.branches}
    handled = [case.label for case in cases]
    if set(handled) != set(offered):
        missing = sorted(set(offered) - set(handled))
        extra = sorted(set(handled) - set(offered))
        bits = []
        if missing:
            bits.append(f"missing {', '.join(missing)}")
        if extra:
            bits.append(f"unexpected {', '.join(extra)}")
        raise TypingError("LabelNotInChoice", f"cases do not match the choice: {'; '.join(bits)}", node)
    result: Result = BOTTOM
    post: Post = BOTTOM
    for case in cases:
        a, cont = offered[case.label]
        r, p = type_computation(ctx.bind(case.binder, a.payload), static, cont, case.body, sig)
        if not _same_result(result, r) or not _same_post(post, p):
            raise TypingError("BranchPostDisagree",
                              f"case {case.label} ends with {_show(r)} ⟨{_show(p)}⟩, other cases with "
                              f"{_show(result)} ⟨{_show(post)}⟩", case)
        result = _join(result, r)
        post = _join(post, p)
    return result, post


def type_computation(ctx: TypeContext, static: LocalType, pre: LocalType, m: ast.Computation,
                     sig: "Signature | ast.Program") -> tuple[Result, Post]:
    """Returns ``(A, S')``; raises :class:`TypingError` when no rule applies."""
    sig = Signature.of(sig)
    if isinstance(m, ast.Let):
        a, mid = type_computation(ctx, static, pre, m.bound, sig)
        if a is BOTTOM or mid is BOTTOM:
            return BOTTOM, BOTTOM
        return type_computation(ctx.bind(m.binder, a), static, mid, m.body, sig)
    if isinstance(m, ast.Return):
        return type_value(ctx, m.value), pre
    if isinstance(m, ast.Loop):
        return type_computation(ctx.bind_loop(m.label, pre), static, pre, m.body, sig)
    if isinstance(m, ast.Continue):
        if m.label not in ctx.loops:
            raise TypingError("UnboundVar", f"unbound loop label {m.label}", m)
        if not session_equal(pre, ctx.loops[m.label]):
            raise TypingError("LoopPreMismatch",
                              f"continue {m.label} at {local_str(pre)}, loop entered at "
                              f"{local_str(ctx.loops[m.label])}", m)
        return BOTTOM, BOTTOM
    if isinstance(m, ast.Raise):
        return BOTTOM, BOTTOM
    if isinstance(m, ast.New):
        if m.cls not in sig.classes:
            raise TypingError("UnboundVar", f"unknown actor class {m.cls}", m)
        return PidType(sig.classes[m.cls]), pre
    if isinstance(m, ast.SelfRef):
        return PidType(static), pre
    if isinstance(m, ast.Discover):
        return PidType(m.stype), pre
    if isinstance(m, ast.Replace):
        target = type_value(ctx, m.target)
        if not isinstance(target, PidType):
            raise TypingError("RoleTypeMismatch", f"replace expects a pid, got {_show(target)}", m)
        type_behaviour(ctx.without_loops(), target.declared, m.behaviour, sig)
        return UNIT, pre
    if isinstance(m, ast.Try):
        r1, p1 = type_computation(ctx, static, pre, m.action, sig)
        r2, p2 = type_computation(ctx, static, pre, m.handler, sig)
        if not _same_result(r1, r2) or not _same_post(p1, p2):
            raise TypingError("HandlerShapeMismatch",
                              f"try arm gives {_show(r1)} ⟨{_show(p1)}⟩ but the handler gives "
                              f"{_show(r2)} ⟨{_show(p2)}⟩", m)
        return _join(r1, r2), _join(p1, p2)
    if isinstance(m, ast.ConnectTo):
        a, cont = _find_branch(pre, ActionKind.CONNECT, m.role, m.label, m)
        _check_payload(ctx, m.payload, a.payload, m)
        target = type_value(ctx, m.target)
        expected = sig.table.get(m.role)
        if expected is None:
            raise TypingError("RoleTypeMismatch", f"role {m.role} belongs to no protocol", m)
        if not isinstance(target, PidType) or not type_equal(target.declared, expected):
            raise TypingError("RoleTypeMismatch",
                              f"connect target has type {_show(target)}, expected pid(ty({m.role}))", m)
        return UNIT, cont
    if isinstance(m, ast.SendTo):
        a, cont = _find_branch(pre, ActionKind.SEND, m.role, m.label, m)
        _check_payload(ctx, m.payload, a.payload, m)
        return UNIT, cont
    if isinstance(m, ast.AcceptFrom):
        return _type_cases(ctx, static, pre, ActionKind.ACCEPT, m.role, m.cases, sig, m)
    if isinstance(m, ast.RecvFrom):
        return _type_cases(ctx, static, pre, ActionKind.RECV, m.role, m.cases, sig, m)
    if isinstance(m, ast.WaitFor):
        c = _choice(pre)
        if c is not None and len(c.branches) == 1:
            (a, cont), = c.branches
            if a.kind is ActionKind.WAIT and a.peer == m.role:
                return UNIT, cont
        raise TypingError("LabelNotInChoice",
                          f"wait {m.role} needs a session type wait {m.role}.S, got {local_str(pre)}", m)
    if isinstance(m, ast.DisconnectFrom):
        head = unfold_head(pre)
        if isinstance(head, Disconnect) and head.peer == m.role:
            return UNIT, END
        raise TypingError("LabelNotInChoice",
                          f"disconnect from {m.role} needs session type disconnect {m.role}, "
                          f"got {local_str(pre)}", m)
    raise TypeError(f"not a computation: {m!r}")


def _check_payload(ctx: TypeContext, v: ast.Value, expected: PayloadType, node) -> None:
    got = type_value(ctx, v)
    if not payload_equal(got, expected):
        raise TypingError("PayloadMismatch", f"payload has type {_show(got)}, expected {_show(expected)}", node)


def type_behaviour(ctx: TypeContext, static: LocalType, behaviour: ast.Behaviour,
                   sig: "Signature | ast.Program") -> None:
    if isinstance(behaviour, ast.Stop):
        return
    _, post = type_computation(ctx, static, static, behaviour, sig)
    if not is_end_post(post):
        raise TypingError("LeftoverSession",
                          f"behaviour finishes with session type {local_str(post)} left over", behaviour)


def type_definition(d: ast.Definition, prog: "ast.Program | Signature") -> tuple[Result, Post]:
    sig = Signature.of(prog)
    result, post = type_computation(TypeContext(), d.declared, d.declared, d.body, sig)
    if not is_end_post(post):
        raise TypingError("LeftoverSession",
                          f"body of {d.cls} finishes with session type {local_str(post)} left over", d.body)
    return result, post


def type_program(prog: ast.Program) -> list[TypingError]:
    sig = Signature.of(prog)
    errors: list[TypingError] = []
    for d in prog.definitions:
        try:
            type_definition(d, sig)
        except TypingError as exc:
            errors.append(exc)
    try:
        _, post = type_computation(TypeContext(), END, END, prog.boot, sig)
        if not is_end_post(post):
            errors.append(TypingError("LeftoverSession", "boot clause does not finish at end", prog.boot))
    except TypingError as exc:
        errors.append(exc)
    return errors
