"""Evaluation contexts, plugging and substitution on computation terms."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .. import syntax as ast


def make_try(action: ast.Computation, handler: ast.Computation, span=None) -> ast.Try:
    """Builds ``try M catch N`` without the parser's single-action check.

    Unrolling a loop can place a loop body under a handler at runtime
    (``try continue l catch N``), which the static syntax never produces.
    """
    t = object.__new__(ast.Try)
    object.__setattr__(t, "action", action)
    object.__setattr__(t, "handler", handler)
    object.__setattr__(t, "span", span)
    return t


@dataclass(frozen=True)
class Context:
    """``E = let x1 = (… let xn = F …) in …`` with an optional innermost handler frame ``F``."""

    frames: tuple[tuple[str, ast.Computation], ...]
    handler: ast.Computation | None

    @property
    def pure(self) -> bool:
        return self.handler is None

    def plug(self, m: ast.Computation, keep_handler: bool = True) -> ast.Computation:
        if keep_handler and self.handler is not None:
            m = make_try(m, self.handler)
        for binder, body in reversed(self.frames):
            m = ast.Let(binder, m, body)
        return m


def decompose(m: ast.Computation) -> tuple[Context, ast.Computation]:
    frames = []
    while isinstance(m, ast.Let):
        frames.append((m.binder, m.body))
        m = m.bound
    handler = None
    if isinstance(m, ast.Try):
        handler = m.handler
        m = m.action
    return Context(tuple(frames), handler), m


def subst_value(m, x: str, v: ast.Value):
    """``M{V/x}``, respecting let and case binders; descends into replace behaviours."""
    if isinstance(m, ast.VVar):
        return v if m.name == x else m
    if isinstance(m, (ast.VUnit, ast.VLit, ast.VActor)):
        return m
    if isinstance(m, ast.Let):
        body = m.body if m.binder == x else subst_value(m.body, x, v)
        return replace(m, bound=subst_value(m.bound, x, v), body=body)
    if isinstance(m, ast.Try):
        return make_try(subst_value(m.action, x, v), subst_value(m.handler, x, v), m.span)
    if isinstance(m, ast.Loop):
        return replace(m, body=subst_value(m.body, x, v))
    if isinstance(m, (ast.AcceptFrom, ast.RecvFrom)):
        return replace(m, cases=tuple(_subst_case(c, x, v) for c in m.cases))
    if isinstance(m, ast.Return):
        return replace(m, value=subst_value(m.value, x, v))
    if isinstance(m, ast.Replace):
        behaviour = m.behaviour if isinstance(m.behaviour, ast.Stop) else subst_value(m.behaviour, x, v)
        return replace(m, target=subst_value(m.target, x, v), behaviour=behaviour)
    if isinstance(m, ast.ConnectTo):
        return replace(m, payload=subst_value(m.payload, x, v), target=subst_value(m.target, x, v))
    if isinstance(m, ast.SendTo):
        return replace(m, payload=subst_value(m.payload, x, v))
    return m


def _subst_case(c: ast.Case, x: str, v: ast.Value) -> ast.Case:
    if c.binder == x:
        return c
    return replace(c, body=subst_value(c.body, x, v))


def subst_continue(m, label: str, loop: ast.Loop):
    """``M{loop l M / continue l}``; inner loops with the same label shadow it."""
    if isinstance(m, ast.Continue):
        return loop if m.label == label else m
    if isinstance(m, ast.Let):
        return replace(m, bound=subst_continue(m.bound, label, loop),
                       body=subst_continue(m.body, label, loop))
    if isinstance(m, ast.Try):
        return make_try(subst_continue(m.action, label, loop),
                        subst_continue(m.handler, label, loop), m.span)
    if isinstance(m, ast.Loop):
        return m if m.label == label else replace(m, body=subst_continue(m.body, label, loop))
    if isinstance(m, (ast.AcceptFrom, ast.RecvFrom)):
        return replace(m, cases=tuple(replace(c, body=subst_continue(c.body, label, loop))
                                      for c in m.cases))
    return m


def term_step(m: ast.Computation) -> tuple[str, ast.Computation] | None:
    """One ``-->_M`` step under an evaluation context, with the name of the rule used."""
    ctx, focus = decompose(m)
    if isinstance(focus, ast.Loop):
        return "E-Rec", ctx.plug(subst_continue(focus.body, focus.label, focus))
    if ctx.handler is not None:
        if isinstance(focus, ast.Return):
            return "E-TryReturn", ctx.plug(focus, keep_handler=False)
        if isinstance(focus, ast.Raise):
            return "E-TryRaise", ctx.plug(ctx.handler, keep_handler=False)
        if isinstance(focus, ast.Let) and isinstance(focus.bound, ast.Return):
            return "E-Let", ctx.plug(subst_value(focus.body, focus.binder, focus.bound.value))
        return None
    if isinstance(focus, ast.Return) and ctx.frames:
        binder, body = ctx.frames[-1]
        inner = Context(ctx.frames[:-1], None)
        if binder != ast.SEQ_BINDER:
            body = subst_value(body, binder, focus.value)
        return "E-Let", inner.plug(body)
    return None


def is_value_term(m: ast.Computation) -> bool:
    return isinstance(m, ast.Return)


def is_pure_raise(m: ast.Computation) -> bool:
    ctx, focus = decompose(m)
    return ctx.pure and isinstance(focus, ast.Raise)
