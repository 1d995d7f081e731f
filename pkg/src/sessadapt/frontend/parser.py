"""Recursive-descent parser for protocol (``.mpst``) and program (``.act``) files.

The grammar is documented in ``docs/grammar.ebnf``.  All failures surface as
:class:`ParseError` carrying spanned diagnostics.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Iterable

from .. import syntax as ast
from ..syntax import (
    BASE_TYPES, END, GEND, UNIT, Action, ActionKind, BaseType, Choice, Disconnect,
    GChoice, GRec, GVar, GlobalAction, GlobalKind, GlobalProtocol, LocalType, PidType,
    Protocol, Rec, Span, TypeTable, Var,
)
from .diagnostics import Diagnostic, ParseError
from .lexer import Token, tokenize

_ACTION_OPS = {"!": ActionKind.SEND, "!!": ActionKind.CONNECT, "?": ActionKind.RECV, "??": ActionKind.ACCEPT}


@dataclass(frozen=True)
class ProtocolFile:
    declarations: tuple[GlobalProtocol | Protocol, ...]

    @property
    def globals(self) -> tuple[GlobalProtocol, ...]:
        return tuple(d for d in self.declarations if isinstance(d, GlobalProtocol))

    @property
    def protocols(self) -> tuple[Protocol, ...]:
        return tuple(d for d in self.declarations if isinstance(d, Protocol))

    def global_protocol(self, name: str | None = None) -> GlobalProtocol:
        for g in self.globals:
            if name is None or g.name == name:
                return g
        raise KeyError(name)

    def protocol(self, name: str | None = None) -> Protocol:
        for p in self.protocols:
            if name is None or p.name == name:
                return p
        raise KeyError(name)


class _Parser:
    def __init__(self, text: str, *, program: bool = False, base_dir: str | None = None,
                 loader: Callable[[str], str] | None = None):
        self.toks = tokenize(text)
        self.pos = 0
        self.program = program
        self.base_dir = base_dir
        self.loader = loader
        self.protocols: list[Protocol] = []
        self.globals: list[GlobalProtocol] = []
        self.role_origin: dict[str, Span] = {}
        self.aliases: dict[str, LocalType] = {}
        self.table: TypeTable | None = None
        self.diagnostics: list[Diagnostic] = []

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, span: Span | None = None) -> ParseError:
        return ParseError([Diagnostic.at(span or self.tok.span, message)])

    def describe(self, t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def at_op(self, text: str) -> bool:
        return self.tok.is_("op", text)

    def at_kw(self, text: str) -> bool:
        return self.tok.is_("kw", text)

    def accept_op(self, text: str) -> bool:
        if self.at_op(text):
            self.advance()
            return True
        return False

    def expect_op(self, text: str) -> Token:
        if not self.at_op(text):
            raise self.error(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def expect_kw(self, text: str) -> Token:
        if not self.at_kw(text):
            raise self.error(f"expected keyword {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            extra = " (reserved word)" if self.tok.kind == "kw" else ""
            raise self.error(f"expected {what}, found {self.describe(self.tok)}{extra}")
        return self.advance()

    # -- payloads and local types ------------------------------------------

    def payload(self) -> ast.PayloadType:
        """Parses the inside of ``l( ... )`` up to but excluding ``)``."""
        if self.at_op(")"):
            return UNIT
        if self.tok.kind == "int" and self.tok.text == "1":
            self.advance()
            return UNIT
        if self.at_op("("):
            self.advance()
            self.expect_op(")")
            return UNIT
        if self.at_kw("pid"):
            self.advance()
            self.expect_op("(")
            declared = self.closed_ltype()
            self.expect_op(")")
            return PidType(declared)
        t = self.expect_ident("payload type")
        if t.text in BASE_TYPES:
            return BaseType(t.text)
        if t.text in self.aliases:
            raise self.error(f"payload {t.text!r} names a session type; write pid({t.text})", t.span)
        raise self.error(f"unknown payload type {t.text!r}", t.span)

    def closed_ltype(self) -> LocalType:
        start = self.tok.span
        s = self.ltype(frozenset())
        if not ast.is_closed(s):
            raise self.error(f"unbound recursion variable {sorted(ast.free_vars(s))[0]}", start)
        return s

    def ltype(self, env: frozenset[str]) -> LocalType:
        start = self.tok.span
        alts = [self.lseq(env)]
        while self.accept_op("+"):
            alt_span = self.tok.span
            alts.append(self.lseq(env))
            if not isinstance(alts[-1], Choice):
                raise self.error("choice alternatives must begin with an action", alt_span)
        if len(alts) == 1:
            return alts[0]
        if not isinstance(alts[0], Choice):
            raise self.error("choice alternatives must begin with an action", start)
        branches: list = []
        for alt in alts:
            branches.extend(alt.branches)
        keys = [a.key for a, _ in branches]
        if len(set(keys)) != len(keys):
            raise self.error("choice repeats an action (same kind, role and label)", start)
        return Choice(tuple(branches))

    def lseq(self, env: frozenset[str]) -> LocalType:
        t = self.tok
        if self.accept_op("("):
            inner = self.ltype(env)
            self.expect_op(")")
            return inner
        if t.is_("kw", "end"):
            self.advance()
            return END
        if t.is_("kw", "rec"):
            self.advance()
            var = self.expect_ident("recursion variable").text
            self.expect_op("{")
            body = self.ltype(env | {var})
            self.expect_op("}")
            rec = Rec(var, body)
            if not ast.is_guarded(rec):
                raise self.error(f"unguarded recursion on {var}", t.span)
            return rec
        if t.is_("kw", "disconnect"):
            self.advance()
            peer = self.expect_ident("role").text
            if self.at_op("."):
                raise self.error("disconnect has no continuation")
            return Disconnect(peer)
        if t.is_("kw", "wait"):
            self.advance()
            peer = self.expect_ident("role").text
            self.expect_op(".")
            return ast.prefix(ast.wait(peer), self.lseq(env))
        if t.is_("kw", "ty"):
            return self.ty_ref()
        if t.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text in _ACTION_OPS:
                self.advance()
                kind = _ACTION_OPS[self.advance().text]
                label = self.expect_ident("label").text
                self.expect_op("(")
                payload = self.payload()
                self.expect_op(")")
                self.expect_op(".")
                return ast.prefix(Action(kind, t.text, label, payload), self.lseq(env))
            self.advance()
            if t.text in env:
                return Var(t.text)
            if t.text in self.aliases:
                return self.aliases[t.text]
            raise self.error(f"unbound type variable {t.text!r}", t.span)
        raise self.error(f"expected a session type, found {self.describe(t)}")

    def ty_ref(self) -> LocalType:
        self.expect_kw("ty")
        self.expect_op("(")
        role = self.expect_ident("role")
        self.expect_op(")")
        table = self.current_table()
        if role.text not in table:
            raise self.error(f"unknown role {role.text!r} in ty(...)", role.span)
        return table[role.text]

    def current_table(self) -> TypeTable:
        if self.table is None:
            self.table = TypeTable(self.protocols)
        return self.table

    # -- global types -------------------------------------------------------

    def gtype(self, env: frozenset[str]) -> ast.GlobalType:
        start = self.tok.span
        alts = [self.gseq(env)]
        while self.accept_op("+"):
            alt_span = self.tok.span
            alts.append(self.gseq(env))
            if not isinstance(alts[-1], GChoice):
                raise self.error("global choice alternatives must begin with an action", alt_span)
        if len(alts) == 1:
            return alts[0]
        if not isinstance(alts[0], GChoice):
            raise self.error("global choice alternatives must begin with an action", start)
        return GChoice(tuple(b for alt in alts for b in alt.branches))

    def gseq(self, env: frozenset[str]) -> ast.GlobalType:
        t = self.tok
        if self.accept_op("("):
            inner = self.gtype(env)
            self.expect_op(")")
            return inner
        if t.is_("kw", "end"):
            self.advance()
            return GEND
        if t.is_("kw", "rec"):
            self.advance()
            var = self.expect_ident("recursion variable").text
            self.expect_op("{")
            body = self.gtype(env | {var})
            self.expect_op("}")
            rec = GRec(var, body)
            if not ast.global_guarded(rec):
                raise self.error(f"unguarded recursion on {var}", t.span)
            return rec
        if t.kind == "ident":
            nxt = self.peek()
            if nxt.is_("op", "->") or nxt.is_("op", "->>") or nxt.is_("kw", "disconnects"):
                action = self.gaction()
                self.expect_op(".")
                return ast.gprefix(action, self.gseq(env))
            self.advance()
            if t.text in env:
                return GVar(t.text)
            raise self.error(f"unbound type variable {t.text!r}", t.span)
        raise self.error(f"expected a global type, found {self.describe(t)}")

    def gaction(self) -> GlobalAction:
        src = self.expect_ident("role")
        if self.at_kw("disconnects"):
            self.advance()
            dst = self.expect_ident("role")
            if src.text == dst.text:
                raise self.error(f"role {src.text} disconnects from itself", src.span)
            return ast.gdisconnect(src.text, dst.text)
        op = self.advance().text
        dst = self.expect_ident("role")
        if src.text == dst.text:
            raise self.error(f"role {src.text} communicates with itself", src.span)
        self.expect_op(":")
        label = self.expect_ident("label").text
        self.expect_op("(")
        payload = self.payload()
        self.expect_op(")")
        kind = GlobalKind.CONNECT if op == "->>" else GlobalKind.MSG
        return GlobalAction(kind, src.text, dst.text, label, payload)

    # -- declarations -------------------------------------------------------

    def protocol_decl(self) -> Protocol:
        kw = self.expect_kw("protocol")
        name = self.expect_ident("protocol name").text
        self.expect_op("{")
        entries: list[tuple[str, LocalType]] = []
        spans: dict[str, Span] = {}
        while not self.at_op("}"):
            self.expect_kw("role")
            role = self.expect_ident("role")
            if role.text in spans:
                raise self.error(f"duplicate role {role.text!r} in protocol {name}", role.span)
            if role.text in self.role_origin:
                raise self.error(f"role {role.text!r} is already declared by another protocol", role.span)
            self.expect_op(":")
            start = self.tok.span
            entries.append((role.text, self.closed_ltype()))
            spans[role.text] = start
            self.accept_op(";")
        self.expect_op("}")
        if not entries:
            raise self.error(f"protocol {name} declares no roles", kw.span)
        proto = Protocol(name, tuple(entries))
        self.validate_protocol(proto, spans)
        for role in proto.roles:
            self.role_origin[role] = spans[role]
        self.protocols.append(proto)
        self.table = None
        return proto

    def validate_protocol(self, proto: Protocol, spans: dict[str, Span]) -> None:
        diags = []
        for role, s in proto.entries:
            span = spans[role]
            if not ast.syntactically_valid(s):
                diags.append(Diagnostic.at(span, f"type of role {role} is not syntactically valid "
                                                 "(mixed choice or multi-sender input)"))
            if not ast.no_self_communication(s, role):
                diags.append(Diagnostic.at(span, f"role {role} communicates with itself"))
            unknown = sorted(ast.roles_of(s) - set(proto.roles))
            if unknown:
                diags.append(Diagnostic.at(span, f"type of role {role} mentions roles not in "
                                                 f"protocol {proto.name}: {', '.join(unknown)}"))
            if not ast.accepts_only_at_top(s):
                diags.append(Diagnostic.at(span, f"accept actions of role {role} must be its "
                                                 "single outermost construct"))
        if diags:
            raise ParseError(diags)

    def global_decl(self) -> GlobalProtocol:
        self.expect_kw("global")
        self.expect_kw("protocol")
        name = self.expect_ident("protocol name").text
        declared: list[str] = []
        if self.accept_op("("):
            while not self.at_op(")"):
                self.accept_kw_role()
                declared.append(self.expect_ident("role").text)
                if not self.accept_op(","):
                    break
            self.expect_op(")")
        self.expect_op("{")
        start = self.tok.span
        g = self.gtype(frozenset())
        self.expect_op("}")
        if len(set(declared)) != len(declared):
            raise self.error(f"duplicate role in the header of {name}", start)
        used = ast.global_roles(g)
        if declared and not used <= set(declared):
            extra = ", ".join(sorted(used - set(declared)))
            raise self.error(f"global protocol {name} uses undeclared roles: {extra}", start)
        gp = GlobalProtocol(name, g, tuple(declared) if declared else tuple(sorted(used)))
        self.globals.append(gp)
        return gp

    def accept_kw_role(self) -> None:
        if self.at_kw("role"):
            self.advance()

    def protocol_file(self) -> ProtocolFile:
        decls: list = []
        while self.tok.kind != "eof":
            if self.at_kw("protocol"):
                decls.append(self.protocol_decl())
            elif self.at_kw("global"):
                decls.append(self.global_decl())
            else:
                raise self.error(f"expected 'protocol' or 'global protocol', found {self.describe(self.tok)}")
        return ProtocolFile(tuple(decls))

    # -- programs -----------------------------------------------------------

    def program_file(self) -> ast.Program:
        definitions: list[ast.Definition] = []
        class_spans: dict[str, Span] = {}
        boot: ast.Computation | None = None
        while self.tok.kind != "eof":
            t = self.tok
            if t.is_("kw", "protocol"):
                self.protocol_decl()
            elif t.is_("kw", "global"):
                self.import_global(self.global_decl(), t.span)
            elif t.is_("kw", "import"):
                self.import_file()
            elif t.is_("kw", "type"):
                self.advance()
                name = self.expect_ident("type name")
                if name.text in self.aliases:
                    raise self.error(f"type {name.text!r} is defined twice", name.span)
                self.expect_op("=")
                self.aliases[name.text] = self.closed_ltype()
                self.accept_op(";")
            elif t.is_("kw", "actor"):
                self.advance()
                cls = self.expect_ident("actor class name")
                if cls.text in class_spans:
                    raise self.error(f"actor class {cls.text!r} is defined twice", cls.span)
                self.expect_kw("follows")
                declared = self.closed_ltype()
                self.expect_op("{")
                body = self.seq(frozenset(), frozenset())
                self.expect_op("}")
                class_spans[cls.text] = cls.span
                definitions.append(ast.Definition(cls.text, declared, body, span=cls.span))
            elif t.is_("kw", "boot"):
                self.advance()
                if boot is not None:
                    raise self.error("program has more than one boot clause", t.span)
                self.expect_op("{")
                boot = self.seq(frozenset(), frozenset())
                self.expect_op("}")
                for node in _boot_nodes(boot):
                    if isinstance(node, ast.COMMUNICATION_TYPES):
                        raise self.error("the boot clause may not perform communication actions",
                                         node.span)
            else:
                raise self.error(f"expected a declaration, found {self.describe(t)}")
        if boot is None:
            raise self.error("program has no boot clause")
        classes = set(class_spans)
        for node in _all_nodes([d.body for d in definitions] + [boot]):
            if isinstance(node, ast.New) and node.cls not in classes:
                raise self.error(f"unknown actor class {node.cls!r}", node.span)
        return ast.Program(tuple(definitions), tuple(self.protocols), boot)

    def import_global(self, gp: GlobalProtocol, span: Span) -> None:
        from ..projection import ProjectionError, project_protocol

        if any(p.name == gp.name for p in self.protocols):
            return
        try:
            proto = project_protocol(gp)
        except ProjectionError as exc:
            raise self.error(f"global protocol {gp.name} is not projectable: {exc}", span)
        for role in proto.roles:
            if role in self.role_origin:
                raise self.error(f"role {role!r} is already declared by another protocol", span)
            self.role_origin[role] = span
        self.protocols.append(proto)
        self.table = None

    def import_file(self) -> None:
        kw = self.expect_kw("import")
        if self.tok.kind != "str":
            raise self.error("expected a quoted file name after import")
        path_tok = self.advance()
        self.accept_op(";")
        path = path_tok.text
        if self.base_dir is not None and not os.path.isabs(path):
            path = os.path.join(self.base_dir, path)
        try:
            text = self.loader(path) if self.loader else _read(path)
        except OSError as exc:
            raise self.error(f"cannot import {path_tok.text!r}: {exc.strerror or exc}", path_tok.span)
        try:
            pf = parse_protocol(text)
        except ParseError as exc:
            inner = exc.diagnostics[0]
            raise self.error(f"in {path_tok.text}:{inner.line}:{inner.column}: {inner.message}",
                             path_tok.span)
        for proto in pf.protocols:
            for role in proto.roles:
                if role in self.role_origin:
                    raise self.error(f"role {role!r} is already declared by another protocol", kw.span)
                self.role_origin[role] = path_tok.span
            self.protocols.append(proto)
        self.table = None
        for gp in pf.globals:
            self.import_global(gp, path_tok.span)

    # -- computations -------------------------------------------------------

    def at_comp_end(self) -> bool:
        t = self.tok
        return t.kind == "eof" or t.is_("op", "}") or t.is_("op", "|") or t.is_("kw", "in")

    def seq(self, scope: frozenset[str], loops: frozenset[str]) -> ast.Computation:
        first = self.comp(scope, loops)
        if self.at_op(";"):
            semi = self.advance()
            if self.at_comp_end():
                return first
            rest = self.seq(scope, loops)
            return ast.Let(ast.SEQ_BINDER, first, rest, span=semi.span)
        return first

    def comp(self, scope: frozenset[str], loops: frozenset[str]) -> ast.Computation:
        t = self.tok
        if t.is_("kw", "let"):
            self.advance()
            binder = self.expect_ident("variable")
            self.expect_op("=")
            bound = self.seq(scope, loops)
            self.expect_kw("in")
            body = self.seq(scope | {binder.text}, loops)
            return ast.Let(binder.text, bound, body, span=t.span)
        if t.is_("op", "{"):
            self.advance()
            inner = self.seq(scope, loops)
            self.expect_op("}")
            return inner
        if t.is_("kw", "try"):
            self.advance()
            if self.at_kw("let") or self.at_kw("try") or self.at_kw("loop") or self.at_op("{"):
                raise self.error("try guards exactly one action")
            action = self.action(scope, loops)
            self.expect_kw("catch")
            self.expect_op("{")
            handler = self.seq(scope, loops)
            self.expect_op("}")
            return ast.Try(action, handler, span=t.span)
        if t.is_("kw", "loop"):
            self.advance()
            label = self.expect_ident("loop label").text
            self.expect_op("{")
            body = self.seq(scope, loops | {label})
            self.expect_op("}")
            return ast.Loop(label, body, span=t.span)
        return self.action(scope, loops)

    def value(self, scope: frozenset[str]) -> ast.Value:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return ast.VLit(int(t.text), span=t.span)
        if t.kind == "str":
            self.advance()
            return ast.VLit(t.text, span=t.span)
        if t.is_("kw", "true") or t.is_("kw", "false"):
            self.advance()
            return ast.VLit(t.text == "true", span=t.span)
        if t.is_("op", "("):
            self.advance()
            self.expect_op(")")
            return ast.VUnit(span=t.span)
        if t.kind == "ident":
            self.advance()
            if t.text not in scope:
                raise self.error(f"unbound variable {t.text!r}", t.span)
            return ast.VVar(t.text, span=t.span)
        raise self.error(f"expected a value, found {self.describe(t)}")

    def message_value(self, scope: frozenset[str]) -> ast.Value:
        """``l(v)`` payload; ``l()`` is shorthand for the unit value."""
        open_ = self.expect_op("(")
        if self.at_op(")"):
            self.advance()
            return ast.VUnit(span=open_.span)
        v = self.value(scope)
        self.expect_op(")")
        return v

    def cases(self, scope: frozenset[str], loops: frozenset[str]) -> tuple[ast.Case, ...]:
        self.expect_op("{")
        out: list[ast.Case] = []
        seen: set[str] = set()
        while True:
            label = self.expect_ident("label")
            if label.text in seen:
                raise self.error(f"label {label.text!r} handled twice", label.span)
            seen.add(label.text)
            self.expect_op("(")
            binder = ast.SEQ_BINDER
            if not self.at_op(")"):
                binder = self.expect_ident("binder").text
            self.expect_op(")")
            self.expect_op("->")
            body = self.seq(scope | {binder}, loops)
            out.append(ast.Case(label.text, binder, body, span=label.span))
            if not self.accept_op("|"):
                break
        self.expect_op("}")
        return tuple(out)

    def stype_ref(self) -> LocalType:
        return self.closed_ltype()

    def action(self, scope: frozenset[str], loops: frozenset[str]) -> ast.ActionTerm:
        t = self.tok
        if t.kind != "kw":
            raise self.error(f"expected a computation, found {self.describe(t)}")
        kw = t.text
        self.advance()
        sp = t.span
        if kw == "return":
            return ast.Return(self.value(scope), span=sp)
        if kw == "continue":
            label = self.expect_ident("loop label")
            if label.text not in loops:
                raise self.error(f"continue to unbound loop label {label.text!r}", label.span)
            return ast.Continue(label.text, span=sp)
        if kw == "raise":
            return ast.Raise(span=sp)
        if kw == "new":
            return ast.New(self.expect_ident("actor class").text, span=sp)
        if kw == "self":
            return ast.SelfRef(span=sp)
        if kw == "replace":
            target = self.value(scope)
            self.expect_kw("with")
            if self.at_kw("stop"):
                stop = self.advance()
                return ast.Replace(target, ast.Stop(span=stop.span), span=sp)
            self.expect_op("{")
            body = self.seq(scope, frozenset())
            self.expect_op("}")
            return ast.Replace(target, body, span=sp)
        if kw == "discover":
            return ast.Discover(self.stype_ref(), span=sp)
        if kw == "connect":
            label = self.expect_ident("label").text
            payload = self.message_value(scope)
            self.expect_kw("to")
            target = self.value(scope)
            self.expect_kw("as")
            role = self.expect_ident("role").text
            return ast.ConnectTo(label, payload, target, role, span=sp)
        if kw == "accept":
            self.expect_kw("from")
            role = self.expect_ident("role").text
            return ast.AcceptFrom(role, self.cases(scope, loops), span=sp)
        if kw == "send":
            label = self.expect_ident("label").text
            payload = self.message_value(scope)
            self.expect_kw("to")
            role = self.expect_ident("role").text
            return ast.SendTo(label, payload, role, span=sp)
        if kw == "receive":
            self.expect_kw("from")
            role = self.expect_ident("role").text
            return ast.RecvFrom(role, self.cases(scope, loops), span=sp)
        if kw == "wait":
            return ast.WaitFor(self.expect_ident("role").text, span=sp)
        if kw == "disconnect":
            self.expect_kw("from")
            return ast.DisconnectFrom(self.expect_ident("role").text, span=sp)
        raise self.error(f"expected a computation, found {self.describe(t)}", sp)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _boot_nodes(m: ast.Behaviour) -> Iterable[ast.Node]:
    """Nodes executed by the boot actor itself (replacement behaviours run elsewhere)."""
    yield m
    if isinstance(m, ast.Let):
        yield from _boot_nodes(m.bound)
        yield from _boot_nodes(m.body)
    elif isinstance(m, ast.Try):
        yield from _boot_nodes(m.action)
        yield from _boot_nodes(m.handler)
    elif isinstance(m, ast.Loop):
        yield from _boot_nodes(m.body)
    elif isinstance(m, (ast.AcceptFrom, ast.RecvFrom)):
        for c in m.cases:
            yield from _boot_nodes(c.body)


def _all_nodes(terms: list[ast.Computation]) -> Iterable[ast.Node]:
    for t in terms:
        yield from ast.iter_terms(t)


def _finish(p: _Parser) -> None:
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.describe(p.tok)}")


def parse_protocol(text: str) -> ProtocolFile:
    p = _Parser(text)
    return p.protocol_file()


def parse_program(text: str, base_dir: str | None = None,
                  loader: Callable[[str], str] | None = None) -> ast.Program:
    p = _Parser(text, program=True, base_dir=base_dir, loader=loader)
    return p.program_file()


def parse_program_file(path: str) -> ast.Program:
    return parse_program(_read(path), base_dir=os.path.dirname(os.path.abspath(path)))


def parse_local_type(text: str, table: TypeTable | None = None,
                     aliases: dict[str, LocalType] | None = None) -> LocalType:
    p = _Parser(text)
    if table is not None:
        p.protocols = list(table.protocols)
    if aliases:
        p.aliases = dict(aliases)
    s = p.closed_ltype()
    _finish(p)
    return s


def parse_global_type(text: str) -> ast.GlobalType:
    p = _Parser(text)
    g = p.gtype(frozenset())
    _finish(p)
    return g


def parse_computation(text: str, scope: Iterable[str] = (), table: TypeTable | None = None) -> ast.Computation:
    p = _Parser(text, program=True)
    if table is not None:
        p.protocols = list(table.protocols)
    m = p.seq(frozenset(scope), frozenset())
    _finish(p)
    return m
