"""Configuration reduction: enumerating redexes and applying them."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .. import syntax as ast
from ..frontend.printer import value_str
from ..syntax import ActionKind, PidType, UNIT, BaseType, payload_equal, subterms, type_equal
from .config import ActorState, Configuration, InSession
from .terms import decompose, subst_value, term_step

RULES = ("E-Loop", "E-New", "E-Replace", "E-ReplaceSelf", "E-Discover", "E-Self", "E-ConnInit",
         "E-Conn", "E-ConnFail", "E-Disconn", "E-Comm", "E-Complete", "E-CommRaise", "E-FailS",
         "E-FailLoop", "E-LiftM")


class StaleRedex(Exception):
    pass


class SafetyBreach(AssertionError):
    """An E-Comm or connection that pairs a label or payload the receiver's type rules out."""


@dataclass(frozen=True)
class Redex:
    rule: str
    actors: tuple[str, ...]
    detail: str | None = None


@dataclass(frozen=True)
class TraceEvent:
    step: int
    rule: str
    actors: tuple[str, ...]
    session: str | None = None
    roles: tuple[str, ...] = ()
    label: str | None = None
    payload: str | None = None
    detail: str | None = None

    def to_json(self) -> dict:
        out = {"step": self.step, "rule": self.rule, "actors": list(self.actors),
               "session": self.session, "roles": list(self.roles), "label": self.label}
        if self.payload is not None:
            out["payload"] = self.payload
        if self.detail is not None:
            out["detail"] = self.detail
        return out


def _subject(focus) -> str | None:
    return ast.subject(focus)


def _case(cases: tuple[ast.Case, ...], label: str) -> ast.Case | None:
    for c in cases:
        if c.label == label:
            return c
    return None


def _alone(cfg: Configuration, a: ActorState) -> bool:
    s = a.conn.session
    return (all(b is a or b.conn is None or b.conn.session != s for b in cfg.actors)
            and not any(z[0] == s for z in cfg.zappers))


def _actor_redexes(cfg: Configuration, a: ActorState):
    m = a.term
    step = term_step(m)
    if step is not None:
        yield Redex("E-LiftM", (a.name,), step[0])
        return
    if isinstance(m, ast.Return):
        if a.conn is None and not a.stopped:
            yield Redex("E-Loop", (a.name,))
        elif a.conn is not None and not a.conn.peers and _alone(cfg, a):
            yield Redex("E-Complete", (a.name,))
        return
    ctx, f = decompose(m)
    if isinstance(f, ast.Raise):
        if ctx.pure:
            if a.conn is not None:
                yield Redex("E-FailS", (a.name,))
            elif not a.stopped:
                yield Redex("E-FailLoop", (a.name,))
        return
    if isinstance(f, ast.New):
        yield Redex("E-New", (a.name,), f.cls)
    elif isinstance(f, ast.SelfRef):
        yield Redex("E-Self", (a.name,))
    elif isinstance(f, ast.Replace):
        if isinstance(f.target, ast.VActor):
            if f.target.name == a.name:
                yield Redex("E-ReplaceSelf", (a.name,))
            else:
                yield Redex("E-Replace", (a.name, f.target.name))
    elif isinstance(f, ast.Discover):
        for b in cfg.actors:
            if b is not a and b.cls is not None and not b.terminated and type_equal(b.static, f.stype):
                yield Redex("E-Discover", (a.name, b.name))
    elif isinstance(f, ast.ConnectTo):
        if not isinstance(f.target, ast.VActor) or f.target.name == a.name:
            return
        b = cfg.actor(f.target.name)
        if b.terminated or b.conn is not None:
            yield Redex("E-ConnFail", (a.name, b.name), f.label)
            return
        g = b.focus
        if not isinstance(g, ast.AcceptFrom) or _case(g.cases, f.label) is None:
            return
        if a.conn is None:
            yield Redex("E-ConnInit", (a.name, b.name), f.label)
        elif a.conn.role == g.role and f.role not in a.conn.peers:
            yield Redex("E-Conn", (a.name, b.name), f.label)
    elif a.conn is not None and _subject(f) is not None:
        s, p = a.conn.session, a.conn.role
        q = _subject(f)
        if (s, q) in cfg.zappers:
            yield Redex("E-CommRaise", (a.name,), q)
            return
        if isinstance(f, ast.SendTo) and q in a.conn.peers:
            b = cfg.member(s, q)
            if b is None or p not in b.conn.peers:
                return
            g = b.focus
            if isinstance(g, ast.RecvFrom) and g.role == p and _case(g.cases, f.label) is not None:
                yield Redex("E-Comm", (a.name, b.name), f.label)
        elif isinstance(f, ast.WaitFor) and q in a.conn.peers:
            b = cfg.member(s, q)
            if b is None or b.conn.peers != {p}:
                return
            g = b.focus
            if isinstance(g, ast.DisconnectFrom) and g.role == p:
                yield Redex("E-Disconn", (a.name, b.name))


def enabled_redexes(cfg: Configuration) -> list[Redex]:
    out: list[Redex] = []
    for a in cfg.actors:
        out.extend(_actor_redexes(cfg, a))
    return out


# ---------------------------------------------------------------------------
# Applying a redex
# ---------------------------------------------------------------------------


def _runtime_payload(cfg: Configuration, v: ast.Value) -> ast.PayloadType | None:
    if isinstance(v, ast.VUnit):
        return UNIT
    if isinstance(v, ast.VLit):
        return BaseType(v.base)
    if isinstance(v, ast.VActor):
        return PidType(cfg.actor(v.name).static)
    return None


def _check_payload(cfg: Configuration, receiver_role: str, kind: ActionKind, sender_role: str,
                   label: str, v: ast.Value) -> None:
    """Safety by execution: the receiver's declared type must expect ``label`` with this payload."""
    table = cfg.table
    if table is None or receiver_role not in table:
        return
    got = _runtime_payload(cfg, v)
    expected = [a.payload for node in subterms(table[receiver_role]) if isinstance(node, ast.Choice)
                for a in node.actions if a.kind is kind and a.peer == sender_role and a.label == label]
    if not expected:
        raise SafetyBreach(f"{receiver_role} never expects {label} from {sender_role}")
    if got is not None and not any(payload_equal(got, e) for e in expected):
        raise SafetyBreach(f"{label} from {sender_role} to {receiver_role} carries {value_str(v)}")


def _with_term(a: ActorState, term, **changes) -> ActorState:
    return replace(a, term=term, **changes)


def apply(cfg: Configuration, r: Redex, step: int = 0, check: bool = True) -> tuple[Configuration, TraceEvent]:
    """Applies ``r`` and garbage-collects failed sessions; raises :class:`StaleRedex` if not enabled."""
    if check and r not in enabled_redexes(cfg):
        raise StaleRedex(f"{r.rule} on {', '.join(r.actors)} is not enabled in this configuration")
    new_cfg, event = _apply(cfg, r, step)
    new_cfg, dead = new_cfg.collect_failed()
    if dead:
        event = replace(event, detail=(event.detail + "; " if event.detail else "")
                        + "collected " + ", ".join(dead))
    _assert_single_session(new_cfg)
    return new_cfg, event


def _assert_single_session(cfg: Configuration) -> None:
    seen = set()
    for a in cfg.actors:
        if a.conn is not None:
            key = (a.conn.session, a.conn.role)
            if key in seen or key in cfg.zappers:
                raise AssertionError(f"role {key[1]} of {key[0]} is played twice")
            seen.add(key)


def _apply(cfg: Configuration, r: Redex, step: int) -> tuple[Configuration, TraceEvent]:
    a = cfg.actor(r.actors[0])
    ctx, f = decompose(a.term)
    sess = a.conn.session if a.conn else None
    role = (a.conn.role,) if a.conn else ()

    def event(**kw) -> TraceEvent:
        kw.setdefault("session", sess)
        kw.setdefault("roles", role)
        return TraceEvent(step, r.rule, r.actors, **kw)

    rule = r.rule
    if rule == "E-LiftM":
        name, term = term_step(a.term)
        return cfg.update(_with_term(a, term)), event(detail=name)
    if rule == "E-Loop":
        return cfg.update(_with_term(a, a.behaviour)), event()
    if rule == "E-Complete":
        return cfg.update(_with_term(a, a.term, conn=None)), event()
    if rule == "E-FailS":
        z = cfg.zappers | {(a.conn.session, a.conn.role)}
        return cfg.update(_with_term(a, ast.Raise(), conn=None), zappers=z), event()
    if rule == "E-FailLoop":
        return cfg.update(_with_term(a, a.behaviour)), event()
    if rule == "E-New":
        d = cfg.program.definition(f.cls)
        name = f"a{cfg.next_actor}"
        child = ActorState(name, d.cls, d.declared, d.body, None, d.body)
        me = _with_term(a, ctx.plug(ast.Return(ast.VActor(name))))
        return (cfg.update(me, added=(child,), next_actor=cfg.next_actor + 1),
                replace(event(detail=d.cls), actors=(a.name, name)))
    if rule == "E-Self":
        return cfg.update(_with_term(a, ctx.plug(ast.Return(ast.VActor(a.name))))), event()
    if rule == "E-ReplaceSelf":
        return cfg.update(_with_term(a, ctx.plug(ast.Return(ast.VUnit())), behaviour=f.behaviour)), event()
    if rule == "E-Replace":
        b = cfg.actor(r.actors[1])
        return (cfg.update(_with_term(a, ctx.plug(ast.Return(ast.VUnit()))), replace(b, behaviour=f.behaviour)),
                event())
    if rule == "E-Discover":
        return cfg.update(_with_term(a, ctx.plug(ast.Return(ast.VActor(r.actors[1]))))), event()
    if rule == "E-ConnFail":
        return cfg.update(_with_term(a, ctx.plug(ast.Raise()))), event(label=f.label)
    if rule == "E-CommRaise":
        return cfg.update(_with_term(a, ctx.plug(ast.Raise()))), event(detail=f"{r.detail} is zapped")
    b = cfg.actor(r.actors[1])
    bctx, g = decompose(b.term)
    if rule in ("E-ConnInit", "E-Conn"):
        c = _case(g.cases, f.label)
        p = g.role
        _check_payload(cfg, f.role, ActionKind.ACCEPT, p, f.label, f.payload)
        if rule == "E-ConnInit":
            s = f"s{cfg.next_session}"
            a2 = _with_term(a, ctx.plug(ast.Return(ast.VUnit()), keep_handler=False),
                            conn=InSession(s, p, frozenset({f.role})))
            counters = {"next_session": cfg.next_session + 1}
        else:
            s = a.conn.session
            a2 = _with_term(a, ctx.plug(ast.Return(ast.VUnit()), keep_handler=False),
                            conn=replace(a.conn, peers=a.conn.peers | {f.role}))
            counters = {}
        b2 = _with_term(b, bctx.plug(subst_value(c.body, c.binder, f.payload), keep_handler=False),
                        conn=InSession(s, f.role, frozenset({p})))
        return (cfg.update(a2, b2, **counters),
                event(session=s, roles=(p, f.role), label=f.label, payload=value_str(f.payload)))
    if rule == "E-Comm":
        c = _case(g.cases, f.label)
        _check_payload(cfg, b.conn.role, ActionKind.RECV, a.conn.role, f.label, f.payload)
        a2 = _with_term(a, ctx.plug(ast.Return(ast.VUnit()), keep_handler=False))
        b2 = _with_term(b, bctx.plug(subst_value(c.body, c.binder, f.payload), keep_handler=False))
        return (cfg.update(a2, b2),
                event(roles=(a.conn.role, b.conn.role), label=f.label, payload=value_str(f.payload)))
    if rule == "E-Disconn":
        a2 = _with_term(a, ctx.plug(ast.Return(ast.VUnit()), keep_handler=False),
                        conn=replace(a.conn, peers=a.conn.peers - {b.conn.role}))
        b2 = _with_term(b, bctx.plug(ast.Return(ast.VUnit()), keep_handler=False), conn=None)
        return cfg.update(a2, b2), event(roles=(a.conn.role, b.conn.role))
    raise ValueError(f"unknown rule {rule}")
