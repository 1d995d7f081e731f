"""Abstract syntax for session types, global types, protocols and terms.

Everything here is an immutable value.  Recursive types are kept as explicit
``Rec`` nodes and unfolded on demand; nothing is ever eagerly expanded.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

Role = str


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


# ---------------------------------------------------------------------------
# Payload types
# ---------------------------------------------------------------------------

BASE_TYPES = ("String", "Int", "Bool")


@dataclass(frozen=True)
class UnitType:
    def __str__(self) -> str:
        return "()"


@dataclass(frozen=True)
class BaseType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PidType:
    declared: "LocalType"


PayloadType = Union[UnitType, BaseType, PidType]

UNIT = UnitType()


# ---------------------------------------------------------------------------
# Local (session) types
# ---------------------------------------------------------------------------


class ActionKind(enum.Enum):
    SEND = "!"
    CONNECT = "!!"
    RECV = "?"
    ACCEPT = "??"
    WAIT = "wait"

    @property
    def is_output(self) -> bool:
        return self in (ActionKind.SEND, ActionKind.CONNECT)

    @property
    def is_input(self) -> bool:
        return self in (ActionKind.RECV, ActionKind.ACCEPT)


@dataclass(frozen=True)
class Action:
    """A session action ``p!l(A)``, ``p!!l(A)``, ``p?l(A)``, ``p??l(A)`` or a wait on ``p``."""

    kind: ActionKind
    peer: Role
    label: str | None = None
    payload: PayloadType | None = None

    def __post_init__(self) -> None:
        if self.kind is ActionKind.WAIT:
            if self.label is not None or self.payload is not None:
                raise ValueError("wait actions carry no label or payload")
        elif self.label is None or self.payload is None:
            raise ValueError(f"{self.kind.name.lower()} action needs a label and payload")

    @property
    def key(self) -> tuple[str, Role, str | None]:
        return (self.kind.value, self.peer, self.label)


def send(peer: Role, label: str, payload: PayloadType = UNIT) -> Action:
    return Action(ActionKind.SEND, peer, label, payload)


def connect(peer: Role, label: str, payload: PayloadType = UNIT) -> Action:
    return Action(ActionKind.CONNECT, peer, label, payload)


def recv(peer: Role, label: str, payload: PayloadType = UNIT) -> Action:
    return Action(ActionKind.RECV, peer, label, payload)


def accept(peer: Role, label: str, payload: PayloadType = UNIT) -> Action:
    return Action(ActionKind.ACCEPT, peer, label, payload)


def wait(peer: Role) -> Action:
    return Action(ActionKind.WAIT, peer)


@dataclass(frozen=True)
class Choice:
    branches: tuple[tuple[Action, "LocalType"], ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("a choice needs at least one branch")

    @property
    def actions(self) -> tuple[Action, ...]:
        return tuple(a for a, _ in self.branches)


@dataclass(frozen=True)
class Rec:
    var: str
    body: "LocalType"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Disconnect:
    peer: Role


@dataclass(frozen=True)
class End:
    pass


LocalType = Union[Choice, Rec, Var, Disconnect, End]

END = End()


def prefix(action: Action, cont: LocalType) -> Choice:
    return Choice(((action, cont),))


def choice(*branches: tuple[Action, LocalType]) -> Choice:
    return Choice(tuple(branches))


def free_vars(s: LocalType) -> frozenset[str]:
    if isinstance(s, Var):
        return frozenset({s.name})
    if isinstance(s, Rec):
        return free_vars(s.body) - {s.var}
    if isinstance(s, Choice):
        out: frozenset[str] = frozenset()
        for _, cont in s.branches:
            out |= free_vars(cont)
        return out
    return frozenset()


def substitute(s: LocalType, var: str, replacement: LocalType) -> LocalType:
    """``s{replacement/var}``.  Replacements are closed, so no capture can occur."""
    if isinstance(s, Var):
        return replacement if s.name == var else s
    if isinstance(s, Rec):
        if s.var == var:
            return s
        return Rec(s.var, substitute(s.body, var, replacement))
    if isinstance(s, Choice):
        return Choice(tuple((a, substitute(c, var, replacement)) for a, c in s.branches))
    return s


def unfold(s: LocalType) -> LocalType:
    """One unfolding ``μX.S -> S{μX.S/X}``; non-``Rec`` heads are returned unchanged."""
    if isinstance(s, Rec):
        return substitute(s.body, s.var, s)
    return s


def unfold_head(s: LocalType) -> LocalType:
    """Unfold until the head is not a ``Rec``.  Terminates because recursion is guarded."""
    seen = 0
    while isinstance(s, Rec):
        s = unfold(s)
        seen += 1
        if seen > 10_000:
            raise ValueError("unguarded recursion")
    return s


def is_guarded(s: LocalType, unguarded: frozenset[str] = frozenset()) -> bool:
    """Every recursion variable occurs under at least one action."""
    if isinstance(s, Var):
        return s.name not in unguarded
    if isinstance(s, Rec):
        return is_guarded(s.body, unguarded | {s.var})
    if isinstance(s, Choice):
        return all(is_guarded(c) for _, c in s.branches)
    return True


def is_closed(s: LocalType) -> bool:
    return not free_vars(s)


def subterms(s: LocalType) -> Iterator[LocalType]:
    yield s
    if isinstance(s, Rec):
        yield from subterms(s.body)
    elif isinstance(s, Choice):
        for _, c in s.branches:
            yield from subterms(c)


def _choice_valid(c: Choice) -> bool:
    kinds = [a.kind for a in c.actions]
    if all(k.is_output for k in kinds):
        return True
    if len(c.branches) == 1 and kinds[0] is ActionKind.WAIT:
        return True
    for direction in (ActionKind.RECV, ActionKind.ACCEPT):
        if all(k is direction for k in kinds) and len({a.peer for a in c.actions}) == 1:
            return True
    return False


def syntactically_valid(s: LocalType) -> bool:
    return all(_choice_valid(t) for t in subterms(s) if isinstance(t, Choice))


def no_self_communication(s: LocalType, role: Role) -> bool:
    for t in subterms(s):
        if isinstance(t, Disconnect) and t.peer == role:
            return False
        if isinstance(t, Choice) and any(a.peer == role for a in t.actions):
            return False
    return True


def accepts_only_at_top(s: LocalType) -> bool:
    """Accept actions may appear only in the outermost choice of a type."""

    def has_accept(t: LocalType) -> bool:
        return any(
            isinstance(u, Choice) and any(a.kind is ActionKind.ACCEPT for a in u.actions)
            for u in subterms(t)
        )

    if isinstance(s, Choice) and all(a.kind is ActionKind.ACCEPT for a in s.actions):
        return not any(has_accept(c) for _, c in s.branches)
    return not has_accept(s)


def active(s: LocalType) -> bool:
    """False exactly for ``end`` and accept choices."""
    s = unfold_head(s)
    if isinstance(s, End):
        return False
    if isinstance(s, Choice) and all(a.kind is ActionKind.ACCEPT for a in s.actions):
        return False
    return True


def roles_of(s: LocalType) -> frozenset[Role]:
    out: set[Role] = set()
    for t in subterms(s):
        if isinstance(t, Disconnect):
            out.add(t.peer)
        elif isinstance(t, Choice):
            out.update(a.peer for a in t.actions)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Canonical forms and equality
# ---------------------------------------------------------------------------


def _canon_payload(p: PayloadType) -> tuple:
    if isinstance(p, PidType):
        return ("pid", canonical(p.declared))
    if isinstance(p, BaseType):
        return ("base", p.name)
    return ("unit",)


def canonical(s: LocalType, env: tuple[str, ...] = ()) -> tuple:
    """Nameless, branch-order-insensitive key: equal iff α-equivalent."""
    if isinstance(s, End):
        return ("end",)
    if isinstance(s, Disconnect):
        return ("disc", s.peer)
    if isinstance(s, Var):
        for depth, name in enumerate(reversed(env)):
            if name == s.name:
                return ("var", depth)
        return ("free", s.name)
    if isinstance(s, Rec):
        return ("rec", canonical(s.body, env + (s.var,)))
    branches = []
    for a, cont in s.branches:
        payload = None if a.payload is None else _canon_payload(a.payload)
        branches.append((a.kind.value, a.peer, a.label or "", payload, canonical(cont, env)))
    return ("choice", tuple(sorted(set(branches), key=repr)))


def type_equal(s: LocalType, t: LocalType) -> bool:
    """Structural equality modulo renaming of recursion variables (no unfolding)."""
    return canonical(s) == canonical(t)


def session_equal(s: LocalType, t: LocalType) -> bool:
    """Equality up to α-renaming after unfolding both heads."""
    return canonical(unfold_head(s)) == canonical(unfold_head(t))


def payload_equal(a: PayloadType, b: PayloadType) -> bool:
    return _canon_payload(a) == _canon_payload(b)


def rename_rec_vars(s: LocalType, prefix: str = "Rec") -> LocalType:
    """Rename recursion binders to ``Rec0, Rec1, ...`` in binding order."""
    counter = itertools.count()

    def go(t: LocalType, env: Mapping[str, str]) -> LocalType:
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, Rec):
            fresh = f"{prefix}{next(counter)}"
            return Rec(fresh, go(t.body, {**env, t.var: fresh}))
        if isinstance(t, Choice):
            return Choice(tuple((a, go(c, env)) for a, c in t.branches))
        return t

    return go(s, {})


# ---------------------------------------------------------------------------
# Global types
# ---------------------------------------------------------------------------


class GlobalKind(enum.Enum):
    MSG = "->"
    CONNECT = "->>"
    DISCONNECT = "disconnects"


@dataclass(frozen=True)
class GlobalAction:
    kind: GlobalKind
    src: Role
    dst: Role
    label: str | None = None
    payload: PayloadType | None = None

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError(f"global action from {self.src} to itself")
        if self.kind is GlobalKind.DISCONNECT:
            if self.label is not None or self.payload is not None:
                raise ValueError("disconnection carries no label")
        elif self.label is None or self.payload is None:
            raise ValueError("message and connect actions need a label and payload")


def msg(src: Role, dst: Role, label: str, payload: PayloadType = UNIT) -> GlobalAction:
    return GlobalAction(GlobalKind.MSG, src, dst, label, payload)


def gconnect(src: Role, dst: Role, label: str, payload: PayloadType = UNIT) -> GlobalAction:
    return GlobalAction(GlobalKind.CONNECT, src, dst, label, payload)


def gdisconnect(src: Role, dst: Role) -> GlobalAction:
    return GlobalAction(GlobalKind.DISCONNECT, src, dst)


@dataclass(frozen=True)
class GChoice:
    branches: tuple[tuple[GlobalAction, "GlobalType"], ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("a global choice needs at least one branch")


@dataclass(frozen=True)
class GRec:
    var: str
    body: "GlobalType"


@dataclass(frozen=True)
class GVar:
    name: str


@dataclass(frozen=True)
class GEnd:
    pass


GlobalType = Union[GChoice, GRec, GVar, GEnd]

GEND = GEnd()


def gprefix(action: GlobalAction, cont: GlobalType) -> GChoice:
    return GChoice(((action, cont),))


def gsubterms(g: GlobalType) -> Iterator[GlobalType]:
    yield g
    if isinstance(g, GRec):
        yield from gsubterms(g.body)
    elif isinstance(g, GChoice):
        for _, c in g.branches:
            yield from gsubterms(c)


def global_roles(g: GlobalType) -> frozenset[Role]:
    out: set[Role] = set()
    for t in gsubterms(g):
        if isinstance(t, GChoice):
            for a, _ in t.branches:
                out.update((a.src, a.dst))
    return frozenset(out)


def global_free_vars(g: GlobalType) -> frozenset[str]:
    if isinstance(g, GVar):
        return frozenset({g.name})
    if isinstance(g, GRec):
        return global_free_vars(g.body) - {g.var}
    if isinstance(g, GChoice):
        out: frozenset[str] = frozenset()
        for _, c in g.branches:
            out |= global_free_vars(c)
        return out
    return frozenset()


def global_guarded(g: GlobalType, unguarded: frozenset[str] = frozenset()) -> bool:
    if isinstance(g, GVar):
        return g.name not in unguarded
    if isinstance(g, GRec):
        return global_guarded(g.body, unguarded | {g.var})
    if isinstance(g, GChoice):
        return all(global_guarded(c) for _, c in g.branches)
    return True


def global_substitute(g: GlobalType, var: str, replacement: GlobalType) -> GlobalType:
    if isinstance(g, GVar):
        return replacement if g.name == var else g
    if isinstance(g, GRec):
        if g.var == var:
            return g
        return GRec(g.var, global_substitute(g.body, var, replacement))
    if isinstance(g, GChoice):
        return GChoice(tuple((a, global_substitute(c, var, replacement)) for a, c in g.branches))
    return g


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Protocol:
    """A mapping from role names to local types, kept in declaration order."""

    name: str
    entries: tuple[tuple[Role, LocalType], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("a protocol needs at least one role")
        names = [r for r, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate role in protocol {self.name}")

    @classmethod
    def of(cls, name: str, mapping: Mapping[Role, LocalType]) -> "Protocol":
        return cls(name, tuple(mapping.items()))

    @property
    def roles(self) -> tuple[Role, ...]:
        return tuple(r for r, _ in self.entries)

    def __getitem__(self, role: Role) -> LocalType:
        for r, t in self.entries:
            if r == role:
                return t
        raise KeyError(role)

    def __contains__(self, role: object) -> bool:
        return any(r == role for r, _ in self.entries)

    def as_dict(self) -> dict[Role, LocalType]:
        return dict(self.entries)


@dataclass(frozen=True)
class GlobalProtocol:
    name: str
    gtype: GlobalType
    roles: tuple[Role, ...] = ()


class TypeTable:
    """``ty(p)`` lookup across every protocol of a program (roles are globally unique)."""

    def __init__(self, protocols: "Protocol | list[Protocol] | tuple[Protocol, ...]"):
        if isinstance(protocols, Protocol):
            protocols = [protocols]
        self.protocols = tuple(protocols)
        self._types: dict[Role, LocalType] = {}
        self._owner: dict[Role, str] = {}
        for p in self.protocols:
            for role, t in p.entries:
                if role in self._types:
                    raise ValueError(f"role {role} declared by more than one protocol")
                self._types[role] = t
                self._owner[role] = p.name

    def __getitem__(self, role: Role) -> LocalType:
        return self._types[role]

    def get(self, role: Role) -> LocalType | None:
        return self._types.get(role)

    def __contains__(self, role: object) -> bool:
        return role in self._types

    def roles(self) -> tuple[Role, ...]:
        return tuple(self._types)

    def protocol_of(self, role: Role) -> str:
        return self._owner[role]

    def role_for_type(self, s: LocalType) -> Role | None:
        for role, t in self._types.items():
            if type_equal(t, s):
                return role
        return None


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    span: Span | None = field(default=None, compare=False, repr=False, kw_only=True)


# Values


@dataclass(frozen=True)
class VVar(Node):
    name: str


@dataclass(frozen=True)
class VUnit(Node):
    pass


@dataclass(frozen=True)
class VLit(Node):
    value: str | int | bool

    @property
    def base(self) -> str:
        if isinstance(self.value, bool):
            return "Bool"
        if isinstance(self.value, int):
            return "Int"
        return "String"


@dataclass(frozen=True)
class VActor(Node):
    """A runtime actor name; never produced by the parser."""

    name: str


Value = Union[VVar, VUnit, VLit, VActor]


# Actions


@dataclass(frozen=True)
class Case(Node):
    label: str
    binder: str
    body: "Computation"


@dataclass(frozen=True)
class Return(Node):
    value: Value


@dataclass(frozen=True)
class Continue(Node):
    label: str


@dataclass(frozen=True)
class Raise(Node):
    pass


@dataclass(frozen=True)
class New(Node):
    cls: str


@dataclass(frozen=True)
class SelfRef(Node):
    pass


@dataclass(frozen=True)
class Stop(Node):
    pass


@dataclass(frozen=True)
class Replace(Node):
    target: Value
    behaviour: "Behaviour"


@dataclass(frozen=True)
class Discover(Node):
    stype: LocalType


@dataclass(frozen=True)
class ConnectTo(Node):
    label: str
    payload: Value
    target: Value
    role: Role


@dataclass(frozen=True)
class AcceptFrom(Node):
    role: Role
    cases: tuple[Case, ...]


@dataclass(frozen=True)
class SendTo(Node):
    label: str
    payload: Value
    role: Role


@dataclass(frozen=True)
class RecvFrom(Node):
    role: Role
    cases: tuple[Case, ...]


@dataclass(frozen=True)
class WaitFor(Node):
    role: Role


@dataclass(frozen=True)
class DisconnectFrom(Node):
    role: Role


ActionTerm = Union[
    Return, Continue, Raise, New, SelfRef, Replace, Discover,
    ConnectTo, AcceptFrom, SendTo, RecvFrom, WaitFor, DisconnectFrom,
]

ACTION_TYPES = (
    Return, Continue, Raise, New, SelfRef, Replace, Discover,
    ConnectTo, AcceptFrom, SendTo, RecvFrom, WaitFor, DisconnectFrom,
)
COMMUNICATION_TYPES = (ConnectTo, AcceptFrom, SendTo, RecvFrom, WaitFor, DisconnectFrom)


# Computations


@dataclass(frozen=True)
class Let(Node):
    binder: str
    bound: "Computation"
    body: "Computation"


@dataclass(frozen=True)
class Try(Node):
    action: ActionTerm
    handler: "Computation"

    def __post_init__(self) -> None:
        if not isinstance(self.action, ACTION_TYPES):
            raise ValueError("try guards exactly one action")


@dataclass(frozen=True)
class Loop(Node):
    label: str
    body: "Computation"


Computation = Union[Let, Try, Loop, ActionTerm]
Behaviour = Union[Computation, Stop]

SEQ_BINDER = "_"


def seq(first: Computation, then: Computation) -> Let:
    """``M; N`` sugar for ``let _ = M in N``."""
    return Let(SEQ_BINDER, first, then)


def subject(action: object) -> Role | None:
    """The role an action communicates with, for send/receive/wait/disconnect."""
    if isinstance(action, (SendTo, RecvFrom, WaitFor, DisconnectFrom)):
        return action.role
    return None


def iter_terms(m: Behaviour) -> Iterator[Node]:
    """Pre-order walk over every computation node, including case and behaviour bodies."""
    yield m
    if isinstance(m, Let):
        yield from iter_terms(m.bound)
        yield from iter_terms(m.body)
    elif isinstance(m, Try):
        yield from iter_terms(m.action)
        yield from iter_terms(m.handler)
    elif isinstance(m, Loop):
        yield from iter_terms(m.body)
    elif isinstance(m, (AcceptFrom, RecvFrom)):
        for c in m.cases:
            yield from iter_terms(c.body)
    elif isinstance(m, Replace) and not isinstance(m.behaviour, Stop):
        yield from iter_terms(m.behaviour)


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Definition:
    cls: str
    declared: LocalType
    body: Computation
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    definitions: tuple[Definition, ...]
    protocols: tuple[Protocol, ...]
    boot: Computation

    def definition(self, cls: str) -> Definition:
        for d in self.definitions:
            if d.cls == cls:
                return d
        raise KeyError(cls)

    def types(self) -> TypeTable:
        return TypeTable(list(self.protocols))
