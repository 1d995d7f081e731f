"""Runtime typing environments and their labelled transition system.

Environments map session roles ``s[p]`` to a connected-role set and a current
local type.  Exploration interns every local type into a :class:`TypeGraph`
node (keyed by the canonical form of its head unfolding), so the reachable
state space of an environment is finite and each state has a hashable index.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

from . import syntax as ast
from .syntax import (
    Action, ActionKind, Choice, Disconnect, End, LocalType, Role, TypeTable,
    canonical, payload_equal, unfold_head,
)
from .frontend.printer import local_str, payload_str

DEFAULT_MAX_STATES = 100_000


class StateBoundExceeded(Exception):
    def __init__(self, bound: int):
        self.bound = bound
        super().__init__(f"state space exceeds the bound of {bound} environments")


# ---------------------------------------------------------------------------
# Type graph
# ---------------------------------------------------------------------------


class TypeGraph:
    """Interns local types by the canonical form of their head unfolding."""

    def __init__(self) -> None:
        self._ids: dict[tuple, int] = {}
        self._reps: list[LocalType] = []
        self._by_obj: dict[int, tuple[LocalType, int]] = {}
        self._branches: dict[int, tuple[tuple[Action, LocalType], ...]] = {}

    def __len__(self) -> int:
        return len(self._reps)

    def intern(self, s: LocalType) -> int:
        hit = self._by_obj.get(id(s))
        if hit is not None and hit[0] is s:
            return hit[1]
        head = unfold_head(s)
        key = canonical(head)
        nid = self._ids.get(key)
        if nid is None:
            nid = len(self._reps)
            self._ids[key] = nid
            self._reps.append(head)
        self._by_obj[id(s)] = (s, nid)
        return nid

    def head(self, s: LocalType) -> LocalType:
        """Representative head-unfolded type (never a ``Rec``)."""
        return self._reps[self.intern(s)]

    def rep(self, nid: int) -> LocalType:
        return self._reps[nid]

    def branches(self, s: LocalType) -> tuple[tuple[Action, LocalType], ...]:
        """Branches of a choice, with continuations replaced by node representatives."""
        nid = self.intern(s)
        cached = self._branches.get(nid)
        if cached is None:
            head = self._reps[nid]
            if isinstance(head, Choice):
                cached = tuple((a, self._reps[self.intern(c)]) for a, c in head.branches)
            else:
                cached = ()
            self._branches[nid] = cached
        return cached


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

SessionKey = tuple[str, Role]


@dataclass(frozen=True)
class Entry:
    connected: frozenset[Role]
    stype: LocalType


@dataclass(frozen=True)
class RuntimeEnv:
    """``a : S`` entries, ``s[p, q~] : S`` entries and (exception-aware) zapped roles."""

    actors: tuple[tuple[str, LocalType], ...] = ()
    sessions: tuple[tuple[SessionKey, Entry], ...] = ()
    zapped: frozenset[SessionKey] = frozenset()

    def __post_init__(self) -> None:
        keys = [k for k, _ in self.sessions]
        if len(set(keys)) != len(keys):
            raise ValueError("session entries must be linear")
        if set(keys) & self.zapped:
            raise ValueError("a role cannot be both live and zapped")
        for (_, role), e in self.sessions:
            if role in e.connected:
                raise ValueError(f"role {role} connected to itself")

    @classmethod
    def initial(cls, role: Role, stype: LocalType, session: str = "s") -> "RuntimeEnv":
        return cls(sessions=(((session, role), Entry(frozenset(), stype)),))

    @classmethod
    def of(cls, entries: dict[SessionKey, tuple[Iterable[Role], LocalType]],
           zapped: Iterable[SessionKey] = (), actors: Iterable[tuple[str, LocalType]] = ()) -> "RuntimeEnv":
        items = tuple(sorted(((k, Entry(frozenset(c), t)) for k, (c, t) in entries.items()),
                             key=lambda kv: kv[0]))
        return cls(tuple(actors), items, frozenset(zapped))

    # mapping-style helpers
    def entry(self, key: SessionKey) -> Entry | None:
        for k, e in self.sessions:
            if k == key:
                return e
        return None

    def keys(self) -> list[SessionKey]:
        return [k for k, _ in self.sessions]

    def present(self, key: SessionKey) -> bool:
        return key in self.zapped or any(k == key for k, _ in self.sessions)

    def with_entries(self, updates: dict[SessionKey, Entry | None],
                     zap: Iterable[SessionKey] = ()) -> "RuntimeEnv":
        current = dict(self.sessions)
        for k, e in updates.items():
            if e is None:
                current.pop(k, None)
            else:
                current[k] = e
        zapped = set(self.zapped)
        for k in zap:
            current.pop(k, None)
            zapped.add(k)
        return RuntimeEnv(self.actors, tuple(sorted(current.items(), key=lambda kv: kv[0])),
                          frozenset(zapped))

    def session_names(self) -> list[str]:
        return sorted({k[0] for k, _ in self.sessions} | {k[0] for k in self.zapped})

    def restrict(self, session: str) -> "RuntimeEnv":
        return RuntimeEnv((), tuple((k, e) for k, e in self.sessions if k[0] == session),
                          frozenset(k for k in self.zapped if k[0] == session))

    def index(self, graph: TypeGraph) -> tuple:
        """Finite, hashable key: equal iff the environments agree up to type equality."""
        return (
            tuple((a, graph.intern(t)) for a, t in self.actors),
            tuple((k, graph.intern(e.stype), tuple(sorted(e.connected))) for k, e in self.sessions),
            tuple(sorted(self.zapped)),
        )

    def is_final(self) -> bool:
        if self.zapped or len(self.sessions) != 1:
            return False
        (_, e), = self.sessions
        return not e.connected and isinstance(unfold_head(e.stype), End)

    def is_failed(self) -> bool:
        return not self.sessions and bool(self.zapped)

    def render(self) -> str:
        parts = [f"{a} : {local_str(t)}" for a, t in self.actors]
        for (s, p), e in self.sessions:
            peers = "{" + ", ".join(sorted(e.connected)) + "}" if e.connected else "∅"
            parts.append(f"{s}[{p}, {peers}] : {local_str(e.stype)}")
        parts.extend(f"zap {s}[{p}]" for s, p in sorted(self.zapped))
        return ", ".join(parts) or "·"

    def to_json(self) -> dict:
        return {
            "actors": [{"actor": a, "type": local_str(t)} for a, t in self.actors],
            "sessions": [
                {"session": s, "role": p, "connected": sorted(e.connected), "type": local_str(e.stype)}
                for (s, p), e in self.sessions
            ],
            "zapped": [{"session": s, "role": p} for s, p in sorted(self.zapped)],
        }


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Comm:
    direction: str  # "!" or "?"
    session: str
    subject: Role
    peer: Role
    label: str
    payload: ast.PayloadType


@dataclass(frozen=True)
class Conn:
    session: str
    subject: Role
    peer: Role
    label: str


@dataclass(frozen=True)
class Disc:
    direction: str  # "wait" or "disconnect"
    session: str
    subject: Role
    peer: Role


TransitionLabel = Union[Comm, Conn, Disc]


@dataclass(frozen=True)
class Pair:
    session: str
    sender: Role
    receiver: Role
    label: str

    @property
    def roles(self) -> frozenset[Role]:
        return frozenset((self.sender, self.receiver))

    def __str__(self) -> str:
        return f"{self.session}:{self.sender}->{self.receiver}:{self.label}"

    def to_json(self) -> dict:
        return {"sync": "Pair", "session": self.session, "from": self.sender,
                "to": self.receiver, "label": self.label}


@dataclass(frozen=True)
class ConnPair:
    session: str
    connector: Role
    acceptor: Role
    label: str

    @property
    def roles(self) -> frozenset[Role]:
        return frozenset((self.connector, self.acceptor))

    def __str__(self) -> str:
        return f"{self.session}:{self.connector}->>{self.acceptor}:{self.label}"

    def to_json(self) -> dict:
        return {"sync": "ConnPair", "session": self.session, "from": self.connector,
                "to": self.acceptor, "label": self.label}


@dataclass(frozen=True)
class DiscPair:
    session: str
    waiter: Role
    leaver: Role

    @property
    def roles(self) -> frozenset[Role]:
        return frozenset((self.waiter, self.leaver))

    def __str__(self) -> str:
        return f"{self.session}:{self.leaver}#{self.waiter}"

    def to_json(self) -> dict:
        return {"sync": "DiscPair", "session": self.session, "from": self.leaver, "to": self.waiter}


@dataclass(frozen=True)
class Zap:
    session: str
    failed: Role
    victim: Role

    @property
    def roles(self) -> frozenset[Role]:
        return frozenset((self.failed, self.victim))

    def __str__(self) -> str:
        return f"{self.session}:zap({self.failed}=>{self.victim})"

    def to_json(self) -> dict:
        return {"sync": "Zap", "session": self.session, "from": self.failed, "to": self.victim}


SyncLabel = Union[Pair, ConnPair, DiscPair, Zap]


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------

def accept_branch(acceptor_type: LocalType, connector: Role, label: str,
                  payload: ast.PayloadType) -> LocalType | None:
    """Continuation of ``ty(q)`` accepting ``label`` from ``connector``, if any."""
    head = unfold_head(acceptor_type)
    if not isinstance(head, Choice):
        return None
    if not all(a.kind is ActionKind.ACCEPT and a.peer == connector for a in head.actions):
        return None
    for a, cont in head.branches:
        if a.label == label and payload_equal(a.payload, payload):
            return cont
    return None


def env_local_steps(env: RuntimeEnv, table: TypeTable,
                    graph: TypeGraph | None = None) -> list[tuple[TransitionLabel, RuntimeEnv]]:
    graph = TypeGraph() if graph is None else graph
    out: list[tuple[TransitionLabel, RuntimeEnv]] = []
    for (s, p), e in env.sessions:
        for label, updates in _entry_moves(env, s, p, e, table, graph):
            out.append((label, env.with_entries(updates)))
    return out


def _entry_moves(env: RuntimeEnv, s: str, p: Role, e: Entry, table: TypeTable, graph: TypeGraph):
    head = graph.head(e.stype)
    if isinstance(head, Disconnect):
        if e.connected == {head.peer}:
            yield Disc("disconnect", s, p, head.peer), {(s, p): None}
        return
    if not isinstance(head, Choice):
        return
    for a, cont in graph.branches(e.stype):
        q = a.peer
        if a.kind is ActionKind.CONNECT:
            if env.present((s, q)) or q not in table:
                continue
            t = accept_branch(table[q], p, a.label, a.payload)
            if t is None:
                continue
            t = graph.rep(graph.intern(t))
            yield Conn(s, p, q, a.label), {
                (s, p): Entry(e.connected | {q}, cont),
                (s, q): Entry(frozenset({p}), t),
            }
        elif a.kind in (ActionKind.SEND, ActionKind.RECV):
            if q in e.connected:
                d = "!" if a.kind is ActionKind.SEND else "?"
                yield Comm(d, s, p, q, a.label, a.payload), {(s, p): Entry(e.connected, cont)}
        elif a.kind is ActionKind.WAIT:
            if q in e.connected:
                yield Disc("wait", s, p, q), {(s, p): Entry(e.connected - {q}, cont)}


def env_sync_steps(env: RuntimeEnv, table: TypeTable, exception_aware: bool = False,
                   graph: TypeGraph | None = None) -> list[tuple[SyncLabel, RuntimeEnv]]:
    graph = TypeGraph() if graph is None else graph
    moves: dict[SessionKey, list] = {}
    for (s, p), e in env.sessions:
        moves[(s, p)] = list(_entry_moves(env, s, p, e, table, graph))
    out: list[tuple[SyncLabel, RuntimeEnv]] = []
    for key, ms in moves.items():
        s, p = key
        for label, updates in ms:
            if isinstance(label, Conn):
                out.append((ConnPair(s, p, label.peer, label.label), env.with_entries(updates)))
            elif isinstance(label, Comm) and label.direction == "!":
                for label2, updates2 in moves.get((s, label.peer), ()):
                    if (isinstance(label2, Comm) and label2.direction == "?" and label2.peer == p
                            and label2.label == label.label
                            and payload_equal(label2.payload, label.payload)):
                        out.append((Pair(s, p, label.peer, label.label),
                                    env.with_entries({**updates, **updates2})))
            elif isinstance(label, Disc) and label.direction == "wait":
                for label2, updates2 in moves.get((s, label.peer), ()):
                    if isinstance(label2, Disc) and label2.direction == "disconnect" and label2.peer == p:
                        out.append((DiscPair(s, p, label.peer), env.with_entries({**updates, **updates2})))
    if exception_aware:
        for (s, failed) in sorted(env.zapped):
            for (s2, q), e in env.sessions:
                if s2 == s and _fails_on(e, failed, graph):
                    out.append((Zap(s, failed, q), env.with_entries({}, zap=[(s, q)])))
    return out


def _fails_on(e: Entry, failed: Role, graph: TypeGraph) -> bool:
    head = graph.head(e.stype)
    if isinstance(head, Disconnect):
        return head.peer == failed and e.connected == {failed}
    if not isinstance(head, Choice):
        return False
    for a in head.actions:
        if a.peer != failed:
            continue
        if a.kind in (ActionKind.SEND, ActionKind.RECV):
            return True
        if a.kind is ActionKind.WAIT and failed in e.connected:
            return True
    return False


def zap_env(env: RuntimeEnv, roles: Iterable[Role | SessionKey]) -> RuntimeEnv:
    keys = []
    for r in roles:
        if isinstance(r, tuple):
            key = r
        else:
            matches = [k for k in env.keys() if k[1] == r]
            if len(matches) != 1:
                raise KeyError(f"role {r} has {'no' if not matches else 'several'} session entries")
            key = matches[0]
        if env.entry(key) is None:
            raise KeyError(f"no live entry for {key[0]}[{key[1]}]")
        keys.append(key)
    return env.with_entries({}, zap=keys)


def is_output_directed(s: LocalType) -> bool:
    head = unfold_head(s)
    return isinstance(head, Choice) and all(a.kind.is_output for a in head.actions)


def is_output_flat(env: RuntimeEnv) -> bool:
    return all(len(unfold_head(e.stype).branches) == 1
               for _, e in env.sessions if is_output_directed(e.stype))


def flattenings(env: RuntimeEnv) -> list[RuntimeEnv]:
    options: list[list[tuple[SessionKey, Entry]]] = []
    for key, e in env.sessions:
        head = unfold_head(e.stype)
        if is_output_directed(e.stype) and len(head.branches) > 1:
            options.append([(key, Entry(e.connected, ast.prefix(a, c))) for a, c in head.branches])
        else:
            options.append([(key, e)])
    return [RuntimeEnv(env.actors, tuple(combo), env.zapped) for combo in itertools.product(*options)]


# ---------------------------------------------------------------------------
# Reachability
# ---------------------------------------------------------------------------


@dataclass
class ReachGraph:
    states: list[RuntimeEnv]
    edges: list[list[tuple[SyncLabel, int]]]
    parent: list[tuple[int, SyncLabel] | None]
    index: dict[tuple, int] = field(repr=False)
    exception_aware: bool = False

    def __len__(self) -> int:
        return len(self.states)

    def witness(self, sid: int) -> list[SyncLabel]:
        path = []
        while self.parent[sid] is not None:
            prev, label = self.parent[sid]
            path.append(label)
            sid = prev
        return path[::-1]

    def terminal_states(self) -> list[int]:
        return [i for i, out in enumerate(self.edges) if not out]

    def to_dot(self) -> str:
        lines = ["digraph envs {", "  node [shape=box, fontname=monospace];"]
        for i, st in enumerate(self.states):
            text = st.render().replace('"', '\\"')
            extra = ", peripheries=2" if st.is_final() else ""
            lines.append(f'  n{i} [label="{text}"{extra}];')
        for i, out in enumerate(self.edges):
            for label, j in out:
                lines.append(f'  n{i} -> n{j} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def reachable(env0: RuntimeEnv, table: TypeTable, exception_aware: bool = False,
              max_states: int = DEFAULT_MAX_STATES, graph: TypeGraph | None = None) -> ReachGraph:
    """Breadth-first closure of the synchronisation relation from ``env0``."""
    graph = TypeGraph() if graph is None else graph
    states = [env0]
    index = {env0.index(graph): 0}
    edges: list[list[tuple[SyncLabel, int]]] = [[]]
    parent: list[tuple[int, SyncLabel] | None] = [None]
    queue = deque([0])
    while queue:
        sid = queue.popleft()
        for label, nxt in env_sync_steps(states[sid], table, exception_aware, graph):
            key = nxt.index(graph)
            tid = index.get(key)
            if tid is None:
                if len(states) >= max_states:
                    raise StateBoundExceeded(max_states)
                tid = len(states)
                index[key] = tid
                states.append(nxt)
                edges.append([])
                parent.append((sid, label))
                queue.append(tid)
            edges[sid].append((label, tid))
    return ReachGraph(states, edges, parent, index, exception_aware)


def replay(env0: RuntimeEnv, table: TypeTable, witness: Iterable[SyncLabel],
           exception_aware: bool = False, graph: TypeGraph | None = None) -> RuntimeEnv:
    """Fold the witness through :func:`env_sync_steps`; raises ``ValueError`` if a step is missing."""
    graph = TypeGraph() if graph is None else graph
    env = env0
    for label in witness:
        for lab, nxt in env_sync_steps(env, table, exception_aware, graph):
            if lab == label:
                env = nxt
                break
        else:
            raise ValueError(f"witness step {label} is not enabled in {env.render()}")
    return env


def sync_label_str(label: SyncLabel) -> str:
    return str(label)


def comm_str(label: Comm) -> str:
    return f"{label.session}:{label.subject}{label.direction}{label.peer}:{label.label}({payload_str(label.payload)})"
