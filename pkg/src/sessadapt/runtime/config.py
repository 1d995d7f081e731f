"""Runtime configurations, kept flat (canonical form) by construction."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .. import syntax as ast
from ..frontend.printer import computation_str
from ..syntax import END, LocalType, Role
from .terms import decompose, is_pure_raise


@dataclass(frozen=True)
class InSession:
    """Connection state ``s[p]<q~>``."""

    session: str
    role: Role
    peers: frozenset[Role] = frozenset()

    def __str__(self) -> str:
        return f"{self.session}[{self.role}]<{', '.join(sorted(self.peers))}>"


@dataclass(frozen=True)
class ActorState:
    name: str
    cls: str | None
    static: LocalType
    term: ast.Computation
    conn: InSession | None
    behaviour: ast.Behaviour

    @property
    def stopped(self) -> bool:
        return isinstance(self.behaviour, ast.Stop)

    @property
    def terminated(self) -> bool:
        return self.stopped and (isinstance(self.term, ast.Return) or is_pure_raise(self.term))

    @property
    def focus(self) -> ast.Computation:
        return decompose(self.term)[1]

    @property
    def accepting(self) -> bool:
        return isinstance(self.focus, ast.AcceptFrom)

    def to_json(self) -> dict:
        return {
            "actor": self.name,
            "class": self.cls,
            "term": computation_str(self.term),
            "connection": None if self.conn is None else {
                "session": self.conn.session, "role": self.conn.role, "peers": sorted(self.conn.peers)},
            "behaviour": "stop" if self.stopped else "body",
        }


@dataclass(frozen=True)
class Configuration:
    """Actors in spawn order, zapper threads ``↯ s[p]`` and fresh-name counters."""

    actors: tuple[ActorState, ...]
    zappers: frozenset[tuple[str, Role]] = frozenset()
    next_actor: int = 0
    next_session: int = 0
    program: ast.Program | None = field(default=None, compare=False, repr=False)
    table: ast.TypeTable | None = field(default=None, compare=False, repr=False)

    def actor(self, name: str) -> ActorState:
        for a in self.actors:
            if a.name == name:
                return a
        raise KeyError(name)

    def by_session(self, session: str) -> list[ActorState]:
        return [a for a in self.actors if a.conn is not None and a.conn.session == session]

    def member(self, session: str, role: Role) -> ActorState | None:
        for a in self.actors:
            if a.conn is not None and a.conn.session == session and a.conn.role == role:
                return a
        return None

    def sessions(self) -> dict[str, set[Role]]:
        out: dict[str, set[Role]] = {}
        for a in self.actors:
            if a.conn is not None:
                out.setdefault(a.conn.session, set()).add(a.conn.role)
        for s, p in self.zappers:
            out.setdefault(s, set()).add(p)
        return out

    def update(self, *changed: ActorState, added: tuple[ActorState, ...] = (),
               zappers: frozenset | None = None, **counters) -> "Configuration":
        by_name = {a.name: a for a in changed}
        actors = tuple(by_name.get(a.name, a) for a in self.actors) + tuple(added)
        return replace(self, actors=actors, zappers=self.zappers if zappers is None else zappers,
                       **counters)

    def collect_failed(self) -> tuple["Configuration", list[str]]:
        """Erases sessions whose only participants are zapper threads."""
        live = {a.conn.session for a in self.actors if a.conn is not None}
        dead = sorted({s for s, _ in self.zappers if s not in live})
        if not dead:
            return self, []
        return replace(self, zappers=frozenset(z for z in self.zappers if z[0] not in dead)), dead

    def to_json(self) -> dict:
        return {
            "actors": [a.to_json() for a in self.actors],
            "zappers": [{"session": s, "role": p} for s, p in sorted(self.zappers)],
        }

    def render(self) -> str:
        lines = []
        for a in self.actors:
            conn = "⊥" if a.conn is None else str(a.conn)
            beh = "stop" if a.stopped else "M"
            lines.append(f"<{a.name}:{a.cls or 'boot'}, {computation_str(a.term)}, {conn}, {beh}>")
        lines.extend(f"zap {s}[{p}]" for s, p in sorted(self.zappers))
        return "\n".join(lines)


def init_configuration(prog: ast.Program) -> Configuration:
    """``(νa)(<a, M, ⊥, stop>)`` for the boot term ``M``."""
    boot = ActorState("a0", None, END, prog.boot, None, ast.Stop())
    return Configuration((boot,), frozenset(), 1, 0, prog, prog.types())
