"""Projection of global types onto local types, with 1-unfolding and role enabling."""

from __future__ import annotations

from typing import Iterable

from .syntax import (
    END, Action, ActionKind, Choice, End, GChoice, GEnd, GRec, GVar, GlobalKind,
    GlobalProtocol, GlobalType, LocalType, Protocol, Rec, Role, Var, canonical,
    free_vars, global_roles, global_substitute, rename_rec_vars, unfold_head,
)
from . import syntax as ast


class ProjectionError(Exception):
    """Raised when a side condition of the projection equations fails."""

    KINDS = ("Unmergeable", "MixedDirection", "InputMultiSender", "DisconnectContinues",
             "NotRoleEnabled", "NoUniqueInitiator")

    def __init__(self, kind: str, role: Role | None, message: str,
                 subterm: GlobalType | None = None, branches: tuple[int, ...] = ()):
        assert kind in self.KINDS
        self.kind = kind
        self.role = role
        self.subterm = subterm
        self.branches = branches
        super().__init__(f"{kind}: {message}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "role": self.role, "branches": list(self.branches),
                "message": str(self)}


def unfold1(g: GlobalType) -> GlobalType:
    """1-unfolding: every recursion binder is unfolded once with ``end`` for its variable."""
    if isinstance(g, GRec):
        return unfold1(global_substitute(g.body, g.var, GEnd()))
    if isinstance(g, GChoice):
        return GChoice(tuple((a, unfold1(c)) for a, c in g.branches))
    return g


def role_enabled(enabled: Iterable[Role], g: GlobalType) -> bool:
    enabled = frozenset(enabled)
    if isinstance(g, (GEnd, GVar)):
        return True
    if isinstance(g, GRec):
        raise ValueError("role enabling expects a recursion-free global type (use unfold1)")
    if len(g.branches) == 1:
        (a, cont), = g.branches
        return a.src in enabled and role_enabled(enabled | {a.dst}, cont)
    subjects = {a.src for a, _ in g.branches}
    if len(subjects) != 1:
        return False
    (p,) = subjects
    return p in enabled and all(role_enabled({p, a.dst}, cont) for a, cont in g.branches)


def _is_output(s: LocalType) -> bool:
    return isinstance(s, Choice) and all(a.kind.is_output for a in s.actions)


def _input_sender(s: LocalType) -> tuple[Role, ActionKind] | None:
    if not isinstance(s, Choice):
        return None
    peers = {(a.peer, a.kind) for a in s.actions}
    if len(peers) == 1:
        peer, kind = next(iter(peers))
        if kind.is_input:
            return peer, kind
    return None


def _merge(role: Role, g: GChoice, parts: list[tuple[int, Choice]]) -> Choice:
    merged: list[tuple[Action, LocalType]] = []
    seen: dict[tuple, tuple[int, tuple]] = {}
    for idx, part in parts:
        for a, cont in part.branches:
            k = a.key
            key_canon = canonical(ast.prefix(a, cont))
            if k in seen:
                other_idx, other_canon = seen[k]
                if other_canon != key_canon:
                    raise ProjectionError(
                        "Unmergeable", role,
                        f"branches {other_idx} and {idx} give {role} the action "
                        f"{a.kind.value}{a.label} towards {a.peer} with different continuations",
                        g, (other_idx, idx))
                continue
            seen[k] = (idx, key_canon)
            merged.append((a, cont))
    return Choice(tuple(merged))


def _project(g: GlobalType, r: Role, phi: frozenset[str]) -> LocalType:
    if isinstance(g, GEnd):
        return END
    if isinstance(g, GVar):
        return Var(g.name)
    if isinstance(g, GRec):
        body = _project(g.body, r, phi | {g.var})
        if isinstance(body, (Var, End)):
            return END
        return Rec(g.var, body) if g.var in free_vars(body) else body
    if len(g.branches) == 1:
        (a, cont), = g.branches
        if a.kind is GlobalKind.DISCONNECT:
            if r == a.src:
                rest = _project(cont, r, frozenset())
                if not isinstance(rest, End):
                    raise ProjectionError("DisconnectContinues", r,
                                          f"{r} disconnects from {a.dst} but is used afterwards", g)
                return ast.Disconnect(a.dst)
            if r == a.dst:
                return ast.prefix(ast.wait(a.src), _project(cont, r, frozenset()))
            return _project(cont, r, phi)
        rest = _project(cont, r, phi)
        connect = a.kind is GlobalKind.CONNECT
        if r == a.src:
            kind = ActionKind.CONNECT if connect else ActionKind.SEND
            return ast.prefix(Action(kind, a.dst, a.label, a.payload), rest)
        if r == a.dst:
            kind = ActionKind.ACCEPT if connect else ActionKind.RECV
            return ast.prefix(Action(kind, a.src, a.label, a.payload), rest)
        return rest

    projections = [_project(GChoice((b,)), r, phi) for b in g.branches]
    if all(isinstance(p, Var) for p in projections) and len({p.name for p in projections}) == 1:
        return projections[0]
    if all(isinstance(p, End) for p in projections):
        return END
    kept: list[tuple[int, Choice]] = []
    for idx, p in enumerate(projections):
        if isinstance(p, Choice):
            kept.append((idx, p))
        elif isinstance(p, End) or (isinstance(p, Var) and p.name in phi):
            continue
        else:
            raise ProjectionError("Unmergeable", r,
                                  f"branch {idx} projects to {type(p).__name__} for {r}, "
                                  "which cannot be pruned", g, (idx,))
    if not kept:
        raise ProjectionError("Unmergeable", r,
                              f"branches mix end and recursion variables for {r}", g,
                              tuple(range(len(projections))))
    if all(_is_output(p) for _, p in kept):
        return _merge(r, g, kept)
    senders = [_input_sender(p) for _, p in kept]
    if all(s is not None for s in senders):
        if len(set(senders)) == 1:
            return _merge(r, g, kept)
        raise ProjectionError("InputMultiSender", r,
                              f"{r} would receive from several roles in one choice", g,
                              tuple(i for i, _ in kept))
    raise ProjectionError("MixedDirection", r,
                          f"{r} would mix inputs and outputs in one choice", g,
                          tuple(i for i, _ in kept))


def project(g: GlobalType, r: Role, normalise: bool = False) -> LocalType:
    """``G`` projected at ``r``; raises :class:`ProjectionError` where undefined.

    Recursion binders keep their global names unless ``normalise`` renames them
    to ``Rec0, Rec1, ...``.
    """
    out = _project(g, r, frozenset())
    return rename_rec_vars(out) if normalise else out


def is_connect_choice(s: LocalType) -> bool:
    s = unfold_head(s)
    return isinstance(s, Choice) and all(a.kind is ActionKind.CONNECT for a in s.actions)


def initiators(p: Protocol) -> set[Role]:
    return {role for role, s in p.entries if is_connect_choice(s)}


def unique_initiator(p: Protocol) -> Role | None:
    found = initiators(p)
    if len(found) != 1:
        return None
    (q,) = found
    if all(not ast.active(s) for role, s in p.entries if role != q):
        return q
    return None


def global_initiators(g: GlobalType) -> set[Role]:
    out = set()
    for r in global_roles(g):
        try:
            if is_connect_choice(project(g, r)):
                out.add(r)
        except ProjectionError:
            continue
    return out


def project_all(g: GlobalType, roles: Iterable[Role] | None = None) -> dict[Role, LocalType]:
    """Project every role, after checking the unique-initiator and role-enabling conditions."""
    role_list = sorted(global_roles(g)) if roles is None else list(roles)
    local = {r: project(g, r) for r in role_list}
    inits = {r for r in global_roles(g) if is_connect_choice(local.get(r) or project(g, r))}
    if len(inits) != 1:
        raise ProjectionError("NoUniqueInitiator", None,
                              f"expected exactly one initiator, found {sorted(inits) or 'none'}", g)
    (init,) = inits
    if not role_enabled({init}, unfold1(g)):
        raise ProjectionError("NotRoleEnabled", init,
                              f"the global type is not role-enabled from {init}", g)
    return local


def project_protocol(gp: GlobalProtocol) -> Protocol:
    roles = gp.roles or tuple(sorted(global_roles(gp.gtype)))
    local = project_all(gp.gtype, roles)
    return Protocol(gp.name, tuple((r, local[r]) for r in roles))
