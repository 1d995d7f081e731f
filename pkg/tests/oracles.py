"""Independent reference implementations used to cross-check the library.

The safety oracle below re-implements single-session environment reduction
directly on type terms (unfolding by substitution, no type graph, no shared
LTS code) and enumerates every interleaving breadth-first.
"""

from __future__ import annotations

import random
from collections import deque

from sessadapt import syntax as ast
from sessadapt.env_lts import TypeGraph
from sessadapt.projection import ProjectionError, project_all, unique_initiator
from sessadapt.syntax import (
    END, UNIT, Action, ActionKind, BaseType, Choice, Disconnect, GChoice, GRec, GVar, Protocol, Rec, Var,
    gconnect, gdisconnect, msg, payload_equal,
)

# ---------------------------------------------------------------------------
# Brute-force safety
# ---------------------------------------------------------------------------


def _subst(t, x, r):
    if isinstance(t, Var):
        return r if t.name == x else t
    if isinstance(t, Rec):
        return t if t.var == x else Rec(t.var, _subst(t.body, x, r))
    if isinstance(t, Choice):
        return Choice(tuple((a, _subst(c, x, r)) for a, c in t.branches))
    return t


def _head(t):
    while isinstance(t, Rec):
        t = _subst(t.body, t.var, t)
    return t


def _accepts(declared, p, label, payload):
    h = _head(declared)
    if not isinstance(h, Choice) or not all(a.kind is ActionKind.ACCEPT and a.peer == p for a in h.actions):
        return None
    for a, c in h.branches:
        if a.label == label and payload_equal(a.payload, payload):
            return c
    return None


def _unsafe(state: dict, table: dict) -> bool:
    for p, (t, conn) in state.items():
        h = _head(t)
        if not isinstance(h, Choice):
            continue
        for a in h.actions:
            q = a.peer
            if a.kind is ActionKind.SEND and q in state:
                qt, qconn = state[q]
                qh = _head(qt)
                if isinstance(qh, Choice) and all(b.kind is ActionKind.RECV and b.peer == p for b in qh.actions):
                    hits = [b for b in qh.actions if b.label == a.label]
                    if not hits or q not in conn or p not in qconn:
                        return True
                    if not payload_equal(hits[0].payload, a.payload):
                        return True
            if a.kind is ActionKind.CONNECT:
                if q in state or q in conn or q not in table:
                    return True
                if _accepts(table[q], p, a.label, a.payload) is None:
                    return True
    return False


def _successors(state: dict, table: dict):
    for p, (t, conn) in state.items():
        h = _head(t)
        if isinstance(h, Choice):
            for a, cont in h.branches:
                q = a.peer
                if a.kind is ActionKind.CONNECT and q not in state and q in table:
                    qcont = _accepts(table[q], p, a.label, a.payload)
                    if qcont is not None:
                        nxt = dict(state)
                        nxt[p] = (cont, conn | {q})
                        nxt[q] = (qcont, frozenset({p}))
                        yield nxt
                elif a.kind is ActionKind.SEND and q in conn and q in state:
                    qt, qconn = state[q]
                    qh = _head(qt)
                    if p not in qconn or not isinstance(qh, Choice):
                        continue
                    for b, qcont in qh.branches:
                        if (b.kind is ActionKind.RECV and b.peer == p and b.label == a.label
                                and payload_equal(a.payload, b.payload)):
                            nxt = dict(state)
                            nxt[p] = (cont, conn)
                            nxt[q] = (qcont, qconn)
                            yield nxt
                elif a.kind is ActionKind.WAIT and q in conn and q in state:
                    qt, qconn = state[q]
                    qh = _head(qt)
                    if isinstance(qh, Disconnect) and qh.peer == p and qconn == {p}:
                        nxt = dict(state)
                        nxt[p] = (cont, conn - {q})
                        del nxt[q]
                        yield nxt


def _key(state: dict):
    return frozenset((p, ast.canonical(_head(t)), c) for p, (t, c) in state.items())


def oracle_safe(p: Protocol, limit: int = 50_000) -> bool:
    """True iff no interleaving from the initiator's entry reaches an unsafe state."""
    table = p.as_dict()
    init = unique_initiator(p)
    if init is None:
        return False
    start = {init: (table[init], frozenset())}
    seen = {_key(start)}
    queue = deque([start])
    while queue:
        st = queue.popleft()
        if _unsafe(st, table):
            return False
        for nxt in _successors(st, table):
            k = _key(nxt)
            if k not in seen:
                if len(seen) >= limit:
                    raise RuntimeError("oracle state limit")
                seen.add(k)
                queue.append(nxt)
    return True


def graph_size(p: Protocol) -> int:
    """Number of type-graph nodes needed for every subterm of every role type."""
    g = TypeGraph()
    for _, t in p.entries:
        for sub in ast.subterms(t):
            if ast.is_closed(sub):
                g.intern(sub)
        g.intern(t)
    return len(g)


# ---------------------------------------------------------------------------
# Random global types
# ---------------------------------------------------------------------------

ROLES = ("Alice", "Bob", "Carol")
GLABELS = ("a", "b", "c", "go", "stop")
GPAYLOADS = (UNIT, BaseType("Int"), BaseType("String"))


def _close(joined: list[tuple[str, str]]):
    """Disconnections of every joined role from its connector, most recent first."""
    g = ast.GEND
    for q, by in joined:
        g = ast.gprefix(gdisconnect(q, by), g)
    return g


def _gen(rng: random.Random, joined: list[tuple[str, str]], depth: int, loop: str | None):
    members = ["Alice"] + [q for q, _ in joined]
    pairs = [(q, by) for q, by in joined] + [(by, q) for q, by in joined]
    outside = [r for r in ROLES if r not in members]
    options = ["close"]
    if depth > 0 and pairs:
        options += ["msg", "msg", "choice"]
        if loop is None and depth > 1:
            options.append("rec")
    if depth > 0 and outside:
        options += ["connect", "connect"]
    kind = rng.choice(options)
    if kind == "close":
        if loop is not None and rng.random() < 0.5:
            return GVar(loop)
        return _close(joined)
    if kind == "msg":
        src, dst = rng.choice(pairs)
        return ast.gprefix(msg(src, dst, rng.choice(GLABELS), rng.choice(GPAYLOADS)),
                           _gen(rng, joined, depth - 1, loop))
    if kind == "connect":
        src = rng.choice(members)
        dst = rng.choice(outside)
        # roles that are already in the session are joined only once, so a loop body cannot connect
        if loop is not None:
            return _close(joined)
        return ast.gprefix(gconnect(src, dst, rng.choice(GLABELS), rng.choice(GPAYLOADS)),
                           _gen(rng, [(dst, src)] + joined, depth - 1, loop))
    if kind == "rec":
        body = _choice(rng, pairs, joined, depth - 1, "X", force_loop=True)
        return GRec("X", body)
    return _choice(rng, pairs, joined, depth - 1, loop)


def _choice(rng, pairs, joined, depth, loop, force_loop=False):
    src, dst = rng.choice(pairs)
    labels = rng.sample(GLABELS, 2)
    conts = [_gen(rng, joined, depth, loop) for _ in labels]
    if force_loop:
        conts[0] = ast.gprefix(msg(dst, src, "ack", UNIT), GVar(loop))
        conts[1] = _gen(rng, joined, depth, None)
    return GChoice(tuple((msg(src, dst, l, rng.choice(GPAYLOADS)), c) for l, c in zip(labels, conts)))


def random_global(rng: random.Random, depth: int = 4):
    first = rng.choice(["Bob", "Carol"])
    return ast.gprefix(gconnect("Alice", first, "hello", rng.choice(GPAYLOADS)),
                       _gen(rng, [(first, "Alice")], depth, None))


def random_projected(rng: random.Random, depth: int = 4, tries: int = 50) -> Protocol | None:
    for _ in range(tries):
        g = random_global(rng, depth)
        try:
            locals_ = project_all(g)
        except ProjectionError:
            continue
        return Protocol("Gen", tuple(sorted(locals_.items())))
    return None


# ---------------------------------------------------------------------------
# Mutations
# ---------------------------------------------------------------------------


def _actions(t):
    return [n for n in ast.subterms(t) if isinstance(n, Choice)]


def _rewrite_action(t, target: Choice, index: int, new: Action):
    if t is target:
        branches = list(t.branches)
        branches[index] = (new, branches[index][1])
        return Choice(tuple(branches))
    if isinstance(t, Rec):
        return Rec(t.var, _rewrite_action(t.body, target, index, new))
    if isinstance(t, Choice):
        return Choice(tuple((a, _rewrite_action(c, target, index, new)) for a, c in t.branches))
    return t


def mutate(rng: random.Random, p: Protocol) -> Protocol | None:
    """Changes one payload or label in one role; ``None`` if nothing changed."""
    role, t = rng.choice(p.entries)
    nodes = _actions(t)
    if not nodes:
        return None
    node = rng.choice(nodes)
    i = rng.randrange(len(node.branches))
    a = node.actions[i]
    if a.kind is ActionKind.WAIT:
        return None
    if rng.random() < 0.5:
        others = [x for x in GPAYLOADS if not payload_equal(x, a.payload)]
        new = Action(a.kind, a.peer, a.label, rng.choice(others))
    else:
        taken = {b.label for b in node.actions}
        free = [l for l in GLABELS + ("zz",) if l not in taken]
        new = Action(a.kind, a.peer, rng.choice(free), a.payload)
    entries = tuple((r, _rewrite_action(s, node, i, new) if r == role else s) for r, s in p.entries)
    return Protocol(p.name, entries)


def drop_disconnect(p: Protocol, role: str) -> Protocol:
    """Replaces every ``disconnect`` in ``role``'s type by ``end``."""

    def go(t):
        if isinstance(t, Disconnect):
            return END
        if isinstance(t, Rec):
            return Rec(t.var, go(t.body))
        if isinstance(t, Choice):
            return Choice(tuple((a, go(c)) for a, c in t.branches))
        return t

    return Protocol(p.name, tuple((r, go(s) if r == role else s) for r, s in p.entries))


# ---------------------------------------------------------------------------
# Naive projection of recursion-free global types
# ---------------------------------------------------------------------------


def naive_project(g, r):
    """Branch-by-branch projection without recursion; ``None`` where undefined.

    Each branch is projected separately, ``end`` branches are pruned when some
    branch acts, and the survivors are unioned provided they agree on shared
    actions and all point one way.
    """
    if isinstance(g, ast.GEnd):
        return END
    parts = []
    for a, cont in g.branches:
        rest = naive_project(cont, r)
        if rest is None:
            return None
        if a.kind is ast.GlobalKind.DISCONNECT:
            if r == a.src:
                if rest != END:
                    return None
                parts.append(Disconnect(a.dst))
            elif r == a.dst:
                parts.append(ast.prefix(ast.wait(a.src), rest))
            else:
                parts.append(rest)
            continue
        conn = a.kind is ast.GlobalKind.CONNECT
        if r == a.src:
            parts.append(ast.prefix(Action(ActionKind.CONNECT if conn else ActionKind.SEND,
                                           a.dst, a.label, a.payload), rest))
        elif r == a.dst:
            parts.append(ast.prefix(Action(ActionKind.ACCEPT if conn else ActionKind.RECV,
                                           a.src, a.label, a.payload), rest))
        else:
            parts.append(rest)
    if len(parts) == 1:
        return parts[0]
    acting = [x for x in parts if x != END]
    if not acting:
        return END
    if not all(isinstance(x, Choice) for x in acting):
        return None
    merged = {}
    for x in acting:
        for a, c in x.branches:
            if a.key in merged and merged[a.key] != (a, c):
                return None
            merged[a.key] = (a, c)
    result = Choice(tuple(merged.values()))
    if not ast.syntactically_valid(result):
        return None
    return result


def random_recfree_global(rng: random.Random, depth: int = 3):
    """Small recursion-free global types over three roles, not necessarily well formed."""
    if depth == 0 or rng.random() < 0.2:
        return ast.GEND
    n = rng.choice([1, 1, 2])
    src = rng.choice(ROLES)
    branches = []
    for label in rng.sample(GLABELS, n):
        dst = rng.choice([x for x in ROLES if x != src])
        kind = rng.choice([ast.GlobalKind.MSG, ast.GlobalKind.MSG, ast.GlobalKind.CONNECT])
        branches.append((ast.GlobalAction(kind, src, dst, label, UNIT), random_recfree_global(rng, depth - 1)))
    return GChoice(tuple(branches))
