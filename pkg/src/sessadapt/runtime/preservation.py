"""Debug harness re-deriving configuration typing after every reduction step.

Each live session carries a runtime typing environment.  After a step the
harness looks for a successor of that environment (itself, one exception-aware
synchronisation, or one spontaneously zapped role) under which every session
member and zapper thread of the new configuration is typable, and which is
safe and satisfies progress.  Disconnected actors are typed at their static
type or ``end``.
"""

from __future__ import annotations

from .. import syntax as ast
from ..checks import check_progress_env, safety_violation
from ..env_lts import RuntimeEnv, TypeGraph, env_sync_steps, zap_env
from ..syntax import END
from ..typecheck import Signature, TypeContext, TypingError, is_end_post, type_behaviour, type_computation
from .config import ActorState, Configuration
from .semantics import TraceEvent


class PreservationError(AssertionError):
    pass


class PreservationHarness:
    def __init__(self, prog: ast.Program):
        self.sig = Signature.of(prog)
        self.table = self.sig.table
        self.graph = TypeGraph()
        self.envs: dict[str, RuntimeEnv] = {}
        self._verdicts: dict[tuple, bool] = {}
        self.checked_steps = 0

    # typing of individual actors -------------------------------------------

    def _ctx(self, cfg: Configuration) -> TypeContext:
        return TypeContext(actors={a.name: a.static for a in cfg.actors})

    def _types_at(self, ctx: TypeContext, a: ActorState, pre: ast.LocalType) -> str | None:
        try:
            _, post = type_computation(ctx, a.static, pre, a.term, self.sig)
            if not is_end_post(post):
                return f"{a.name} leaves {post} unconsumed"
            type_behaviour(ctx.without_loops(), a.static, a.behaviour, self.sig)
        except TypingError as exc:
            return f"{a.name}: {exc}"
        return None

    def _disconnected_ok(self, ctx: TypeContext, a: ActorState) -> str | None:
        first = self._types_at(ctx, a, a.static)
        if first is None:
            return None
        second = self._types_at(ctx, a, END)
        return None if second is None else first

    # sessions --------------------------------------------------------------

    def _env_ok(self, env: RuntimeEnv) -> bool:
        key = env.index(self.graph)
        hit = self._verdicts.get(key)
        if hit is None:
            hit = (safety_violation(env, self.table, self.graph) is None
                   and check_progress_env(env, self.table, exception_aware=True).passed)
            self._verdicts[key] = hit
        return hit

    def _candidates(self, env: RuntimeEnv) -> list[RuntimeEnv]:
        out = [env]
        out.extend(nxt for _, nxt in env_sync_steps(env, self.table, True, self.graph))
        out.extend(zap_env(env, [k]) for k in env.keys())
        return out

    def _matches(self, env: RuntimeEnv, s: str, cfg: Configuration, ctx: TypeContext) -> str | None:
        members = {a.conn.role: a for a in cfg.by_session(s)}
        zaps = {p for t, p in cfg.zappers if t == s}
        live = {p: e for (t, p), e in env.sessions}
        zapped = {p for t, p in env.zapped}
        if set(members) != set(live):
            return f"session roles {sorted(members)} do not match entries {sorted(live)}"
        if zaps != zapped:
            return f"zapper threads {sorted(zaps)} do not match zapped roles {sorted(zapped)}"
        for p, a in members.items():
            e = live[p]
            if a.conn.peers != e.connected:
                return f"{a.name} is connected to {sorted(a.conn.peers)}, entry says {sorted(e.connected)}"
            err = self._types_at(ctx, a, e.stype)
            if err:
                return err
        return None

    def observe(self, before: Configuration, event: TraceEvent, after: Configuration) -> None:
        ctx = self._ctx(after)
        for a in after.actors:
            if a.conn is None:
                err = self._disconnected_ok(ctx, a)
                if err:
                    raise PreservationError(f"step {event.step} ({event.rule}): {err}")
        sessions = after.sessions()
        new_envs: dict[str, RuntimeEnv] = {}
        for s in sorted(sessions):
            old = self.envs.get(s)
            if old is None:
                old = self._opening_env(after, s)
            errors = []
            for cand in self._candidates(old):
                err = self._matches(cand, s, after, ctx)
                if err is None and not self._env_ok(cand):
                    err = f"environment {cand.render()} is not safe with progress"
                if err is None:
                    new_envs[s] = cand
                    break
                errors.append(err)
            else:
                raise PreservationError(f"step {event.step} ({event.rule}): session {s} untypable: "
                                        + "; ".join(dict.fromkeys(errors)))
        for s, old in self.envs.items():
            if s in sessions:
                continue
            if not any(not c.sessions or c.is_final() for c in self._candidates(old)):
                raise PreservationError(f"step {event.step} ({event.rule}): session {s} vanished "
                                        f"from {old.render()}")
        self.envs = new_envs
        self.checked_steps += 1

    def _opening_env(self, cfg: Configuration, s: str) -> RuntimeEnv:
        members = cfg.by_session(s)
        initiators = [a for a in members if a.conn.role in self.table and ast.active(self.table[a.conn.role])]
        if len(initiators) != 1:
            raise PreservationError(f"session {s} was not opened by a single initiator")
        p = initiators[0].conn.role
        return RuntimeEnv.initial(p, self.table[p], s)
