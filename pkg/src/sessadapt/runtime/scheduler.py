"""Seeded scheduler: uniform random choice over the enabled redexes."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .. import syntax as ast
from ..syntax import type_equal
from .config import ActorState, Configuration, init_configuration
from .semantics import TraceEvent, apply, enabled_redexes
from .terms import decompose

ALL_QUIESCENT = "AllQuiescent"
STEP_LIMIT = "StepLimit"
STUCK = "StuckDiagnosis"


@dataclass(frozen=True)
class FaultTrigger:
    """After the ``occurrence``-th application of ``after_rule`` touching an ``actor_class`` actor,
    that actor's current focus is replaced by ``raise``."""

    actor_class: str
    after_rule: str
    occurrence: int = 1

    @classmethod
    def from_json(cls, obj: dict) -> "FaultTrigger":
        occ = int(obj.get("occurrence", 1))
        if occ < 1:
            raise ValueError("occurrence must be at least 1")
        return cls(str(obj["actorClass"]), str(obj["afterRule"]), occ)

    def to_json(self) -> dict:
        return {"actorClass": self.actor_class, "afterRule": self.after_rule,
                "occurrence": self.occurrence}


def load_fault_plan(text: str) -> list[FaultTrigger]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("a fault plan is a JSON list of triggers")
    return [FaultTrigger.from_json(t) for t in data]


@dataclass(frozen=True)
class ActorVerdict:
    actor: str
    cls: str | None
    kind: str  # terminated | accepting | unmatched-discover | stuck

    def to_json(self) -> dict:
        return {"actor": self.actor, "class": self.cls, "kind": self.kind}


@dataclass
class Outcome:
    status: str
    trace: list[TraceEvent]
    final: Configuration
    actors: list[ActorVerdict] = field(default_factory=list)
    steps: int = 0

    @property
    def quiescent(self) -> bool:
        return self.status == ALL_QUIESCENT

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in self.trace)

    def to_json(self) -> dict:
        return {"status": self.status, "steps": self.steps,
                "actors": [v.to_json() for v in self.actors],
                "zappers": len(self.final.zappers), "sessions": sorted(self.final.sessions())}


def unmatched_discover(cfg: Configuration, a: ActorState) -> bool:
    f = a.focus
    if not isinstance(f, ast.Discover):
        return False
    return not any(b is not a and b.cls is not None and not b.terminated and type_equal(b.static, f.stype)
                   for b in cfg.actors)


def classify(cfg: Configuration) -> list[ActorVerdict]:
    out = []
    for a in cfg.actors:
        if a.terminated:
            kind = "terminated"
        elif a.accepting:
            kind = "accepting"
        elif unmatched_discover(cfg, a):
            kind = "unmatched-discover"
        else:
            kind = "stuck"
        out.append(ActorVerdict(a.name, a.cls, kind))
    return out


def inject_raise(cfg: Configuration, name: str) -> Configuration:
    a = cfg.actor(name)
    ctx, _ = decompose(a.term)
    return cfg.update(replace(a, term=ctx.plug(ast.Raise())))


def run(prog: ast.Program, seed: int = 0, max_steps: int = 10_000,
        fault_plan: Iterable[FaultTrigger] = (), discover_timeout: int | None = None,
        observer: Callable[[Configuration, TraceEvent, Configuration], None] | None = None) -> Outcome:
    """Runs ``prog`` from its initial configuration until no redex is enabled or ``max_steps``.

    ``observer(before, event, after)`` is called after each step (the preservation harness
    hooks in here).  ``discover_timeout`` turns a discover that stays unmatched for that many
    scheduler ticks into ``raise``; it is off by default.
    """
    rng = random.Random(seed)
    plan = list(fault_plan)
    counts = [0] * len(plan)
    fired = [False] * len(plan)
    waiting: dict[str, int] = {}
    cfg = init_configuration(prog)
    trace: list[TraceEvent] = []
    step = 0
    while True:
        redexes = enabled_redexes(cfg)
        if discover_timeout is not None:
            cfg, timed_out = _tick_discovers(cfg, waiting, discover_timeout)
            for name in timed_out:
                trace.append(TraceEvent(step, "DiscoverTimeout", (name,)))
            if timed_out:
                continue
        if not redexes and discover_timeout is not None and waiting:
            # nothing else can move, so the clock runs out for every pending discover
            cfg, timed_out = _tick_discovers(cfg, waiting, 0)
            for name in timed_out:
                trace.append(TraceEvent(step, "DiscoverTimeout", (name,)))
            continue
        if not redexes:
            verdicts = classify(cfg)
            ok = (all(v.kind in ("terminated", "accepting") for v in verdicts)
                  and all(a.conn is None for a in cfg.actors) and not cfg.zappers)
            return Outcome(ALL_QUIESCENT if ok else STUCK, trace, cfg, verdicts, step)
        if step >= max_steps:
            return Outcome(STEP_LIMIT, trace, cfg, classify(cfg), step)
        r = redexes[rng.randrange(len(redexes))]
        before = cfg
        cfg, ev = apply(cfg, r, step, check=False)
        trace.append(ev)
        if observer is not None:
            observer(before, ev, cfg)
        step += 1
        for i, trig in enumerate(plan):
            if fired[i] or ev.rule != trig.after_rule:
                continue
            victims = [n for n in ev.actors if cfg.actor(n).cls == trig.actor_class]
            if not victims:
                continue
            counts[i] += 1
            if counts[i] == trig.occurrence:
                fired[i] = True
                before = cfg
                cfg = inject_raise(cfg, victims[0])
                fault = TraceEvent(step, "Fault", (victims[0],), detail=f"after {trig.after_rule}")
                trace.append(fault)
                if observer is not None:
                    observer(before, fault, cfg)


def _tick_discovers(cfg: Configuration, waiting: dict[str, int], limit: int):
    timed_out = []
    for a in cfg.actors:
        if unmatched_discover(cfg, a):
            waiting[a.name] = waiting.get(a.name, 0) + 1
            if waiting[a.name] > limit:
                timed_out.append(a.name)
        else:
            waiting.pop(a.name, None)
    for name in timed_out:
        waiting.pop(name, None)
        cfg = inject_raise(cfg, name)
    return cfg, timed_out
