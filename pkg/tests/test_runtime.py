import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sessadapt import syntax as ast
from sessadapt.frontend import parse_program
from sessadapt.runtime import (
    ALL_QUIESCENT, STEP_LIMIT, STUCK, ActorState, Configuration, FaultTrigger, InSession, Redex,
    StaleRedex, apply, enabled_redexes, init_configuration, load_fault_plan, run,
)
from sessadapt.runtime.preservation import PreservationHarness
from sessadapt.runtime.terms import decompose, subst_value, term_step
from sessadapt.syntax import VActor, VLit, VUnit

COURIER_FAULT = [FaultTrigger("Courier", "E-Comm", 1)]


def _actor(prog, name, cls, term=None, conn=None, behaviour=None):
    d = prog.definition(cls)
    term = d.body if term is None else term
    return ActorState(name, cls, d.declared, term, conn, d.body if behaviour is None else behaviour)


def _config(prog, *actors, zappers=frozenset()):
    return Configuration(tuple(actors), frozenset(zappers), len(actors) + 1, 0, prog, prog.types())


def _connecting_customer(prog, target="a1"):
    term = ast.seq(ast.ConnectTo("login", VLit("alice"), VActor(target), "Store"), ast.Return(VUnit()))
    return _actor(prog, "a2", "Customer", term=term, behaviour=ast.Stop())


def test_initial_configuration(store_program):
    cfg = init_configuration(store_program)
    assert len(cfg.actors) == 1
    assert cfg.sessions() == {}
    assert cfg.actors[0].cls is None


def test_empty_boot():
    prog = parse_program("protocol P { role p: end; } boot { return () }")
    out = run(prog)
    assert out.status == ALL_QUIESCENT
    assert out.steps == 0


def test_boot_spawns_three(store_program):
    out = run(store_program, seed=3)
    news = [e for e in out.trace if e.rule == "E-New"]
    assert [e.detail for e in news] == ["Courier", "Store", "Customer"]
    assert len(out.final.actors) == 4


def test_conn_init_redex(store_program):
    cfg = _config(store_program, _actor(store_program, "a1", "Store"), _connecting_customer(store_program))
    assert Redex("E-ConnInit", ("a2", "a1"), "login") in enabled_redexes(cfg)


def test_conn_fail_on_terminated(store_program):
    done = _actor(store_program, "a1", "Store", term=ast.Return(VUnit()), behaviour=ast.Stop())
    cfg = _config(store_program, done, _connecting_customer(store_program))
    rules = [r.rule for r in enabled_redexes(cfg)]
    assert "E-ConnFail" in rules
    assert "E-ConnInit" not in rules
    cfg2, _ = apply(cfg, Redex("E-ConnFail", ("a2", "a1"), "login"))
    assert decompose(cfg2.actor("a2").term)[1] == ast.Raise()


def test_terminated_actor_has_no_redex(store_program):
    done = ActorState("a1", None, ast.END, ast.Return(VUnit()), None, ast.Stop())
    assert enabled_redexes(_config(store_program, done)) == []


def test_apply_conn_init(store_program):
    store = _actor(store_program, "a1", "Store")
    cfg = _config(store_program, store, _connecting_customer(store_program))
    cfg2, ev = apply(cfg, Redex("E-ConnInit", ("a2", "a1"), "login"))
    cust, st = cfg2.actor("a2"), cfg2.actor("a1")
    assert cust.conn == InSession("s0", "Customer", frozenset({"Store"}))
    assert st.conn == InSession("s0", "Store", frozenset({"Customer"}))
    assert cust.term == ast.seq(ast.Return(VUnit()), ast.Return(VUnit()))
    (case,) = store.term.cases
    assert st.term == subst_value(case.body, "credentials", VLit("alice"))
    assert (ev.session, ev.label, ev.payload) == ("s0", "login", '"alice"')


def test_stale_redex_is_rejected(store_program):
    cfg = _config(store_program, _actor(store_program, "a1", "Store"))
    with pytest.raises(StaleRedex):
        apply(cfg, Redex("E-ConnInit", ("a2", "a1"), "login"))


def test_fail_s_leaves_zapper(store_program):
    store = _actor(store_program, "a1", "Store", term=ast.Raise(),
                   conn=InSession("s0", "Store", frozenset({"Customer"})))
    cust = _actor(store_program, "a2", "Customer", term=ast.WaitFor("Store"),
                  conn=InSession("s0", "Customer", frozenset({"Store"})), behaviour=ast.Stop())
    cfg = _config(store_program, store, cust)
    cfg2, _ = apply(cfg, Redex("E-FailS", ("a1",)))
    assert cfg2.actor("a1").conn is None
    assert cfg2.actor("a1").term == ast.Raise()
    assert cfg2.zappers == {("s0", "Store")}
    assert Redex("E-CommRaise", ("a2",), "Store") in enabled_redexes(cfg2)


def test_all_zapped_session_is_collected(store_program):
    store = _actor(store_program, "a1", "Store", term=ast.Raise(),
                   conn=InSession("s0", "Store", frozenset({"Customer"})))
    cfg = _config(store_program, store, zappers={("s0", "Customer")})
    cfg2, ev = apply(cfg, Redex("E-FailS", ("a1",)))
    assert cfg2.zappers == frozenset()
    assert cfg2.sessions() == {}
    assert "collected s0" in ev.detail


def test_term_steps():
    m = ast.Let("x", ast.Return(VLit(1)), ast.Return(ast.VVar("x")))
    assert term_step(m) == ("E-Let", ast.Return(VLit(1)))
    loop = ast.Loop("L", ast.Continue("L"))
    assert term_step(loop)[0] == "E-Rec"
    assert term_step(ast.Try(ast.Raise(), ast.Return(VUnit())))[0] == "E-TryRaise"


def test_run_onlinestore(store_program):
    out = run(store_program, seed=0, max_steps=10_000)
    assert out.status == ALL_QUIESCENT
    assert not out.final.zappers
    kinds = {v.cls: v.kind for v in out.actors}
    assert kinds == {None: "terminated", "Customer": "terminated", "Store": "accepting",
                     "Courier": "accepting"}


def test_run_with_fault(store_program):
    out = run(store_program, seed=1, fault_plan=COURIER_FAULT)
    assert out.status == ALL_QUIESCENT
    assert any(e.rule == "Fault" for e in out.trace)
    assert any(e.detail and "collected" in e.detail for e in out.trace)


def test_unmatched_discover_is_diagnosed():
    prog = parse_program("""
        protocol P { role p: q!!a().end; role q: p??a().end; }
        actor A follows ty(p) {
          let x = discover ty(q) in connect a() to x as q
        }
        boot { let a = new A in return () }
    """)
    out = run(prog)
    assert out.status == STUCK
    assert [v.kind for v in out.actors if v.cls == "A"] == ["unmatched-discover"]
    timed = run(prog, discover_timeout=2)
    assert any(e.rule == "DiscoverTimeout" for e in timed.trace)


def test_step_limit(store_program):
    assert run(store_program, max_steps=3).status == STEP_LIMIT


def test_trace_is_json_lines(store_program):
    out = run(store_program, seed=4)
    lines = out.trace_jsonl().splitlines()
    assert len(lines) == len(out.trace)
    first = json.loads(lines[0])
    assert {"step", "rule", "actors", "session", "roles", "label"} <= set(first)


def test_fault_plan_parsing():
    plan = load_fault_plan('[{"actorClass": "Courier", "afterRule": "E-Comm", "occurrence": 1}]')
    assert plan == COURIER_FAULT
    with pytest.raises(ValueError):
        load_fault_plan('{"actorClass": "Courier"}')


def test_preservation_on_a_few_seeds(store_program, dns_program):
    for prog, plan in ((store_program, []), (store_program, COURIER_FAULT), (dns_program, [])):
        for seed in range(5):
            harness = PreservationHarness(prog)
            out = run(prog, seed=seed, fault_plan=plan, observer=harness.observe)
            assert out.status == ALL_QUIESCENT
            assert harness.checked_steps == len(out.trace)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_runs_are_deterministic(store_program, seed):
    a = run(store_program, seed=seed, fault_plan=COURIER_FAULT)
    b = run(store_program, seed=seed, fault_plan=COURIER_FAULT)
    assert a.trace_jsonl() == b.trace_jsonl()
    assert a.final == b.final


def test_runs_on_threads_match_sequential(store_program):
    from concurrent.futures import ThreadPoolExecutor

    seeds = range(8)
    sequential = [run(store_program, seed=s, fault_plan=COURIER_FAULT).trace_jsonl() for s in seeds]
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = list(pool.map(lambda s: run(store_program, seed=s, fault_plan=COURIER_FAULT).trace_jsonl(),
                                 seeds))
    assert threaded == sequential
