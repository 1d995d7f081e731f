from hypothesis import given, settings
from hypothesis import strategies as st

from sessadapt.env_lts import (
    Comm, ConnPair, DiscPair, Pair, RuntimeEnv, TypeGraph, Zap, env_local_steps, env_sync_steps,
    flattenings, is_output_flat, reachable, zap_env,
)
from sessadapt.frontend import parse_local_type as lt
from sessadapt.syntax import END, BaseType, Disconnect, Protocol, TypeTable, prefix, send, unfold, wait

from strategies import ROLE_POOL, local_types

STR = BaseType("String")


def _browse_env(onlinestore):
    env0 = RuntimeEnv.initial("Customer", onlinestore["Customer"])
    (_, env1), = env_sync_steps(env0, TypeTable(onlinestore))
    return env1


def test_connect_step(onlinestore):
    table = TypeTable(onlinestore)
    env0 = RuntimeEnv.initial("Customer", onlinestore["Customer"])
    steps = env_local_steps(env0, table)
    assert len(steps) == 1
    label, env1 = steps[0]
    assert (label.subject, label.peer, label.label) == ("Customer", "Store", "login")
    assert env1.entry(("s", "Customer")).connected == {"Store"}
    assert env1.entry(("s", "Store")).connected == {"Customer"}
    assert env_sync_steps(env0, table)[0][0] == ConnPair("s", "Customer", "Store", "login")


def test_send_step():
    env = RuntimeEnv.of({("s", "p"): ({"q"}, prefix(send("q", "item", STR), END))})
    (label, nxt), = env_local_steps(env, TypeTable(Protocol("P", (("p", END), ("q", END)))))
    assert label == Comm("!", "s", "p", "q", "item", STR)
    assert nxt.entry(("s", "p")).stype == END


def test_end_has_no_steps():
    env = RuntimeEnv.of({("s", "p"): ((), END)})
    assert env_local_steps(env, TypeTable(Protocol("P", (("p", END),)))) == []


def test_browse_pairs(onlinestore):
    env = _browse_env(onlinestore)
    labels = {lab for lab, _ in env_sync_steps(env, TypeTable(onlinestore))}
    assert labels == {Pair("s", "Customer", "Store", x) for x in ("item", "address", "quit")}


def test_disconnect_pair():
    table = TypeTable(Protocol("P", (("p", END), ("q", END))))
    env = RuntimeEnv.of({("s", "p"): ({"q"}, prefix(wait("q"), END)), ("s", "q"): ({"p"}, Disconnect("p"))})
    (label, nxt), = env_sync_steps(env, table)
    assert label == DiscPair("s", "p", "q")
    assert nxt == RuntimeEnv.of({("s", "p"): ((), END)})


def test_wait_on_zapped_peer():
    table = TypeTable(Protocol("P", (("p", END), ("q", END))))
    env = RuntimeEnv.of({("s", "q"): ({"p"}, prefix(wait("p"), END))}, zapped=[("s", "p")])
    assert env_sync_steps(env, table) == []
    (label, nxt), = env_sync_steps(env, table, exception_aware=True)
    assert label == Zap("s", "p", "q")
    assert nxt.zapped == {("s", "p"), ("s", "q")}
    assert nxt.is_failed()


def test_reachable_onlinestore(onlinestore):
    env0 = RuntimeEnv.initial("Customer", onlinestore["Customer"])
    reach = reachable(env0, TypeTable(onlinestore))
    assert 5 < len(reach) < 100
    assert any(st.is_final() for st in reach.states)


def test_reachable_end_is_singleton():
    env0 = RuntimeEnv.initial("p", END)
    assert len(reachable(env0, TypeTable(Protocol("P", (("p", END),))))) == 1


def test_blocked_connect():
    table = TypeTable(Protocol("P", (("p", lt("q!!a().end")), ("q", lt("p??b().end")))))
    env0 = RuntimeEnv.initial("p", table["p"])
    assert len(reachable(env0, table)) == 1


def test_zap_env():
    env = RuntimeEnv.of({("s", "p"): ({"q"}, END), ("s", "q"): ({"p"}, END)})
    assert zap_env(env, ["q"]) == RuntimeEnv.of({("s", "p"): ({"q"}, END)}, zapped=[("s", "q")])
    assert zap_env(env, []) == env
    assert zap_env(zap_env(env, ["p"]), ["q"]) == zap_env(env, ["p", "q"])


def test_flatten_output_choice():
    s = lt("q!a(Int).end + q!b(Int).end")
    env = RuntimeEnv.of({("s", "p"): ({"q"}, s)})
    flats = flattenings(env)
    assert len(flats) == 2
    assert all(is_output_flat(f) for f in flats)
    plain = RuntimeEnv.of({("s", "p"): ({"q"}, lt("q?a(Int).end + q?b(Int).end"))})
    assert flattenings(plain) == [plain]


def test_flatten_browse(onlinestore):
    env = _browse_env(onlinestore)
    flats = flattenings(env)
    assert len(flats) == 3
    for f in flats:
        assert f.entry(("s", "Store")) == env.entry(("s", "Store"))


def test_graph_interns_unfoldings(onlinestore):
    g = TypeGraph()
    browse = onlinestore["Customer"].branches[0][1]
    assert g.intern(browse) == g.intern(unfold(browse))


def _random_env(draw):
    entries = {}
    for r in ROLE_POOL:
        if draw(st.booleans()):
            others = tuple(x for x in ROLE_POOL if x != r)
            peers = draw(st.sets(st.sampled_from(others)))
            entries[("s", r)] = (peers, draw(local_types(r, others, depth=2, allow_accept=False)))
    return RuntimeEnv.of(entries)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_sync_steps_stay_linear(data):
    table = TypeTable(Protocol("P", tuple((r, data.draw(local_types(r, tuple(x for x in ROLE_POOL if x != r),
                                                                     depth=2)))
                                          for r in ROLE_POOL)))
    env = _random_env(data.draw)
    for _, nxt in env_sync_steps(env, table, exception_aware=True):
        keys = nxt.keys()
        assert len(keys) == len(set(keys))
        assert not set(keys) & nxt.zapped


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_zap_composes(data):
    env = _random_env(data.draw)
    keys = env.keys()
    split = data.draw(st.integers(0, len(keys)))
    a, b = keys[:split], keys[split:]
    assert zap_env(zap_env(env, a), b) == zap_env(env, a + b)
