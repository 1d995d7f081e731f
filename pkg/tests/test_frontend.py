import pytest
from hypothesis import HealthCheck, given, settings

from sessadapt import syntax as ast
from sessadapt.frontend import (
    ParseError, computation_str, global_str, local_str, parse_computation, parse_global_type,
    parse_local_type, parse_program, parse_protocol, program_str, protocol_str,
)
from sessadapt.syntax import END, GChoice, GRec, global_roles

from conftest import read_fixture
from strategies import programs, protocols


def test_parse_single_role_protocol():
    p = parse_protocol("protocol P { role p: end; }").protocol("P")
    assert p.entries == (("p", END),)


def test_parse_onlinestore_global():
    gp = parse_protocol(read_fixture("onlinestore_global.mpst")).global_protocol("OnlineStore")
    assert global_roles(gp.gtype) == {"Customer", "Store", "Courier"}
    assert isinstance(gp.gtype, GChoice)
    assert isinstance(gp.gtype.branches[0][1], GRec)


def test_dns_client_type_has_nested_lookup():
    client = parse_protocol(read_fixture("dns.mpst")).protocol("DNS")["Client"]
    assert ast.syntactically_valid(client)
    recs = [n for n in ast.subterms(client) if isinstance(n, ast.Rec)]
    assert [r.var for r in recs] == ["Lookup"]
    inner = ast.unfold_head(recs[0]).branches[0][1]
    assert [a.kind for a in inner.actions] == [ast.ActionKind.RECV] * 3
    assert not any(a.kind is ast.ActionKind.ACCEPT for n in ast.subterms(client)
                   if isinstance(n, ast.Choice) for a in n.actions)


def test_store_program_parses(store_program):
    store = store_program.definition("Store")
    assert ast.type_equal(store.declared, store_program.types()["Store"])
    assert isinstance(store.body, ast.AcceptFrom)


def test_boot_spawn_only():
    prog = parse_program("protocol P { role p: end; } actor A follows ty(p) { return () } "
                         "boot { let x = new A in return () }")
    assert isinstance(prog.boot, ast.Let)
    assert prog.boot.bound == ast.New("A")


def test_boot_must_not_communicate():
    with pytest.raises(ParseError) as err:
        parse_program("protocol P { role p: end; } actor A follows ty(p) { return () } "
                      "boot { send a() to p }")
    assert "communication" in err.value.diagnostics[0].message


def test_diagnostics_carry_positions():
    with pytest.raises(ParseError) as err:
        parse_protocol("protocol P {\n  role p: q!a(Int).end")
    d = err.value.diagnostics[0]
    assert d.line == 2
    assert d.render("x.mpst").startswith("x.mpst:2:")


def test_mixed_choice_is_a_diagnostic():
    with pytest.raises(ParseError):
        parse_protocol("protocol P { role p: q!a().end + q?b().end; role q: end; }")


def test_print_end():
    assert local_str(END) == "end"


def test_local_round_trip_onlinestore(onlinestore):
    for _, s in onlinestore.entries:
        assert parse_local_type(local_str(s)) == s


def test_global_round_trip():
    gp = parse_protocol(read_fixture("onlinestore_global.mpst")).global_protocol()
    assert parse_global_type(global_str(gp.gtype)) == gp.gtype


def test_program_round_trip(store_program, dns_program):
    for prog in (store_program, dns_program):
        assert parse_program(program_str(prog)) == prog


def test_string_escapes_round_trip():
    m = parse_computation('return "a\\"b\\\\c"')
    assert m == ast.Return(ast.VLit('a"b\\c'))
    assert parse_computation(computation_str(m)) == m


def test_computation_scoping():
    with pytest.raises(ParseError):
        parse_computation("return x")
    assert parse_computation("return x", scope=["x"]) == ast.Return(ast.VVar("x"))


@settings(max_examples=200, deadline=None, suppress_health_check=list(HealthCheck))
@given(protocols())
def test_protocol_round_trip(p):
    text = protocol_str(p)
    assert parse_protocol(text).protocol(p.name) == p
    assert protocol_str(parse_protocol(text).protocol(p.name)) == text


@settings(max_examples=60, deadline=None, suppress_health_check=list(HealthCheck))
@given(programs())
def test_program_round_trip_generated(prog):
    assert parse_program(program_str(prog)) == prog
