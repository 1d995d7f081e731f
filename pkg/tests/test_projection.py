import json
import os
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sessadapt import syntax as ast
from sessadapt.frontend import parse_global_type, parse_local_type, parse_protocol
from sessadapt.projection import (
    ProjectionError, initiators, project, project_all, project_protocol, role_enabled, unfold1,
    unique_initiator,
)
from sessadapt.syntax import END, GEND, Protocol, gprefix, msg, syntactically_valid, type_equal

from conftest import GOLDEN, read_fixture
from oracles import ROLES, naive_project, random_projected, random_recfree_global


def _global():
    return parse_protocol(read_fixture("onlinestore_global.mpst")).global_protocol("OnlineStore")


def test_unfold1_replaces_variable_by_end():
    g = parse_global_type("rec X { p -> q: a(Int). X }")
    assert unfold1(g) == gprefix(msg("p", "q", "a", ast.BaseType("Int")), GEND)
    assert unfold1(GEND) == GEND


def test_unfold1_onlinestore_is_recursion_free():
    g = unfold1(_global().gtype)
    assert not any(isinstance(n, (ast.GRec, ast.GVar)) for n in ast.gsubterms(g))


def test_role_enabling():
    g = _global().gtype
    assert role_enabled({"Customer"}, unfold1(g))
    assert not role_enabled(set(), gprefix(msg("p", "q", "a"), GEND))
    two = parse_global_type("p -> q: a().end + q -> p: b().end")
    assert not role_enabled({"p"}, two)


def test_projection_matches_golden():
    with open(os.path.join(GOLDEN, "onlinestore_projection.json"), encoding="utf-8") as fh:
        golden = json.load(fh)
    g = _global().gtype
    for role, text in golden.items():
        assert type_equal(project(g, role), parse_local_type(text)), role


def test_projection_is_literal(onlinestore):
    g = _global().gtype
    for role in ("Customer", "Store", "Courier"):
        assert project(g, role) == onlinestore[role]
    assert project(g, "Customer", normalise=True).branches[0][1].var == "Rec0"


def test_pruned_end_branch():
    g = parse_global_type("p -> q: a().end + p -> r: b().end")
    assert project(g, "q") == parse_local_type("p?a().end")
    assert project(g, "q") == naive_project(g, "q")


def test_mixed_direction_fails():
    g = parse_global_type("p -> q: a().end + p -> r: b().q -> r: d().end")
    with pytest.raises(ProjectionError) as err:
        project(g, "q")
    assert err.value.kind == "MixedDirection"


def test_two_senders_fail():
    g = parse_global_type("p -> q: a().q -> r: c().end + p -> r: b().r -> q: d().end")
    with pytest.raises(ProjectionError) as err:
        project(g, "q")
    assert err.value.kind == "InputMultiSender"


def test_disconnect_must_end():
    g = parse_global_type("p ->> q: a(). q disconnects p. q -> p: b().end")
    with pytest.raises(ProjectionError) as err:
        project(g, "q")
    assert err.value.kind == "DisconnectContinues"


def test_initiators():
    p = parse_protocol(read_fixture("onlinestore.mpst")).protocol()
    assert unique_initiator(p) == "Customer"
    assert unique_initiator(Protocol("P", (("p", END),))) is None
    two = Protocol("T", (("p", parse_local_type("q!!a().end")), ("q", parse_local_type("p!!b().end"))))
    assert initiators(two) == {"p", "q"}
    assert unique_initiator(two) is None


def test_project_protocol_roles_in_order():
    proto = project_protocol(_global())
    assert proto.roles == ("Customer", "Store", "Courier")


def test_projections_are_valid_for_random_globals():
    rng = random.Random(11)
    for _ in range(200):
        p = random_projected(rng)
        assert p is not None
        for _, s in p.entries:
            assert syntactically_valid(s)
            assert ast.accepts_only_at_top(s)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_agrees_with_naive_projection(seed):
    g = random_recfree_global(random.Random(seed))
    for r in ROLES:
        expected = naive_project(g, r)
        try:
            got = project(g, r)
        except ProjectionError:
            got = None
        assert got == expected


def test_project_all_rejects_two_initiators():
    g = parse_global_type("p ->> q: a().end + r ->> q: b().end")
    with pytest.raises(ProjectionError):
        project_all(g)
