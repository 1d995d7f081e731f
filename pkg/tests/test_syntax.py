from hypothesis import given, settings
from hypothesis import strategies as st

from sessadapt import syntax as ast
from sessadapt.frontend import parse_local_type
from sessadapt.syntax import (
    END, Choice, Rec, Var, active, accepts_only_at_top, prefix, recv, send, syntactically_valid,
    type_equal, unfold, unfold_head,
)

from strategies import ROLE_POOL, local_types

INT = ast.BaseType("Int")
STR = ast.BaseType("String")


def test_customer_type_is_valid(onlinestore):
    assert syntactically_valid(onlinestore["Customer"])
    assert syntactically_valid(onlinestore["Store"])
    assert syntactically_valid(onlinestore["Courier"])


def test_end_is_valid():
    assert syntactically_valid(END)


def test_mixed_choice_is_invalid():
    mixed = ast.choice((send("p", "a", INT), END), (recv("q", "b", INT), END))
    assert not syntactically_valid(mixed)


def test_inputs_from_two_peers_are_invalid():
    s = ast.choice((recv("p", "a"), END), (recv("q", "b"), END))
    assert not syntactically_valid(s)


def test_accept_below_top_is_rejected():
    s = prefix(send("p", "a"), prefix(ast.accept("q", "b"), END))
    assert not accepts_only_at_top(s)
    assert accepts_only_at_top(prefix(ast.accept("q", "b"), prefix(send("q", "a"), END)))


def test_unfold_substitutes_once():
    loop = Rec("Browse", prefix(send("Store", "item", STR), Var("Browse")))
    assert unfold(loop) == prefix(send("Store", "item", STR), loop)
    assert unfold(END) == END


def test_unfold_customer_browse(onlinestore):
    browse = onlinestore["Customer"].branches[0][1]
    assert isinstance(browse, Rec)
    opened = unfold(browse)
    assert isinstance(opened, Choice)
    assert [a.label for a in opened.actions] == ["item", "address", "quit"]
    # the item branch receives the price and then loops back to the whole recursion
    item_cont = opened.branches[0][1].branches[0][1]
    assert item_cont == browse


def test_type_equality_alpha():
    x = Rec("X", prefix(send("p", "a", INT), Var("X")))
    y = Rec("Y", prefix(send("p", "a", INT), Var("Y")))
    assert type_equal(x, y)
    assert not type_equal(x, prefix(send("p", "a", INT), x))


def test_courier_alias_matches_declared(onlinestore):
    inline = parse_local_type("Store??deliver(String).Store!ref(Int).disconnect Store")
    assert type_equal(inline, onlinestore["Courier"])


def test_active():
    assert not active(END)
    assert active(ast.Disconnect("q"))


def test_courier_is_inactive_and_customer_active(onlinestore):
    assert not active(onlinestore["Courier"])
    assert active(onlinestore["Customer"])


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_unfold_keeps_first_actions(data):
    s = data.draw(local_types("Alice", ROLE_POOL[1:]))
    assert syntactically_valid(s)
    once = unfold(s)
    if isinstance(s, Rec):
        assert unfold_head(once) == unfold_head(s)
        assert isinstance(once, Choice)
        assert set(once.actions) == set(unfold_head(s).actions)
    else:
        assert once == s


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_type_equal_is_reflexive_and_sees_through_unfolding(data):
    s = data.draw(local_types("Alice", ROLE_POOL[1:]))
    assert type_equal(s, s)
    assert ast.session_equal(s, unfold(s))
