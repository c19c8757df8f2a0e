import pytest

from tss import corpus
from tss.ast import Next, One, Plus, Signature
from tss.errors import ParseError, ScopeError
from tss.parser import parse_program
from tss.printer import fmt_type, pretty_print


def test_bits_parses_to_three_delayed_branches():
    sig = parse_program("type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }")
    body = sig.type_body("bits")
    assert isinstance(body, Plus)
    assert [lab for lab, _ in body.branches] == ["b0", "b1", "$"]
    for _, t in body.branches:
        assert isinstance(t, Next) and t.count == 1


def test_empty_program():
    sig = parse_program("")
    assert sig == Signature()


def test_undefined_type_name_is_reported():
    with pytest.raises(ScopeError, match="x"):
        parse_program("type t = ()()x")


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_program("type t = +{ a : }")
    assert err.value.line == 1
    assert err.value.col > 10


def test_counter_sugar_and_unrolled_form_agree():
    a = parse_program("type t = ()^3 1")
    b = parse_program("type t = ()()()1")
    assert a.type_body("t") == b.type_body("t") == Next(3, One())


def test_next_normalization_no_nested_next():
    sig = parse_program("type t = ()^2 ()^3 ()1")
    assert sig.type_body("t") == Next(6, One())


def test_ground_name_with_dollar_relexes():
    sig = parse_program("type list$3 = +{ nil : ()1 }")
    assert "list$3" in sig.typedefs


def test_tail_call_vs_forward_resolution():
    sig = parse_program(
        "type one = 1\n"
        "decl f : . |- (x : one)\n"
        "proc x <- f = close x\n"
        "decl g : (y : one) |- (x : one)\n"
        "proc x <- g <- y = wait y ; x <- f\n"
        "decl h : (y : one) |- (x : one)\n"
        "proc x <- h <- y = x <- y\n")
    from tss.ast import Fwd, TailCall, Wait
    body_g = sig.proc_body("g").body
    assert isinstance(body_g, Wait) and isinstance(body_g.cont, TailCall)
    assert isinstance(sig.proc_body("h").body, Fwd)


def test_arity_mismatch_rejected():
    with pytest.raises(ScopeError, match="argument"):
        parse_program("type t[n] = +{ a : ()1 }\ntype u = t")


@pytest.mark.parametrize("filename",
                         [p["file"] for p in corpus.manifest()["programs"]])
def test_round_trip_over_corpus(filename):
    sig = corpus.parse(filename)
    again = parse_program(pretty_print(sig))
    assert again == sig
    # And printing is a fixed point after one round.
    assert pretty_print(again) == pretty_print(sig)


def test_branch_order_preserved_in_print():
    sig = parse_program("type t = +{ b1 : 1, b0 : 1, $ : 1 }")
    assert fmt_type(sig.type_body("t")) == "+{b1 : 1, b0 : 1, $ : 1}"


def test_duplicate_branch_label_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        parse_program("type t = +{ a : 1, a : 1 }")


def test_random_types_round_trip_through_the_printer():
    import random
    from fuzzgen import gen_type
    from tss.parser import _Parser
    rng = random.Random(7)
    for _ in range(300):
        t = gen_type(rng, rng.randint(1, 4))
        p = _Parser(fmt_type(t))
        again = p.type_()
        p.expect("EOF")
        assert again == t, fmt_type(t)
