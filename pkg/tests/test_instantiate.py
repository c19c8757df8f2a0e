import pytest

from tss.ast import Next, One, Plus, TypeName
from tss.errors import EvalError
from tss.instantiate import instantiate, instantiate_many, mangled_name
from tss.parser import parse_program
from tss.printer import pretty_print

LISTS = """
type eltA = +{ v : ()1 }
type list[0] = +{ nil : ()1 }
type list[n+1] = +{ cons : ()([]eltA * ()^{r+3} list[n]) }
"""

TREE = """
type bool = +{ b0 : ()1, b1 : ()1 }
type tree[h] = &{ parity : ()^{5*h+3} bool }
"""


def test_list_at_zero():
    ground = instantiate(parse_program(LISTS), "list", {"n": 0, "r": 0})
    body = ground.type_body("list$0")
    assert body == Plus((("nil", Next(1, One())),))


def test_list_at_two_chains_to_zero():
    ground = instantiate(parse_program(LISTS), "list", {"n": 2, "r": 1})
    assert set(ground.typedefs) == {"list$2", "list$1", "list$0", "eltA"}
    cons = dict(ground.type_body("list$2").branches)["cons"]
    # ()([]eltA * ()^4 list$1) with r = 1
    assert cons.inner.right == Next(4, TypeName("list$1"))


def test_tree_at_zero_matches_span_formula():
    ground = instantiate(parse_program(TREE), "tree", {"h": 0})
    body = ground.type_body("tree$0")
    assert dict(body.branches)["parity"] == Next(3, TypeName("bool"))


def test_ground_definition_instantiates_to_itself():
    src = "type bits = +{ b0 : ()bits, $ : ()1 }"
    sig = parse_program(src)
    ground = instantiate(sig, "bits", {})
    assert ground.type_body("bits") == sig.type_body("bits")


def test_missing_parameter_reported():
    with pytest.raises(EvalError, match="r"):
        instantiate(parse_program(LISTS), "list", {"n": 1})


def test_no_matching_clause_is_an_error():
    src = "type only1[1] = +{ a : ()1 }"
    with pytest.raises(EvalError, match="matches"):
        instantiate(parse_program(src), "only1", {"i0": 0})


def test_memoization_single_copy_per_ground_name():
    ground = instantiate(parse_program(LISTS), "list", {"n": 3, "r": 0})
    text = pretty_print(ground)
    assert text.count("type list$1 ") == 1


def test_output_is_ground_and_reparses():
    ground = instantiate(parse_program(LISTS), "list", {"n": 2, "r": 2})
    assert ground.is_ground()
    assert parse_program(pretty_print(ground)) == ground


def test_instantiate_many_shares_the_fragment():
    sig = parse_program(LISTS + """
decl lsrc[m] : . |- (l : list[m])
proc l <- lsrc[0] = l.nil ; close l
proc l <- lsrc[m+1] = x <- mkA ; l.cons ; send l x ; l <- lsrc[m]
decl mkA : . |- (a : []eltA)
proc a <- mkA = a.v ; close a
""")
    ground = instantiate_many(sig, ["lsrc", "list"], {"m": 1, "n": 1, "r": 0})
    assert "lsrc$1" in ground.procdefs and "lsrc$0" in ground.procdefs
    assert "list$1" in ground.typedefs
    assert mangled_name(sig, "lsrc", {"m": 1}) == "lsrc$1"


def test_divergent_family_is_cut_off():
    src = """
type t[n] = +{ a : ()t[n+1] }
"""
    with pytest.raises(EvalError, match="definitions"):
        instantiate(parse_program(src), "t", {"n": 0})
