import pytest

from tss.ast import Delay, Origin, TypeName
from tss.checker import check_process, check_signature
from tss.errors import SessionTypeError
from tss.parser import parse_program
from tss.typeops import TypeOps

# The timed copy process written out with all its ticks, which is exactly
# what the cost model produces from the plain source.
COPY_EXPLICIT = """
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
decl copy : (y : bits) |- (x : ()bits)
proc x <- copy <- y =
  case y ( b0 => tick ; x.b0 ; x <- copy <- y
         | b1 => tick ; x.b1 ; x <- copy <- y
         | $  => tick ; x.$ ; wait y ; tick ; close x )
"""


def check_ok(src):
    sig = parse_program(src)
    errors = check_signature(sig)
    assert not errors, [str(e) for e in errors]
    return sig


def first_error(src):
    errors = check_signature(parse_program(src))
    assert errors
    return errors[0]


def test_copy_checks_at_latency_one():
    check_ok(COPY_EXPLICIT)


def test_forward_requires_equal_types():
    # Identifying the two channels erases the latency the type demands.
    err = first_error("""
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
decl bad : (y : bits) |- (x : ()bits)
proc x <- bad <- y =
  case y ( b0 => tick ; x.b1 ; x <- y
         | b1 => tick ; x.b0 ; x <- bad <- y
         | $  => tick ; x.$ ; wait y ; tick ; close x )
""")
    assert err.rule == "id"


def test_delay_needs_every_channel_ready():
    err = first_error("""
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
decl f : (y : bits) |- (x : ()bits)
proc x <- f <- y = delay ; x <- y
""")
    assert err.rule == "()LR"


def test_close_rejects_leftover_channels():
    err = first_error("""
type t = ()1
decl f : (y : t) |- (x : 1)
proc x <- f <- y = close x
""")
    assert err.rule == "1R"


def test_unknown_label_rejected():
    err = first_error("""
type t = +{ a : 1 }
decl f : . |- (x : t)
proc x <- f = x.b ; close x
""")
    assert err.rule == "+R"


def test_case_must_cover_branch_set_exactly():
    err = first_error("""
type t = +{ a : 1, b : 1 }
decl f : (y : t) |- (x : 1)
proc x <- f <- y = case y ( a => wait y ; close x )
""")
    assert err.rule == "+L"


def test_when_requires_patient_context():
    err = first_error("""
type t = +{ a : ()1 }
decl f : (y : t) |- (x : []t)
proc x <- f <- y = when? x ; y.a ; wait y ; x.a ; delay ; close x
""")
    assert err.rule == "[]R"


def test_error_isolation_one_bad_one_good():
    errors = check_signature(parse_program("""
type one = 1
decl good : . |- (x : one)
proc x <- good = close x
decl bad : . |- (x : one)
proc x <- bad = delay ; close x
"""))
    assert len(errors) == 1
    assert "bad" in str(errors[0])


def test_determinism_same_error_twice():
    src = """
type t = +{ a : 1 }
decl f : . |- (x : t)
proc x <- f = x.b ; close x
"""
    a = first_error(src)
    b = first_error(src)
    assert str(a) == str(b)


def _flip_ticks(p):
    from tss.ast import (Case, Cut, Spawn, SendLabel, Wait, SendChan, RecvChan,
                         When, Now)
    match p:
        case Delay(count, origin, cont):
            origin = Origin.SOURCE if origin is Origin.TICK else origin
            return Delay(count, origin, _flip_ticks(cont))
        case Case(chan, branches):
            return Case(chan, tuple((lab, _flip_ticks(b)) for lab, b in branches))
        case Cut(dest, annot, body, cont):
            return Cut(dest, annot, _flip_ticks(body), _flip_ticks(cont))
        case Spawn(dest, proc, args, chans, cont, via):
            return Spawn(dest, proc, args, chans, _flip_ticks(cont), via)
        case SendLabel(chan, label, cont):
            return SendLabel(chan, label, _flip_ticks(cont))
        case Wait(chan, cont):
            return Wait(chan, _flip_ticks(cont))
        case SendChan(chan, payload, cont):
            return SendChan(chan, payload, _flip_ticks(cont))
        case RecvChan(bind, chan, cont):
            return RecvChan(bind, chan, _flip_ticks(cont))
        case When(chan, cont):
            return When(chan, _flip_ticks(cont))
        case Now(chan, cont):
            return Now(chan, _flip_ticks(cont))
        case _:
            return p


def test_tick_is_a_synonym_for_delay():
    sig = parse_program(COPY_EXPLICIT)
    assert not check_signature(sig)
    cl = sig.procdefs["copy"].clauses[0]
    cl.body = _flip_ticks(cl.body)
    assert not check_signature(sig)


def test_check_process_direct_sequent():
    sig = parse_program("type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }")
    ops = TypeOps(sig)
    from tss.ast import Close
    # |- (x.b0 ; delay ; ... would need the rest of six) — check a prefix
    # sequent directly instead: . |- close x :: (x : 1) is fine, and the
    # same term at bits is not.
    check_process(ops, {}, Close("x"), "x", parse_program("type t = 1").type_body("t"))
    with pytest.raises(SessionTypeError):
        check_process(ops, {}, Close("x"), "x", TypeName("bits"))


def test_explicit_skip1s_with_idle_process():
    # The fully explicit variant: readiness announced by hand and the
    # recursive call routed through an idling helper.
    check_ok("""
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
type sbits = +{ b0 : ()sbits, b1 : ()<>sbits, $ : ()1 }
decl compress : (y : bits) |- (x : ()sbits)
decl skip1s : (y : bits) |- (x : ()<>sbits)
decl idle : (y : ()<>sbits) |- (x : <>sbits)
proc x <- idle <- y = delay ; x <- y
proc x <- compress <- y =
  case y ( b0 => tick ; x.b0 ; x <- compress <- y
         | b1 => tick ; x.b1 ; x <- skip1s <- y
         | $  => tick ; x.$ ; wait y ; tick ; close x )
proc x <- skip1s <- y =
  case y ( b0 => tick ; now! x ; x.b0 ; x <- compress <- y
         | b1 => tick ; x2 : ()<>sbits <- (x2 <- skip1s <- y) ; x <- idle <- x2
         | $  => tick ; now! x ; x.$ ; wait y ; tick ; close x )
""")
