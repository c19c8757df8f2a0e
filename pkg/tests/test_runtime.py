import dataclasses

import pytest

from tss.ast import Close, Fwd, SendLabel, TailCall
from tss.checker import check_signature
from tss.cost import instrument
from tss.errors import ConfigTypeError, RunError
from tss.parser import parse_program
from tss.reconstruct import elaborate_signature
from tss.runtime import (Configuration, Engine, Obj, Trace,
                         check_configuration, init_config, is_poised,
                         is_poised_obj, make_scheduler, root_chain)
from tss.typeops import TypeOps

SIX = """
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
decl six : . |- (x : bits)
proc x <- six = x.b0 ; x.b1 ; x.b1 ; x.$ ; close x
"""


def prepare(src, cost="r"):
    ticked = instrument(parse_program(src), cost)
    elab, errors = elaborate_signature(ticked)
    assert not errors, [str(e) for e in errors]
    assert not check_signature(elab, call_subtyping=True)
    return elab, TypeOps(elab)


@pytest.fixture(scope="module")
def six():
    return prepare(SIX)


def test_init_config_single_root_proc(six):
    elab, _ = six
    cfg = init_config(elab, "six")
    root = cfg.order[0]
    assert cfg.objs[root].kind == "proc"
    assert cfg.objs[root].time == 0
    assert isinstance(cfg.objs[root].body, TailCall)


def test_init_rejects_unknown_and_contextful():
    elab, _ = prepare(SIX)
    with pytest.raises(RunError, match="unknown"):
        init_config(elab, "nonesuch")
    elab2, _ = prepare(SIX + """
decl copy : (y : bits) |- (x : ()bits)
proc x <- copy <- y =
  case y ( b0 => x.b0 ; x <- copy <- y
         | b1 => x.b1 ; x <- copy <- y
         | $  => x.$ ; wait y ; close x )
""")
    with pytest.raises(RunError, match="context"):
        init_config(elab2, "copy")


def test_fresh_counter_starts_above_source_names():
    elab, _ = prepare("""
type one = 1
decl f : . |- (c7 : one)
proc c7 <- f = close c7
""")
    cfg = init_config(elab, "f")
    assert cfg.order[0] == "c8"


def test_six_trace_and_chain(six):
    elab, ops = six
    eng = Engine(elab, ops)
    cfg = init_config(elab, "six")
    trace = Trace()
    final, status = eng.run(cfg, make_scheduler("rr"), 100, trace=trace)
    assert status == "quiescent"
    assert is_poised(final)
    rules = [s.rule for s in trace.steps]
    assert rules[0] == "defC"
    assert "id⁺C" in rules and "○C" in rules and "1S" in rules
    assert root_chain(final, cfg.order[0]) == [
        ("label", "b0", 0), ("label", "b1", 1), ("label", "b1", 2),
        ("label", "$", 3), ("close", "", 4)]
    # Structured export carries one record per step.
    assert trace.to_json().count("\n") == len(trace.steps)


def test_empty_configuration_is_quiescent(six):
    elab, ops = six
    eng = Engine(elab, ops)
    cfg = Configuration({}, [], 0, {}, {})
    assert eng.step(cfg, make_scheduler("rr")) is None


def test_poisedness_definitions():
    assert is_poised_obj(Obj("msg", "c", 0, Close("c")))
    assert is_poised_obj(Obj("proc", "c", 0, SendLabel("c", "a", Close("c"))))
    assert not is_poised_obj(Obj("proc", "c", 0, SendLabel("d", "a", Close("c"))))
    assert is_poised_obj(Obj("proc", "c", 0, Fwd("c", "d")))


def test_forward_takes_late_messages(six):
    # The forwarder can sit at an earlier time than the message it relays.
    elab, ops = six
    eng = Engine(elab, ops)
    cfg = init_config(elab, "six")
    # defC leaves proc(c_root, 0, fwd); drive everything with a scheduler
    # that starves the forwarder, so messages pile up at later times.
    final, status = eng.run(cfg, make_scheduler("rand", 5), 200)
    assert status == "quiescent"
    times = [m[2] for m in root_chain(final, cfg.order[0])]
    assert times == [0, 1, 2, 3, 4]


def test_preservation_harness_on_six(six):
    elab, ops = six
    eng = Engine(elab, ops)
    cfg = init_config(elab, "six")
    declared = {cfg.order[0]: cfg.ptypes[cfg.order[0]]}
    check_configuration(ops, {}, cfg, declared)
    while True:
        nxt = eng.step(cfg, make_scheduler("rr"))
        if nxt is None:
            break
        cfg = nxt
        check_configuration(ops, {}, cfg, declared)


def test_timestamp_mutation_is_rejected(six):
    elab, ops = six
    eng = Engine(elab, ops)
    cfg = init_config(elab, "six")
    declared = {cfg.order[0]: cfg.ptypes[cfg.order[0]]}
    final, _ = eng.run(cfg, make_scheduler("rr"), 100)
    check_configuration(ops, {}, final, declared)
    victim = next(c for c, o in final.objs.items() if o.kind == "msg")
    broken = final.copy()
    broken.objs[victim] = dataclasses.replace(broken.objs[victim],
                                              time=broken.objs[victim].time + 1)
    with pytest.raises(ConfigTypeError):
        check_configuration(ops, {}, broken, declared)


def test_schedulers_agree_on_observables(six):
    elab, ops = six
    results = []
    for sched, seed in (("rr", 0), ("rand", 1), ("rand", 42), ("sync", 0)):
        eng = Engine(elab, ops)
        cfg = init_config(elab, "six")
        final, status = eng.run(cfg, make_scheduler(sched, seed), 100)
        assert status == "quiescent"
        results.append([(k, lab, t) for k, lab, t
                        in root_chain(final, cfg.order[0])])
    assert all(r == results[0] for r in results)


def test_counter_run_exercises_box_machinery():
    elab, ops = prepare("""
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
type ctr = [] &{ inc : ()ctr, val : ()bits }
decl bit0 : (d : ()ctr) |- (c : ctr)
decl bit1 : (d : ctr) |- (c : ctr)
decl empty : . |- (c : ctr)
proc c <- bit0 <- d =
  case c ( inc => c <- bit1 <- d
         | val => c.b0 ; d.val ; c <- d )
proc c <- bit1 <- d =
  case c ( inc => d.inc ; c <- bit0 <- d
         | val => c.b1 ; d.val ; c <- d )
proc c <- empty =
  case c ( inc => e <- empty ; c <- bit1 <- e
         | val => c.$ ; close c )
decl main : . |- (x : ()^4 bits)
proc x <- main = c <- empty ; c.inc ; c.inc ; c.inc ; c.val ; x <- c
""")
    eng = Engine(elab, ops)
    cfg = init_config(elab, "main")
    declared = {cfg.order[0]: cfg.ptypes[cfg.order[0]]}
    cache: dict = {}
    trace = Trace()

    def on_step(c):
        check_configuration(ops, {}, c, declared, cache)

    final, status = eng.run(cfg, make_scheduler("rr"), 500, trace=trace,
                            on_step=on_step)
    assert status == "quiescent" and is_poised(final)
    # Value three, read off after the third increment: b1 b1 $.
    assert root_chain(final, cfg.order[0]) == [
        ("label", "b1", 4), ("label", "b1", 5), ("label", "$", 6),
        ("close", "", 7)]
    rules = {s.rule for s in trace.steps}
    assert {"□S", "□C", "&S", "&C"} <= rules


def test_empty_configuration_types_as_pass_through(six):
    _, ops = six
    from tss.ast import TypeName
    bits = TypeName("bits")
    empty = Configuration({}, [], 0, {}, {})
    check_configuration(ops, {"c0": bits}, empty, {"c0": bits})
    with pytest.raises(ConfigTypeError):
        check_configuration(ops, {}, empty, {"c0": bits})


def test_config_with_two_clients_rejected(six):
    elab, ops = six
    from tss.ast import TypeName, Wait, Close as Cl
    bits = TypeName("bits")
    one = parse_program("type t = 1").type_body("t")
    cfg = Configuration(
        {"c1": Obj("proc", "c1", 0, Cl("c1")),
         "c2": Obj("proc", "c2", 0, Wait("c1", Cl("c2"))),
         "c3": Obj("proc", "c3", 0, Wait("c1", Cl("c3")))},
        ["c1", "c2", "c3"], 4,
        {"c1": one, "c2": one, "c3": one},
        {"c1": one, "c2": one, "c3": one})
    with pytest.raises(ConfigTypeError, match="two clients"):
        check_configuration(ops, {}, cfg, {"c2": one, "c3": one})


def test_cyclic_wiring_rejected(six):
    elab, ops = six
    one = parse_program("type t = 1").type_body("t")
    from tss.ast import Wait, Close as Cl
    cfg = Configuration(
        {"c1": Obj("proc", "c1", 0, Wait("c2", Cl("c1"))),
         "c2": Obj("proc", "c2", 0, Wait("c1", Cl("c2")))},
        ["c1", "c2"], 3,
        {"c1": one, "c2": one}, {"c1": one, "c2": one})
    with pytest.raises(ConfigTypeError, match="cyclic"):
        check_configuration(ops, {}, cfg, {})
