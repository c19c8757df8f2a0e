"""Randomized validation: programs generated by walking the typing rules
backwards typecheck by construction; the pipeline and the interpreter must
then agree with them."""

import pytest

from fuzzgen import gen_program, strip_temporal
from tss.ast import DefClause, ProcDef, Signature
from tss.checker import check_signature
from tss.reconstruct import elaborate_signature
from tss.runtime import (Engine, check_configuration, init_config, is_poised,
                         make_scheduler, root_chain)
from tss.typeops import TypeOps

SEEDS = range(60)


@pytest.mark.parametrize("seed", SEEDS)
def test_generated_programs_check_and_run(seed):
    sig = gen_program(seed)
    assert not check_signature(sig), f"generator produced an ill-typed term"
    ops = TypeOps(sig)
    eng = Engine(sig, ops)
    observations = []
    for sched, s in (("rr", 0), ("rand", seed), ("sync", 0)):
        cfg = init_config(sig, "main")
        declared = {cfg.order[0]: cfg.ptypes[cfg.order[0]]}
        cache: dict = {}

        def on_step(c):
            check_configuration(ops, {}, c, declared, cache)

        final, status = eng.run(cfg, make_scheduler(sched, s), 3000,
                                on_step=on_step)
        assert status == "quiescent"
        assert is_poised(final)
        obs = [(k, lab if k == "label" else "", t)
               for k, lab, t in root_chain(final, cfg.order[0])]
        observations.append(obs)
    assert all(o == observations[0] for o in observations)


@pytest.mark.parametrize("seed", SEEDS)
def test_reconstruction_recovers_erased_programs(seed):
    # The generated program witnesses that a valid temporal elaboration of
    # its skeleton exists, so reconstruction must find one too.
    sig = gen_program(seed)
    skeleton = Signature(dict(sig.typedefs), dict(sig.procdecls), {})
    cl = sig.procdefs["main"].clauses[0]
    skeleton.procdefs["main"] = ProcDef(
        "main", [DefClause((), cl.dest, cl.chans, strip_temporal(cl.body))])
    elab, errors = elaborate_signature(skeleton)
    assert not errors, [str(e) for e in errors]
    assert not check_signature(elab, call_subtyping=True)


@pytest.mark.parametrize("seed", range(0, 40, 4))
def test_generated_programs_round_trip_through_the_printer(seed):
    from tss.parser import parse_program
    from tss.printer import pretty_print
    sig = gen_program(seed)
    assert parse_program(pretty_print(sig)) == sig
