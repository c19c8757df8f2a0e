"""Cost-model instrumentation: mechanical insertion of tick delays.

Model "r" charges one unit per receive: a tick opens every case branch and
follows every wait and channel receive.  Model "rs" additionally charges
sends: a tick follows every label send and channel send (close carries no
continuation to delay).  Forwards, spawns and cuts are never charged.
"""

from __future__ import annotations

from .ast import (Case, Cut, DefClause, Delay, Origin, ProcDef, ProcExpr,
                  RecvChan, SendChan, SendLabel, Signature, Spawn, Wait, When,
                  Now)
from .errors import InstrumentError

MODELS = ("free", "r", "rs")


def _has_tick(p: ProcExpr) -> bool:
    match p:
        case Delay(_, origin, cont):
            return origin is Origin.TICK or _has_tick(cont)
        case Case(_, branches):
            return any(_has_tick(b) for _, b in branches)
        case Cut(_, _, body, cont):
            return _has_tick(body) or _has_tick(cont)
        case Spawn(_, _, _, _, cont) | SendLabel(_, _, cont) | Wait(_, cont) \
                | SendChan(_, _, cont) | RecvChan(_, _, cont) \
                | When(_, cont) | Now(_, cont):
            return _has_tick(cont)
        case _:
            return False


def _tick(p: ProcExpr) -> ProcExpr:
    return Delay(1, Origin.TICK, p)


def _instrument(p: ProcExpr, sends: bool) -> ProcExpr:
    rec = lambda q: _instrument(q, sends)
    match p:
        case Case(chan, branches):
            return Case(chan, tuple((lab, _tick(rec(b))) for lab, b in branches),
                        p.pos)
        case Wait(chan, cont):
            return Wait(chan, _tick(rec(cont)), p.pos)
        case RecvChan(bind, chan, cont):
            return RecvChan(bind, chan, _tick(rec(cont)), p.pos)
        case SendLabel(chan, label, cont):
            cont = rec(cont)
            return SendLabel(chan, label, _tick(cont) if sends else cont, p.pos)
        case SendChan(chan, payload, cont):
            cont = rec(cont)
            return SendChan(chan, payload, _tick(cont) if sends else cont, p.pos)
        case Cut(dest, annot, body, cont):
            return Cut(dest, annot, rec(body), rec(cont), p.pos)
        case Spawn(dest, proc, args, chans, cont, via):
            return Spawn(dest, proc, args, chans, rec(cont), via, p.pos)
        case Delay(count, origin, cont):
            return Delay(count, origin, rec(cont), p.pos)
        case When(chan, cont):
            return When(chan, rec(cont), p.pos)
        case Now(chan, cont):
            return Now(chan, rec(cont), p.pos)
        case _:
            return p  # close, forward, tail call


def erase_ticks(p: ProcExpr) -> ProcExpr:
    match p:
        case Delay(_, origin, cont) if origin is Origin.TICK:
            return erase_ticks(cont)
        case Delay(count, origin, cont):
            return Delay(count, origin, erase_ticks(cont), p.pos)
        case Case(chan, branches):
            return Case(chan, tuple((lab, erase_ticks(b)) for lab, b in branches),
                        p.pos)
        case Cut(dest, annot, body, cont):
            return Cut(dest, annot, erase_ticks(body), erase_ticks(cont), p.pos)
        case Spawn(dest, proc, args, chans, cont, via):
            return Spawn(dest, proc, args, chans, erase_ticks(cont), via, p.pos)
        case SendLabel(chan, label, cont):
            return SendLabel(chan, label, erase_ticks(cont), p.pos)
        case Wait(chan, cont):
            return Wait(chan, erase_ticks(cont), p.pos)
        case SendChan(chan, payload, cont):
            return SendChan(chan, payload, erase_ticks(cont), p.pos)
        case RecvChan(bind, chan, cont):
            return RecvChan(bind, chan, erase_ticks(cont), p.pos)
        case When(chan, cont):
            return When(chan, erase_ticks(cont), p.pos)
        case Now(chan, cont):
            return Now(chan, erase_ticks(cont), p.pos)
        case _:
            return p


def instrument(sig: Signature, model: str) -> Signature:
    """Insert the model's ticks into every process body.  Instrumenting a
    source that already carries ticks is an error (no double charging)."""
    if model not in MODELS:
        raise InstrumentError(f"unknown cost model {model!r}")
    if model == "free":
        return sig
    out = Signature(dict(sig.typedefs), dict(sig.procdecls), {})
    for name, pdef in sig.procdefs.items():
        clauses = []
        for cl in pdef.clauses:
            if _has_tick(cl.body):
                raise InstrumentError(f"'{name}' already contains ticks")
            clauses.append(DefClause(cl.patterns, cl.dest, cl.chans,
                                     _instrument(cl.body, model == "rs"),
                                     cl.pos))
        out.procdefs[name] = ProcDef(name, clauses)
    return out
