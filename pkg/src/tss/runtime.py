"""Timed multiset-rewriting interpreter with pluggable schedulers, rule
traces, and a configuration typechecker used to validate preservation and
progress empirically.

A configuration is a multiset of proc/msg objects, each providing one
channel at one timestamp.  Alongside the objects we track two interface
types per channel: the provider-side type and the consumer-side type.  Most
rules keep them identical; the rules with time slack (forwarding and the
now!/when? pairs) re-anchor one side, and the gap they open is exactly the
weak subtyping the configuration typing allows.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Callable, Optional

from .ast import (Box, Case, Close, Cut, Delay, Diamond, Fwd, Lolli, Now,
                  Plus, ProcExpr, RecvChan, SendChan, SendLabel, SessionType,
                  Signature, Spawn, TailCall, Tensor, Wait, When, With,
                  branch_get, free_chans, next_type, rename_chans)
from .checker import check_process
from .errors import ConfigTypeError, RunError, StuckError
from .printer import fmt_proc, fmt_type
from .subtyping import is_weak_subtype
from .typeops import TypeOps


@dataclass(frozen=True)
class Obj:
    kind: str  # "proc" | "msg"
    chan: str
    time: int
    body: ProcExpr

    def render(self) -> str:
        body = fmt_proc(self.body).replace("\n", " ")
        body = body.replace("% reconstructed", "")
        body = re.sub(r"\s+", " ", body).strip()
        return f"{self.kind}({self.chan}, {self.time}, {body})"


@dataclass(frozen=True)
class TraceStep:
    rule: str
    consumed: tuple[str, ...]
    produced: tuple[str, ...]

    def as_dict(self) -> dict:
        return {"rule": self.rule, "consumed": list(self.consumed),
                "produced": list(self.produced)}


class Trace:
    def __init__(self):
        self.steps: list[TraceStep] = []

    def add(self, rule: str, consumed: list[Obj], produced: list[Obj]) -> None:
        self.steps.append(TraceStep(rule, tuple(o.render() for o in consumed),
                                    tuple(o.render() for o in produced)))

    def to_text(self) -> str:
        return "\n".join(f"{s.rule}: {', '.join(s.consumed)} -> "
                         f"{', '.join(s.produced) or '(nothing)'}"
                         for s in self.steps) + ("\n" if self.steps else "")

    def to_json(self) -> str:
        return "\n".join(json.dumps(s.as_dict()) for s in self.steps) + \
            ("\n" if self.steps else "")


@dataclass
class Configuration:
    objs: dict[str, Obj]
    order: list[str]  # creation order of provided channels
    counter: int
    ptypes: dict[str, SessionType]  # provider-side interface, absolute
    ctypes: dict[str, SessionType]  # consumer-side interface, absolute

    def copy(self) -> "Configuration":
        return Configuration(dict(self.objs), list(self.order), self.counter,
                             dict(self.ptypes), dict(self.ctypes))

    def messages(self) -> list[Obj]:
        return [o for o in self.objs.values() if o.kind == "msg"]


# ---------------------------------------------------------------------------
# Construction

_CHAN_RE = re.compile(r"^c(\d+)$")


def _names_in(p: ProcExpr, acc: set[str]) -> None:
    match p:
        case Spawn(dest, _, _, chans, cont):
            acc.add(dest)
            acc.update(chans)
            _names_in(cont, acc)
        case TailCall(dest, _, _, chans):
            acc.add(dest)
            acc.update(chans)
        case Cut(dest, _, body, cont):
            acc.add(dest)
            _names_in(body, acc)
            _names_in(cont, acc)
        case Fwd(dest, src):
            acc.update((dest, src))
        case SendLabel(chan, _, cont) | Wait(chan, cont) | When(chan, cont) \
                | Now(chan, cont):
            acc.add(chan)
            _names_in(cont, acc)
        case Case(chan, branches):
            acc.add(chan)
            for _, b in branches:
                _names_in(b, acc)
        case Close(chan):
            acc.add(chan)
        case SendChan(chan, payload, cont):
            acc.update((chan, payload))
            _names_in(cont, acc)
        case RecvChan(bind, chan, cont):
            acc.update((bind, chan))
            _names_in(cont, acc)
        case Delay(_, _, cont):
            _names_in(cont, acc)


def _fresh_floor(sig: Signature) -> int:
    names: set[str] = set()
    for pd in sig.procdecls.values():
        for cl in pd.clauses:
            names.add(cl.offer_chan)
            names.update(c for c, _ in cl.ctx)
    for pdef in sig.procdefs.values():
        for cl in pdef.clauses:
            names.add(cl.dest)
            names.update(cl.chans)
            _names_in(cl.body, names)
    floor = 0
    for n in names:
        m = _CHAN_RE.match(n)
        if m:
            floor = max(floor, int(m.group(1)) + 1)
    return floor


def init_config(sig: Signature, main: str) -> Configuration:
    """A single process at time 0 making a tail call to `main`."""
    if main not in sig.procdecls:
        raise RunError(f"unknown process '{main}'")
    decl = sig.decl(main)
    if decl.ctx:
        raise RunError(f"'{main}' needs channels {[c for c, _ in decl.ctx]}; "
                       f"only context-free processes can be run")
    counter = _fresh_floor(sig)
    root = f"c{counter}"
    obj = Obj("proc", root, 0, TailCall(root, main, (), ()))
    return Configuration({root: obj}, [root], counter + 1,
                         {root: decl.offer_type}, {root: decl.offer_type})


# ---------------------------------------------------------------------------
# Schedulers

class RoundRobin:
    """Cycles over objects in channel-creation order."""

    def __init__(self):
        self._last: Optional[str] = None

    def pick(self, config: Configuration, candidates: dict[str, "_Rule"]):
        order = [c for c in config.order if c in candidates]
        if not order:
            return None
        if self._last is not None and self._last in config.order:
            start = config.order.index(self._last) + 1
            rotated = [c for c in config.order[start:] if c in candidates]
            if rotated:
                choice = rotated[0]
            else:
                choice = order[0]
        else:
            choice = order[0]
        self._last = choice
        return candidates[choice]


class SeededRandom:
    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def pick(self, config: Configuration, candidates: dict[str, "_Rule"]):
        if not candidates:
            return None
        order = [c for c in config.order if c in candidates]
        return candidates[self._rng.choice(order)]


class TimeSynchronous:
    """Exhausts communication at the current time front before letting any
    process advance its clock; delayers at the earliest time go first."""

    def pick(self, config: Configuration, candidates: dict[str, "_Rule"]):
        if not candidates:
            return None
        order = [c for c in config.order if c in candidates]
        undelayed = [c for c in order if candidates[c].name != "○C"]
        if undelayed:
            return candidates[undelayed[0]]
        best = min(order, key=lambda c: (config.objs[c].time,
                                         config.order.index(c)))
        return candidates[best]


def make_scheduler(name: str, seed: int = 0):
    if name in ("rr", "roundrobin"):
        return RoundRobin()
    if name in ("rand", "random"):
        return SeededRandom(seed)
    if name in ("sync", "timesync"):
        return TimeSynchronous()
    raise RunError(f"unknown scheduler '{name}'")


# ---------------------------------------------------------------------------
# One rewriting step

@dataclass
class _Rule:
    name: str
    consumed: list[Obj]
    apply: Callable[[Configuration], Configuration]


class Engine:
    def __init__(self, sig: Signature, ops: TypeOps | None = None):
        self.sig = sig
        self.ops = ops or TypeOps(sig)

    # -- helpers ------------------------------------------------------------
    def _fresh(self, config: Configuration) -> str:
        name = f"c{config.counter}"
        config.counter += 1
        return name

    def _local_p(self, config: Configuration, chan: str, time: int):
        t = self.ops.shift_right_n(config.ptypes[chan], time)
        if t is None:
            raise RunError(f"interface of {chan} undefined at its own time")
        return self.ops.expose(t)

    def _local_c(self, config: Configuration, chan: str, time: int):
        t = self.ops.shift_left_n(config.ctypes[chan], time)
        if t is None:
            raise RunError(f"interface of {chan} undefined at its own time")
        return self.ops.expose(t)

    def _add(self, config: Configuration, obj: Obj,
             ptype: SessionType | None = None,
             ctype: SessionType | None = None) -> None:
        config.objs[obj.chan] = obj
        if obj.chan not in config.order:
            config.order.append(obj.chan)
        if ptype is not None:
            config.ptypes[obj.chan] = ptype
            config.ctypes[obj.chan] = ctype if ctype is not None else ptype

    def _drop(self, config: Configuration, chan: str) -> None:
        del config.objs[chan]
        config.order.remove(chan)
        config.ptypes.pop(chan, None)
        config.ctypes.pop(chan, None)

    # -- enabled-rule discovery ----------------------------------------------
    def enabled(self, config: Configuration) -> dict[str, _Rule]:
        """For each proc object that can fire, its unique rule instance."""
        neg_acting: dict[str, Obj] = {}
        mentions: dict[str, Obj] = {}
        for o in config.objs.values():
            if o.kind != "msg":
                continue
            acted = o.body.chan if not isinstance(o.body, Close) else None
            if acted is not None and acted != o.chan:
                neg_acting[acted] = o
            for m in free_chans(o.body) - {o.chan}:
                mentions[m] = o
        out: dict[str, _Rule] = {}
        for o in config.objs.values():
            if o.kind != "proc":
                continue
            r = self._rule_for(config, o, neg_acting, mentions)
            if r is not None:
                out[o.chan] = r
        return out

    def _rule_for(self, config: Configuration, o: Obj,
                  neg_acting: dict[str, Obj],
                  mentions: dict[str, Obj]) -> Optional[_Rule]:
        body = o.body
        objs = config.objs
        match body:
            case SendLabel(chan, _, _):
                name = "⊕S" if chan == o.chan else "&S"
                return _Rule(name, [o], lambda c: self._send_label(c, o))
            case SendChan(chan, _, _):
                name = "⊗S" if chan == o.chan else "⊸S"
                return _Rule(name, [o], lambda c: self._send_chan(c, o))
            case Close(_):
                return _Rule("1S", [o], lambda c: self._close(c, o))
            case Now(chan, _):
                name = "◇S" if chan == o.chan else "□S"
                return _Rule(name, [o], lambda c: self._now(c, o))
            case Cut():
                return _Rule("cutC", [o], lambda c: self._cut(c, o))
            case Spawn() | TailCall():
                return _Rule("defC", [o], lambda c: self._def(c, o))
            case Delay():
                return _Rule("○C", [o], lambda c: self._delay(c, o))
            case Case(chan, _):
                if chan == o.chan:
                    m = neg_acting.get(chan)
                    if m is not None and isinstance(m.body, SendLabel) \
                            and m.time == o.time:
                        return _Rule("&C", [o, m],
                                     lambda c: self._case_neg(c, o, m))
                else:
                    m = objs.get(chan)
                    if m is not None and m.kind == "msg" \
                            and isinstance(m.body, SendLabel) \
                            and m.body.chan == chan and m.time == o.time:
                        return _Rule("⊕C", [m, o],
                                     lambda c: self._case_pos(c, o, m))
            case Wait(chan, _):
                m = objs.get(chan)
                if m is not None and m.kind == "msg" \
                        and isinstance(m.body, Close) and m.time == o.time:
                    return _Rule("1C", [m, o], lambda c: self._wait(c, o, m))
            case RecvChan(_, chan, _):
                if chan == o.chan:
                    m = neg_acting.get(chan)
                    if m is not None and isinstance(m.body, SendChan) \
                            and m.time == o.time:
                        return _Rule("⊸C", [o, m],
                                     lambda c: self._recv_neg(c, o, m))
                else:
                    m = objs.get(chan)
                    if m is not None and m.kind == "msg" \
                            and isinstance(m.body, SendChan) \
                            and m.body.chan == chan and m.time == o.time:
                        return _Rule("⊗C", [m, o],
                                     lambda c: self._recv_pos(c, o, m))
            case When(chan, _):
                if chan == o.chan:
                    m = neg_acting.get(chan)
                    if m is not None and isinstance(m.body, Now) \
                            and o.time <= m.time:
                        return _Rule("□C", [o, m],
                                     lambda c: self._when_provider(c, o, m))
                else:
                    m = objs.get(chan)
                    if m is not None and m.kind == "msg" \
                            and isinstance(m.body, Now) \
                            and m.body.chan == chan and m.time >= o.time:
                        return _Rule("◇C", [m, o],
                                     lambda c: self._when_client(c, o, m))
            case Fwd(_, src):
                m = objs.get(src)
                if m is not None and m.kind == "msg" and m.time >= o.time:
                    return _Rule("id⁺C", [m, o], lambda c: self._fwd_up(c, o, m))
                m2 = mentions.get(o.chan)
                if m2 is not None and o.time <= m2.time:
                    return _Rule("id⁻C", [o, m2],
                                 lambda c: self._fwd_down(c, o, m2))
        return None

    # -- rule bodies ----------------------------------------------------------
    # Channels keep their tracked interfaces for as long as they live, so a
    # rule replaces the object at a surviving channel in place and only
    # drops channels that die.

    def _send_label(self, config: Configuration, o: Obj) -> Configuration:
        config = config.copy()
        body = o.body
        assert isinstance(body, SendLabel)
        chan, label, cont = body.chan, body.label, body.cont
        fresh = self._fresh(config)
        if chan == o.chan:  # provider sends: +S
            base = self._local_p(config, chan, o.time)
            if not isinstance(base, Plus):
                raise RunError(f"{chan} is not an internal choice")
            nxt = next_type(o.time, branch_get(base.branches, label))
            config.objs[chan] = Obj("msg", chan, o.time,
                                    SendLabel(chan, label, Fwd(chan, fresh)))
            self._add(config, Obj("proc", fresh, o.time,
                                  rename_chans(cont, {chan: fresh})), nxt)
        else:  # client sends: &S
            base = self._local_c(config, chan, o.time)
            if not isinstance(base, With):
                raise RunError(f"{chan} is not an external choice")
            nxt = next_type(o.time, branch_get(base.branches, label))
            config.objs[o.chan] = Obj("proc", o.chan, o.time,
                                      rename_chans(cont, {chan: fresh}))
            self._add(config, Obj("msg", fresh, o.time,
                                  SendLabel(chan, label, Fwd(fresh, chan))),
                      nxt)
        return config

    def _send_chan(self, config: Configuration, o: Obj) -> Configuration:
        config = config.copy()
        body = o.body
        assert isinstance(body, SendChan)
        chan, payload, cont = body.chan, body.payload, body.cont
        fresh = self._fresh(config)
        if chan == o.chan:  # *S
            base = self._local_p(config, chan, o.time)
            if not isinstance(base, Tensor):
                raise RunError(f"{chan} does not send a channel here")
            nxt = next_type(o.time, base.right)
            config.objs[chan] = Obj("msg", chan, o.time,
                                    SendChan(chan, payload, Fwd(chan, fresh)))
            self._add(config, Obj("proc", fresh, o.time,
                                  rename_chans(cont, {chan: fresh})), nxt)
        else:  # -oS
            base = self._local_c(config, chan, o.time)
            if not isinstance(base, Lolli):
                raise RunError(f"{chan} does not receive a channel here")
            nxt = next_type(o.time, base.cont)
            config.objs[o.chan] = Obj("proc", o.chan, o.time,
                                      rename_chans(cont, {chan: fresh}))
            self._add(config, Obj("msg", fresh, o.time,
                                  SendChan(chan, payload, Fwd(fresh, chan))),
                      nxt)
        return config

    def _close(self, config: Configuration, o: Obj) -> Configuration:
        config = config.copy()
        config.objs[o.chan] = Obj("msg", o.chan, o.time, o.body)
        return config

    def _now(self, config: Configuration, o: Obj) -> Configuration:
        config = config.copy()
        body = o.body
        assert isinstance(body, Now)
        chan, cont = body.chan, body.cont
        fresh = self._fresh(config)
        if chan == o.chan:  # provider announces readiness: <>S
            base = self._local_p(config, chan, o.time)
            if not isinstance(base, Diamond):
                raise RunError(f"{chan} is not an eventually here")
            nxt = next_type(o.time, base.inner)
            config.objs[chan] = Obj("msg", chan, o.time,
                                    Now(chan, Fwd(chan, fresh)))
            self._add(config, Obj("proc", fresh, o.time,
                                  rename_chans(cont, {chan: fresh})), nxt)
        else:  # client pokes an always: []S
            base = self._local_c(config, chan, o.time)
            if not isinstance(base, Box):
                raise RunError(f"{chan} is not an always here")
            nxt = next_type(o.time, base.inner)
            config.objs[o.chan] = Obj("proc", o.chan, o.time,
                                      rename_chans(cont, {chan: fresh}))
            self._add(config, Obj("msg", fresh, o.time,
                                  Now(chan, Fwd(fresh, chan))), nxt)
        return config

    def _cut(self, config: Configuration, o: Obj) -> Configuration:
        config = config.copy()
        body = o.body
        assert isinstance(body, Cut)
        fresh = self._fresh(config)
        sub = {body.dest: fresh}
        config.objs[o.chan] = Obj("proc", o.chan, o.time,
                                  rename_chans(body.cont, sub))
        self._add(config, Obj("proc", fresh, o.time,
                              rename_chans(body.body, sub)),
                  next_type(o.time, body.annot))
        return config

    def _def(self, config: Configuration, o: Obj) -> Configuration:
        config = config.copy()
        body = o.body
        assert isinstance(body, (Spawn, TailCall))
        proc, chans = body.proc, body.chans
        decl = self.sig.decl(proc)
        if proc not in self.sig.procdefs:
            raise RunError(f"process '{proc}' has no definition")
        dcl = self.sig.procdefs[proc].clauses[0]
        fresh = self._fresh(config)
        sub = {dcl.dest: fresh}
        for formal, actual in zip(dcl.chans, chans):
            sub[formal] = actual
        spawned = rename_chans(dcl.body, sub)
        # The spawned body consumes its arguments at the declared types.
        for actual, (_, want) in zip(chans, decl.ctx):
            config.ctypes[actual] = next_type(o.time, want)
        if isinstance(body, Spawn):
            cont = rename_chans(body.cont, {body.dest: fresh})
        else:
            cont = Fwd(o.chan, fresh)
        config.objs[o.chan] = Obj("proc", o.chan, o.time, cont)
        self._add(config, Obj("proc", fresh, o.time, spawned),
                  next_type(o.time, decl.offer_type))
        return config

    def _delay(self, config: Configuration, o: Obj) -> Configuration:
        config = config.copy()
        body = o.body
        assert isinstance(body, Delay)
        if not isinstance(body.count, int):
            raise RunError("delay with a non-ground count")
        cont = body.cont if body.count == 1 else \
            Delay(body.count - 1, body.origin, body.cont)
        config.objs[o.chan] = Obj(o.kind, o.chan, o.time + 1, cont)
        return config

    def _case_pos(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # +C: positive label message meets a client case.
        config = config.copy()
        mb, ob = m.body, o.body
        assert isinstance(mb, SendLabel) and isinstance(ob, Case)
        cont = dict(ob.branches)[mb.label]
        nxt_chan = mb.cont.src  # msg continuation: Fwd(chan, fresh)
        self._drop(config, m.chan)
        config.objs[o.chan] = Obj("proc", o.chan, o.time,
                                  rename_chans(cont, {ob.chan: nxt_chan}))
        return config

    def _case_neg(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # &C: provider case meets a negative label message; the provider
        # continues by providing the message's fresh channel.
        config = config.copy()
        mb, ob = m.body, o.body
        assert isinstance(mb, SendLabel) and isinstance(ob, Case)
        cont = dict(ob.branches)[mb.label]
        fresh = m.chan  # msg provides the continuation channel
        self._drop(config, o.chan)
        config.objs[fresh] = Obj("proc", fresh, o.time,
                                 rename_chans(cont, {ob.chan: fresh}))
        return config

    def _wait(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        config = config.copy()
        ob = o.body
        assert isinstance(ob, Wait)
        self._drop(config, m.chan)
        config.objs[o.chan] = Obj("proc", o.chan, o.time, ob.cont)
        return config

    def _recv_pos(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # *C: positive channel-send message meets a client receive.
        config = config.copy()
        mb, ob = m.body, o.body
        assert isinstance(mb, SendChan) and isinstance(ob, RecvChan)
        nxt_chan = mb.cont.src
        sub = {ob.bind: mb.payload, ob.chan: nxt_chan}
        self._drop(config, m.chan)
        config.objs[o.chan] = Obj("proc", o.chan, o.time,
                                  rename_chans(ob.cont, sub))
        return config

    def _recv_neg(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # -oC: provider receive meets a negative channel-send message.
        config = config.copy()
        mb, ob = m.body, o.body
        assert isinstance(mb, SendChan) and isinstance(ob, RecvChan)
        fresh = m.chan
        sub = {ob.bind: mb.payload, ob.chan: fresh}
        self._drop(config, o.chan)
        config.objs[fresh] = Obj("proc", fresh, o.time,
                                 rename_chans(ob.cont, sub))
        return config

    def _fwd_up(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # id+C: message travels up through the forward: msg(d), fwd c<-d.
        config = config.copy()
        ob = o.body
        assert isinstance(ob, Fwd)
        newbody = rename_chans(m.body, {ob.src: o.chan})
        ptype = config.ptypes[m.chan]
        self._drop(config, m.chan)
        config.objs[o.chan] = Obj("msg", o.chan, m.time, newbody)
        config.ptypes[o.chan] = ptype
        return config

    def _fwd_down(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # id-C: the sole client of c is a message; redirect it to d.
        config = config.copy()
        ob = o.body
        assert isinstance(ob, Fwd)
        newbody = rename_chans(m.body, {o.chan: ob.src})
        ctype = config.ctypes[o.chan]
        self._drop(config, o.chan)
        config.objs[m.chan] = Obj("msg", m.chan, m.time, newbody)
        config.ctypes[ob.src] = ctype
        return config

    def _reanchor(self, config: Configuration, proc: Obj, old_time: int,
                  new_time: int, skip: set[str]) -> None:
        """A process jumped from old_time to new_time: re-anchor its channels
        so their local views are preserved (this is where the weak-subtyping
        slack of the configuration typing comes from)."""
        if new_time == old_time:
            return
        used = free_chans(proc.body) - {proc.chan} - skip
        for y in used:
            local = self.ops.shift_left_n(config.ctypes[y], old_time)
            if local is None:
                raise RunError(f"cannot re-anchor {y}")
            config.ctypes[y] = next_type(new_time, local)
        if proc.chan not in skip and proc.chan in config.ptypes:
            local = self.ops.shift_right_n(config.ptypes[proc.chan], old_time)
            if local is None:
                raise RunError(f"cannot re-anchor {proc.chan}")
            config.ptypes[proc.chan] = next_type(new_time, local)

    def _when_client(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # <>C: now! message (positive) meets a waiting client; the client
        # jumps forward to the message's time.
        config = config.copy()
        mb, ob = m.body, o.body
        assert isinstance(mb, Now) and isinstance(ob, When)
        nxt_chan = mb.cont.src
        cont = rename_chans(ob.cont, {ob.chan: nxt_chan})
        self._drop(config, m.chan)
        newproc = Obj("proc", o.chan, m.time, cont)
        self._reanchor(config, newproc, o.time, m.time, skip={nxt_chan})
        config.objs[o.chan] = newproc
        return config

    def _when_provider(self, config: Configuration, o: Obj, m: Obj) -> Configuration:
        # []C: waiting provider meets a negative now! message; the provider
        # jumps forward and continues by providing the fresh channel.
        config = config.copy()
        mb, ob = m.body, o.body
        assert isinstance(mb, Now) and isinstance(ob, When)
        fresh = m.chan
        cont = rename_chans(ob.cont, {ob.chan: fresh})
        newproc = Obj("proc", fresh, m.time, cont)
        self._reanchor(config, newproc, o.time, m.time, skip={fresh})
        self._drop(config, o.chan)
        config.objs[fresh] = newproc
        return config

    # -- stepping -------------------------------------------------------------
    def step(self, config: Configuration, scheduler,
             trace: Trace | None = None) -> Optional[Configuration]:
        """Apply one enabled rule chosen by the scheduler; None if quiescent.
        Raises StuckError if nothing is enabled but an object is not poised."""
        candidates = self.enabled(config)
        rule = scheduler.pick(config, candidates) if candidates else None
        if rule is None:
            bad = [o for o in config.objs.values() if not is_poised_obj(o)]
            if bad:
                raise StuckError(
                    f"configuration is stuck and not poised: "
                    f"{', '.join(o.render() for o in bad)}")
            return None
        before = rule.consumed
        out = rule.apply(config)
        if trace is not None:
            produced = [out.objs[c] for c in out.objs
                        if c not in config.objs or out.objs[c] is not config.objs[c]]
            trace.add(rule.name, before, produced)
        return out

    def run(self, config: Configuration, scheduler, step_budget: int = 10_000,
            trace: Trace | None = None,
            on_step: Callable[[Configuration], None] | None = None):
        """Iterate until quiescence or the budget is exhausted.
        Returns (final configuration, status) with status in
        {"quiescent", "budget"}."""
        for _ in range(step_budget):
            nxt = self.step(config, scheduler, trace)
            if nxt is None:
                return config, "quiescent"
            config = nxt
            if on_step is not None:
                on_step(config)
        return config, "budget"


# ---------------------------------------------------------------------------
# Poisedness and configuration typing

def is_poised_obj(o: Obj) -> bool:
    if o.kind == "msg":
        return True
    match o.body:
        case SendLabel(chan, _, _) | Case(chan, _) | Close(chan) \
                | SendChan(chan, _, _) | RecvChan(_, chan, _) \
                | When(chan, _) | Now(chan, _):
            return chan == o.chan
        case Fwd():
            return True
        case _:
            return False


def is_poised(config: Configuration) -> bool:
    return all(is_poised_obj(o) for o in config.objs.values())


def check_configuration(ops: TypeOps, provides_in: dict[str, SessionType],
                        config: Configuration,
                        provides_out: dict[str, SessionType],
                        cache: dict | None = None) -> None:
    """Typecheck a configuration against its external interface; raises
    ConfigTypeError on the first offending object.

    A caller re-checking successive configurations of one run may pass a
    dict as `cache`: objects whose interfaces did not change are then
    skipped (an object's verdict depends only on itself and its tracked
    types, so this is a pure memoization)."""
    objs = config.objs
    consumers: dict[str, str] = {}
    for o in objs.values():
        for y in free_chans(o.body) - {o.chan}:
            if y in consumers:
                raise ConfigTypeError(f"channel {y} has two clients "
                                      f"({consumers[y]} and {o.chan})")
            consumers[y] = o.chan
    for y in consumers:
        if y not in objs and y not in provides_in:
            raise ConfigTypeError(f"channel {y} is consumed but not provided")
    for c, want in provides_out.items():
        if c not in objs:
            # Passed straight through from the input interface.
            if c not in provides_in:
                raise ConfigTypeError(f"offered channel {c} is not provided")
            if not is_weak_subtype(ops, provides_in[c], want):
                raise ConfigTypeError(f"pass-through channel {c} weakens "
                                      f"beyond weak subtyping")
            continue
        if c in consumers:
            raise ConfigTypeError(f"offered channel {c} has an internal client")
    for c, o in objs.items():
        if c not in consumers and c not in provides_out:
            raise ConfigTypeError(f"channel {c} is provided but never used")

    # Provider-before-client order must be acyclic.
    state: dict[str, int] = {}

    def visit(c: str) -> None:
        if state.get(c) == 2:
            return
        if state.get(c) == 1:
            raise ConfigTypeError(f"cyclic channel dependency through {c}")
        state[c] = 1
        if c in objs:
            for y in free_chans(objs[c].body) - {c}:
                visit(y)
        state[c] = 2

    for c in objs:
        visit(c)

    # Interface gaps must stay within weak subtyping.
    for c in objs:
        prov = config.ptypes.get(c)
        cons = config.ctypes.get(c)
        if prov is None or cons is None:
            raise ConfigTypeError(f"no tracked interface for {c}")
        if not is_weak_subtype(ops, prov, cons):
            raise ConfigTypeError(
                f"interface gap on {c} exceeds weak subtyping: "
                f"{fmt_type(prov)} against {fmt_type(cons)}")
    for c, want in provides_out.items():
        if c in objs and not is_weak_subtype(ops, config.ptypes[c], want):
            raise ConfigTypeError(
                f"offered channel {c} provides {fmt_type(config.ptypes[c])}, "
                f"interface demands {fmt_type(want)}")

    # Every object typechecks at its own time shift of the interface.
    for c, o in objs.items():
        used = free_chans(o.body) - {c}
        srcs = {}
        for y in used:
            src = config.ctypes.get(y, provides_in.get(y))
            if src is None:
                raise ConfigTypeError(f"no interface for consumed channel {y}")
            srcs[y] = src
        if cache is not None:
            key = (o, config.ptypes[c], tuple(sorted(srcs.items())))
            if key in cache:
                continue
        ctx: dict[str, SessionType] = {}
        bad = None
        for y, src in srcs.items():
            local = ops.shift_left_n(src, o.time)
            if local is None:
                bad = y
                break
            ctx[y] = local
        if bad is not None:
            raise ConfigTypeError(
                f"{o.render()}: used channel {bad} has no defined view at "
                f"time {o.time}")
        offer = ops.shift_right_n(config.ptypes[c], o.time)
        if offer is None:
            raise ConfigTypeError(
                f"{o.render()}: offered type undefined at time {o.time}")
        try:
            check_process(ops, ctx, o.body, c, offer, call_subtyping=True)
        except Exception as e:
            raise ConfigTypeError(f"{o.render()}: {e}") from e
        if cache is not None:
            cache[key] = True


# ---------------------------------------------------------------------------
# Observables

def root_chain(config: Configuration, root: str) -> list[tuple[str, str, int]]:
    """Follow the message chain from the root channel outward, yielding
    (kind, payload, time) triples: labels, sent channels, now! and close."""
    out: list[tuple[str, str, int]] = []
    cur = root
    while cur is not None and cur in config.objs:
        o = config.objs[cur]
        if o.kind != "msg":
            break
        match o.body:
            case SendLabel(chan, label, Fwd(_, nxt)) if chan == cur:
                out.append(("label", label, o.time))
                cur = nxt
            case SendChan(chan, payload, Fwd(_, nxt)) if chan == cur:
                out.append(("chan", payload, o.time))
                cur = nxt
            case Now(chan, Fwd(_, nxt)) if chan == cur:
                out.append(("now", "", o.time))
                cur = nxt
            case Close(_):
                out.append(("close", "", o.time))
                cur = None
            case _:
                break
    return out
