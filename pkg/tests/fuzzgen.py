"""Type-directed random program generation for the fuzz tests.

Programs are built by walking the explicit typing rules backwards from a
random closed goal, so every generated term typechecks by construction.
Generation backtracks: a randomly chosen rule may lead into a dead end
even though the goal is derivable some other way.
"""

from __future__ import annotations

import random

from tss.ast import (Box, Case, Close, Cut, DeclClause, DefClause, Delay,
                     Diamond, Fwd, Lolli, Now, ONE, One, Origin, Plus,
                     ProcDecl, ProcDef, ProcExpr, RecvChan, SendChan,
                     SendLabel, SessionType, Signature, Tensor, Wait, When,
                     With, next_type)
from tss.typeops import TypeOps

_LABELS = ["a", "b", "c"]


def gen_type(rng: random.Random, depth: int) -> SessionType:
    if depth <= 0:
        return ONE
    kind = rng.choice(["one", "plus", "with", "tensor", "lolli",
                       "next", "next", "box", "diamond"])
    sub = lambda: gen_type(rng, depth - 1)
    if kind == "one":
        return ONE
    if kind == "plus":
        labs = _LABELS[:rng.randint(1, 2)]
        return Plus(tuple((lab, sub()) for lab in labs))
    if kind == "with":
        labs = _LABELS[:rng.randint(1, 2)]
        return With(tuple((lab, sub()) for lab in labs))
    if kind == "tensor":
        return Tensor(sub(), sub())
    if kind == "lolli":
        return Lolli(sub(), sub())
    if kind == "next":
        return next_type(rng.randint(1, 2), sub())
    if kind == "box":
        return Box(sub())
    return Diamond(sub())


class Gen:
    def __init__(self, ops: TypeOps, rng: random.Random, budget: int = 600):
        self.ops = ops
        self.rng = rng
        self.budget = budget
        self.fresh = 0

    def _name(self) -> str:
        self.fresh += 1
        return f"v{self.fresh}"

    def gen(self, ctx: dict, offer_chan: str, offer: SessionType,
            cuts: int) -> ProcExpr | None:
        if self.budget <= 0:
            return None
        self.budget -= 1
        ops = self.ops
        moves = []

        base = ops.expose(offer)
        if isinstance(base, One) and not ctx:
            moves.append(("close", None))
        if len(ctx) == 1:
            (y, t), = ctx.items()
            if ops.type_equal(t, offer):
                moves.append(("fwd", y))
        if isinstance(base, Plus):
            moves.append(("sendlab_offer", base))
        if isinstance(base, With):
            moves.append(("case_offer", base))
        if isinstance(base, Tensor):
            payload = [d for d, t in ctx.items()
                       if ops.type_equal(t, base.left)]
            if payload:
                moves.append(("sendchan_offer", (base, self.rng.choice(payload))))
            elif cuts > 0:
                moves.append(("cut_payload_offer", base))
        if isinstance(base, Lolli):
            moves.append(("recv_offer", base))
        if isinstance(base, Diamond):
            moves.append(("now_offer", base))
        if isinstance(base, Box) and \
                all(ops.patient(t, "box") for t in ctx.values()):
            moves.append(("when_offer", base))

        for y, t in ctx.items():
            b = ops.expose(t)
            if isinstance(b, One):
                moves.append(("wait", y))
            elif isinstance(b, With):
                moves.append(("sendlab_ctx", (y, b)))
            elif isinstance(b, Plus):
                moves.append(("case_ctx", (y, b)))
            elif isinstance(b, Tensor):
                moves.append(("recv_ctx", (y, b)))
            elif isinstance(b, Lolli):
                payload = [d for d, u in ctx.items()
                           if d != y and ops.type_equal(u, b.arg)]
                if payload:
                    moves.append(("sendchan_ctx", (y, b, self.rng.choice(payload))))
                elif cuts > 0:
                    moves.append(("cut_payload_ctx", (y, b)))
            elif isinstance(b, Box):
                moves.append(("now_ctx", (y, b)))
            elif isinstance(b, Diamond):
                rest_ok = all(ops.patient(u, "box")
                              for d, u in ctx.items() if d != y)
                if rest_ok and ops.patient(offer, "diamond"):
                    moves.append(("when_ctx", (y, b)))

        shifted = self._shift(ctx, offer)
        if shifted is not None:
            moves.append(("delay", shifted))

        self.rng.shuffle(moves)
        for kind, data in moves:
            out = self._apply(kind, data, ctx, offer_chan, offer, cuts)
            if out is not None:
                return out
        return None

    def _shift(self, ctx, offer):
        ops = self.ops
        sctx = {}
        for c, t in ctx.items():
            s = ops.shift_left(t)
            if s is None:
                return None
            sctx[c] = s
        soff = ops.shift_right(offer)
        if soff is None:
            return None
        if soff == offer and all(sctx[c] == ctx[c] for c in ctx):
            return None  # no progress; skip idle delays
        return sctx, soff

    def _apply(self, kind, data, ctx, offer_chan, offer, cuts):
        g = self.gen
        match kind:
            case "close":
                return Close(offer_chan)
            case "fwd":
                return Fwd(offer_chan, data)
            case "sendlab_offer":
                lab, cont = self.rng.choice(data.branches)
                sub = g(ctx, offer_chan, cont, cuts)
                return None if sub is None else SendLabel(offer_chan, lab, sub)
            case "case_offer":
                out = []
                for lab, cont in data.branches:
                    sub = g(dict(ctx), offer_chan, cont, cuts)
                    if sub is None:
                        return None
                    out.append((lab, sub))
                return Case(offer_chan, tuple(out))
            case "sendchan_offer":
                base, d = data
                ctx2 = dict(ctx)
                del ctx2[d]
                sub = g(ctx2, offer_chan, base.right, cuts)
                return None if sub is None else SendChan(offer_chan, d, sub)
            case "cut_payload_offer":
                base = data
                x = self._name()
                body = g({}, x, base.left, cuts - 1)
                if body is None:
                    return None
                ctx2 = dict(ctx)
                ctx2[x] = base.left
                sub = g(ctx2, offer_chan, offer, cuts - 1)
                return None if sub is None else Cut(x, base.left, body, sub)
            case "recv_offer":
                y = self._name()
                ctx2 = dict(ctx)
                ctx2[y] = data.arg
                sub = g(ctx2, offer_chan, data.cont, cuts)
                return None if sub is None else RecvChan(y, offer_chan, sub)
            case "now_offer":
                sub = g(ctx, offer_chan, data.inner, cuts)
                return None if sub is None else Now(offer_chan, sub)
            case "when_offer":
                sub = g(ctx, offer_chan, data.inner, cuts)
                return None if sub is None else When(offer_chan, sub)
            case "wait":
                ctx2 = dict(ctx)
                del ctx2[data]
                sub = g(ctx2, offer_chan, offer, cuts)
                return None if sub is None else Wait(data, sub)
            case "sendlab_ctx":
                y, b = data
                lab, cont = self.rng.choice(b.branches)
                ctx2 = dict(ctx)
                ctx2[y] = cont
                sub = g(ctx2, offer_chan, offer, cuts)
                return None if sub is None else SendLabel(y, lab, sub)
            case "case_ctx":
                y, b = data
                out = []
                for lab, cont in b.branches:
                    ctx2 = dict(ctx)
                    ctx2[y] = cont
                    sub = g(ctx2, offer_chan, offer, cuts)
                    if sub is None:
                        return None
                    out.append((lab, sub))
                return Case(y, tuple(out))
            case "recv_ctx":
                y, b = data
                d = self._name()
                ctx2 = dict(ctx)
                ctx2[d] = b.left
                ctx2[y] = b.right
                sub = g(ctx2, offer_chan, offer, cuts)
                return None if sub is None else RecvChan(d, y, sub)
            case "sendchan_ctx":
                y, b, d = data
                ctx2 = dict(ctx)
                del ctx2[d]
                ctx2[y] = b.cont
                sub = g(ctx2, offer_chan, offer, cuts)
                return None if sub is None else SendChan(y, d, sub)
            case "cut_payload_ctx":
                y, b = data
                x = self._name()
                body = g({}, x, b.arg, cuts - 1)
                if body is None:
                    return None
                ctx2 = dict(ctx)
                ctx2[x] = b.arg
                sub = g(ctx2, offer_chan, offer, cuts - 1)
                return None if sub is None else Cut(x, b.arg, body, sub)
            case "now_ctx":
                y, b = data
                ctx2 = dict(ctx)
                ctx2[y] = b.inner
                sub = g(ctx2, offer_chan, offer, cuts)
                return None if sub is None else Now(y, sub)
            case "when_ctx":
                y, b = data
                ctx2 = dict(ctx)
                ctx2[y] = b.inner
                sub = g(ctx2, offer_chan, offer, cuts)
                return None if sub is None else When(y, sub)
            case "delay":
                sctx, soff = data
                sub = g(sctx, offer_chan, soff, cuts)
                return None if sub is None else Delay(1, Origin.SOURCE, sub)
        return None


def gen_program(seed: int):
    """A random closed, well-typed, explicit program and its signature:
    Signature with one definition `main` offering a random type."""
    rng = random.Random(seed)
    ops = TypeOps(Signature())
    for _ in range(50):
        offer = gen_type(rng, rng.randint(1, 3))
        gen = Gen(ops, rng)
        body = gen.gen({}, "x", offer, cuts=2)
        if body is None:
            continue
        sig = Signature()
        sig.procdecls["main"] = ProcDecl(
            "main", [DeclClause((), (), "x", offer)])
        sig.procdefs["main"] = ProcDef(
            "main", [DefClause((), "x", (), body)])
        return sig
    raise AssertionError(f"no program generated for seed {seed}")


def strip_temporal(p: ProcExpr) -> ProcExpr:
    """Remove every delay/when?/now!, leaving the basic skeleton."""
    match p:
        case Delay(_, _, cont) | When(_, cont) | Now(_, cont):
            return strip_temporal(cont)
        case Case(chan, branches):
            return Case(chan, tuple((lab, strip_temporal(b))
                                    for lab, b in branches))
        case Cut(dest, annot, body, cont):
            return Cut(dest, annot, strip_temporal(body), strip_temporal(cont))
        case SendLabel(chan, label, cont):
            return SendLabel(chan, label, strip_temporal(cont))
        case Wait(chan, cont):
            return Wait(chan, strip_temporal(cont))
        case SendChan(chan, payload, cont):
            return SendChan(chan, payload, strip_temporal(cont))
        case RecvChan(bind, chan, cont):
            return RecvChan(bind, chan, strip_temporal(cont))
        case _:
            return p
