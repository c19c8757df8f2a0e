"""AST for the timed session language: index arithmetic, session types,
process expressions, and signatures.

All nodes are frozen dataclasses, so ground (parameter-free) terms are
hashable and can be used directly as memo keys.  Source positions are
carried on process nodes but excluded from equality.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import EvalError

Pos = tuple[int, int]


# --------------------------------------------------------------------------
# Index arithmetic over naturals (no subtraction).  Plain ints are literals.

@dataclass(frozen=True)
class IVar:
    name: str


@dataclass(frozen=True)
class IAdd:
    left: "IndexExpr"
    right: "IndexExpr"


@dataclass(frozen=True)
class IMul:
    left: "IndexExpr"
    right: "IndexExpr"


IndexExpr = Union[int, IVar, IAdd, IMul]


def eval_index(e: IndexExpr, binding: dict[str, int]) -> int:
    match e:
        case int(n):
            return n
        case IVar(name):
            if name not in binding:
                raise EvalError(f"unbound parameter '{name}'")
            return binding[name]
        case IAdd(a, b):
            return eval_index(a, binding) + eval_index(b, binding)
        case IMul(a, b):
            return eval_index(a, binding) * eval_index(b, binding)
    raise EvalError(f"malformed index expression {e!r}")


def index_vars(e: IndexExpr) -> set[str]:
    match e:
        case int():
            return set()
        case IVar(name):
            return {name}
        case IAdd(a, b) | IMul(a, b):
            return index_vars(a) | index_vars(b)
    return set()


def fmt_index(e: IndexExpr, prec: int = 0) -> str:
    match e:
        case int(n):
            return str(n)
        case IVar(name):
            return name
        case IAdd(a, b):
            s = f"{fmt_index(a, 1)}+{fmt_index(b, 1)}"
            return f"({s})" if prec > 1 else s
        case IMul(a, b):
            return f"{fmt_index(a, 2)}*{fmt_index(b, 2)}"
    return repr(e)


# --------------------------------------------------------------------------
# Session types

@dataclass(frozen=True)
class Plus:
    branches: tuple[tuple[str, "SessionType"], ...]


@dataclass(frozen=True)
class With:
    branches: tuple[tuple[str, "SessionType"], ...]


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Tensor:
    left: "SessionType"
    right: "SessionType"


@dataclass(frozen=True)
class Lolli:
    arg: "SessionType"
    cont: "SessionType"


@dataclass(frozen=True)
class Next:
    count: IndexExpr  # >= 1 once ground; inner is never itself a Next
    inner: "SessionType"


@dataclass(frozen=True)
class Box:
    inner: "SessionType"


@dataclass(frozen=True)
class Diamond:
    inner: "SessionType"


@dataclass(frozen=True)
class TypeName:
    name: str
    args: tuple[IndexExpr, ...] = ()


SessionType = Union[Plus, With, One, Tensor, Lolli, Next, Box, Diamond, TypeName]


def _cache_hash(cls):
    """Memoize the recursive dataclass hash; type nodes are immutable and
    get used heavily as memo keys."""
    base = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = base(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls


for _cls in (Plus, With, One, Tensor, Lolli, Next, Box, Diamond, TypeName,
             IVar, IAdd, IMul):
    _cache_hash(_cls)

ONE = One()


def next_type(count: IndexExpr, inner: SessionType) -> SessionType:
    """Smart constructor keeping the Next-normalization invariant."""
    if count == 0:
        return inner
    if isinstance(inner, Next) and isinstance(inner.count, int) and isinstance(count, int):
        return Next(count + inner.count, inner.inner)
    if isinstance(inner, Next):
        return Next(IAdd(count, inner.count), inner.inner)
    return Next(count, inner)


def branch_get(branches: tuple[tuple[str, SessionType], ...], label: str) -> Optional[SessionType]:
    for lab, t in branches:
        if lab == label:
            return t
    return None


def branch_labels(branches: tuple[tuple[str, SessionType], ...]) -> tuple[str, ...]:
    return tuple(lab for lab, _ in branches)


def type_is_ground(t: SessionType) -> bool:
    match t:
        case Plus(bs) | With(bs):
            return all(type_is_ground(u) for _, u in bs)
        case One():
            return True
        case Tensor(a, b) | Lolli(a, b):
            return type_is_ground(a) and type_is_ground(b)
        case Next(c, inner):
            return isinstance(c, int) and type_is_ground(inner)
        case Box(inner) | Diamond(inner):
            return type_is_ground(inner)
        case TypeName(_, args):
            return len(args) == 0
    return False


# --------------------------------------------------------------------------
# Process expressions

class Origin(enum.Enum):
    SOURCE = "source"
    TICK = "tick"
    RECON = "recon"


def _pos_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Spawn:
    dest: str
    proc: str
    args: tuple[IndexExpr, ...]
    chans: tuple[str, ...]
    cont: "ProcExpr"
    via_tailcall: bool = field(default=False, compare=False, repr=False)
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class TailCall:
    dest: str
    proc: str
    args: tuple[IndexExpr, ...]
    chans: tuple[str, ...]
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Cut:
    dest: str
    annot: SessionType
    body: "ProcExpr"
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Fwd:
    dest: str
    src: str
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class SendLabel:
    chan: str
    label: str
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Case:
    chan: str
    branches: tuple[tuple[str, "ProcExpr"], ...]
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Close:
    chan: str
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Wait:
    chan: str
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class SendChan:
    chan: str
    payload: str
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class RecvChan:
    bind: str
    chan: str
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Delay:
    count: IndexExpr  # >= 1 once ground
    origin: Origin
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class When:
    chan: str
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Now:
    chan: str
    cont: "ProcExpr"
    pos: Optional[Pos] = _pos_field()


ProcExpr = Union[Spawn, TailCall, Cut, Fwd, SendLabel, Case, Close, Wait,
                 SendChan, RecvChan, Delay, When, Now]


def free_chans(p: ProcExpr) -> set[str]:
    """Channels a process uses or offers, with binders removed."""
    match p:
        case Spawn(dest, _, _, chans, cont):
            return set(chans) | (free_chans(cont) - {dest})
        case TailCall(dest, _, _, chans):
            return {dest} | set(chans)
        case Cut(dest, _, body, cont):
            return (free_chans(body) - {dest}) | (free_chans(cont) - {dest})
        case Fwd(dest, src):
            return {dest, src}
        case SendLabel(chan, _, cont) | Wait(chan, cont) | When(chan, cont) | Now(chan, cont):
            return {chan} | free_chans(cont)
        case Case(chan, branches):
            out = {chan}
            for _, body in branches:
                out |= free_chans(body)
            return out
        case Close(chan):
            return {chan}
        case SendChan(chan, payload, cont):
            return {chan, payload} | free_chans(cont)
        case RecvChan(bind, chan, cont):
            return {chan} | (free_chans(cont) - {bind})
        case Delay(_, _, cont):
            return free_chans(cont)
    raise AssertionError(f"unknown process node {p!r}")


def rename_chans(p: ProcExpr, sub: dict[str, str]) -> ProcExpr:
    """Capture-aware channel renaming (binders shadow the substitution)."""
    if not sub:
        return p

    def get(x: str) -> str:
        return sub.get(x, x)

    def under(binder: str) -> dict[str, str]:
        if binder in sub:
            inner = dict(sub)
            del inner[binder]
            return inner
        return sub

    match p:
        case Spawn(dest, proc, args, chans, cont, via):
            return Spawn(dest, proc, args, tuple(get(c) for c in chans),
                         rename_chans(cont, under(dest)), via, p.pos)
        case TailCall(dest, proc, args, chans):
            return TailCall(get(dest), proc, args, tuple(get(c) for c in chans), p.pos)
        case Cut(dest, annot, body, cont):
            inner = under(dest)
            return Cut(dest, annot, rename_chans(body, inner),
                       rename_chans(cont, inner), p.pos)
        case Fwd(dest, src):
            return Fwd(get(dest), get(src), p.pos)
        case SendLabel(chan, label, cont):
            return SendLabel(get(chan), label, rename_chans(cont, sub), p.pos)
        case Case(chan, branches):
            return Case(get(chan),
                        tuple((lab, rename_chans(b, sub)) for lab, b in branches), p.pos)
        case Close(chan):
            return Close(get(chan), p.pos)
        case Wait(chan, cont):
            return Wait(get(chan), rename_chans(cont, sub), p.pos)
        case SendChan(chan, payload, cont):
            return SendChan(get(chan), get(payload), rename_chans(cont, sub), p.pos)
        case RecvChan(bind, chan, cont):
            return RecvChan(bind, get(chan), rename_chans(cont, under(bind)), p.pos)
        case Delay(count, origin, cont):
            return Delay(count, origin, rename_chans(cont, sub), p.pos)
        case When(chan, cont):
            return When(get(chan), rename_chans(cont, sub), p.pos)
        case Now(chan, cont):
            return Now(get(chan), rename_chans(cont, sub), p.pos)
    raise AssertionError(f"unknown process node {p!r}")


# --------------------------------------------------------------------------
# Signatures: definitions keyed by index patterns (0 / v / v+k)

@dataclass(frozen=True)
class PatConst:
    value: int


@dataclass(frozen=True)
class PatVar:
    name: str


@dataclass(frozen=True)
class PatSucc:
    name: str
    offset: int  # matches value >= offset, binding name = value - offset


IndexPat = Union[PatConst, PatVar, PatSucc]


def pat_match(pat: IndexPat, value: int) -> Optional[dict[str, int]]:
    match pat:
        case PatConst(v):
            return {} if value == v else None
        case PatVar(name):
            return {name: value}
        case PatSucc(name, off):
            return {name: value - off} if value >= off else None
    return None


def fmt_pat(pat: IndexPat) -> str:
    match pat:
        case PatConst(v):
            return str(v)
        case PatVar(name):
            return name
        case PatSucc(name, off):
            return f"{name}+{off}"
    return repr(pat)


@dataclass
class TypeClause:
    patterns: tuple[IndexPat, ...]
    body: SessionType
    pos: Optional[Pos] = field(default=None, compare=False)


@dataclass
class TypeDef:
    name: str
    clauses: list[TypeClause]

    @property
    def arity(self) -> int:
        return len(self.clauses[0].patterns)


@dataclass
class DeclClause:
    patterns: tuple[IndexPat, ...]
    ctx: tuple[tuple[str, SessionType], ...]
    offer_chan: str
    offer_type: SessionType
    pos: Optional[Pos] = field(default=None, compare=False)


@dataclass
class ProcDecl:
    name: str
    clauses: list[DeclClause]

    @property
    def arity(self) -> int:
        return len(self.clauses[0].patterns)


@dataclass
class DefClause:
    patterns: tuple[IndexPat, ...]
    dest: str
    chans: tuple[str, ...]
    body: ProcExpr
    pos: Optional[Pos] = field(default=None, compare=False)


@dataclass
class ProcDef:
    name: str
    clauses: list[DefClause]


@dataclass
class Signature:
    typedefs: dict[str, TypeDef] = field(default_factory=dict)
    procdecls: dict[str, ProcDecl] = field(default_factory=dict)
    procdefs: dict[str, ProcDef] = field(default_factory=dict)

    def is_ground(self) -> bool:
        for td in self.typedefs.values():
            if td.arity or len(td.clauses) != 1 or not type_is_ground(td.clauses[0].body):
                return False
        for pd in self.procdecls.values():
            if pd.arity or len(pd.clauses) != 1:
                return False
            cl = pd.clauses[0]
            if not all(type_is_ground(t) for _, t in cl.ctx) or not type_is_ground(cl.offer_type):
                return False
        return True

    # Ground accessors -----------------------------------------------------
    def type_body(self, name: str) -> SessionType:
        return self.typedefs[name].clauses[0].body

    def decl(self, name: str) -> DeclClause:
        return self.procdecls[name].clauses[0]

    def proc_body(self, name: str) -> DefClause:
        return self.procdefs[name].clauses[0]
