"""Recursive-descent parser producing a Signature, plus the name-resolution
pass that fixes up bare tail calls and checks definition arities."""

from __future__ import annotations

from . import ast
from .ast import (Box, Case, Close, Cut, DeclClause, DefClause, Delay, Diamond,
                  Fwd, IAdd, IMul, IVar, IndexExpr, IndexPat, Lolli, Next, Now,
                  ONE, Origin, PatConst, PatSucc, PatVar, Plus, ProcDecl,
                  ProcDef, ProcExpr, RecvChan, SendChan, SendLabel,
                  SessionType, Signature, Spawn, TailCall, Tensor, TypeClause,
                  TypeDef, TypeName, Wait, When, With, next_type)
from .errors import ParseError, ScopeError
from .lexer import Token, tokenize


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # Token plumbing --------------------------------------------------------
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"unexpected {t.value!r}", t.line, t.col, (kind,))
        return self.next()

    def fail(self, msg: str, *expected: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col, expected)

    # Index expressions ------------------------------------------------------
    def index_expr(self) -> IndexExpr:
        e = self.index_term()
        while self.at("+"):
            self.next()
            r = self.index_term()
            e = r + e if isinstance(e, int) and isinstance(r, int) else IAdd(e, r)
        return e

    def index_term(self) -> IndexExpr:
        e = self.index_factor()
        while self.at("*"):
            self.next()
            r = self.index_factor()
            e = e * r if isinstance(e, int) and isinstance(r, int) else IMul(e, r)
        return e

    def index_factor(self) -> IndexExpr:
        if self.at("NAT"):
            return int(self.next().value)
        if self.at("IDENT"):
            return IVar(self.next().value)
        if self.at("("):
            self.next()
            e = self.index_expr()
            self.expect(")")
            return e
        self.fail("expected index expression", "NAT", "IDENT", "(")

    def index_args(self) -> tuple[IndexExpr, ...]:
        """Optional `[e, ...]` argument list after a name."""
        if not self.at("["):
            return ()
        self.next()
        args = [self.index_expr()]
        while self.at(","):
            self.next()
            args.append(self.index_expr())
        self.expect("]")
        return tuple(args)

    def index_patterns(self) -> tuple[IndexPat, ...]:
        """Optional `[p, ...]` pattern list on a definition head."""
        if not self.at("["):
            return ()
        self.next()
        pats = [self.index_pattern()]
        while self.at(","):
            self.next()
            pats.append(self.index_pattern())
        self.expect("]")
        return tuple(pats)

    def index_pattern(self) -> IndexPat:
        if self.at("NAT"):
            return PatConst(int(self.next().value))
        name = self.expect("IDENT").value
        if self.at("+"):
            self.next()
            off = int(self.expect("NAT").value)
            return PatSucc(name, off)
        return PatVar(name)

    # Types -------------------------------------------------------------------
    def type_(self) -> SessionType:
        t = self.type_tensor()
        if self.at("-o"):
            self.next()
            return Lolli(t, self.type_())
        return t

    def type_tensor(self) -> SessionType:
        t = self.type_atom()
        if self.at("*"):
            self.next()
            return Tensor(t, self.type_tensor())
        return t

    def type_atom(self) -> SessionType:
        t = self.peek()
        if t.kind == "+":
            self.next()
            return Plus(self.branches())
        if t.kind == "&":
            self.next()
            return With(self.branches())
        if t.kind == "NAT":
            if t.value != "1":
                self.fail("only the type 1 is a numeric type")
            self.next()
            return ONE
        if t.kind == "(":
            if self.peek(1).kind == ")":
                self.next()
                self.next()
                count: IndexExpr = 1
                if self.at("^"):
                    self.next()
                    count = self.next_count()
                return next_type(count, self.type_atom())
            self.next()
            inner = self.type_()
            self.expect(")")
            return inner
        if t.kind == "[":
            self.next()
            self.expect("]")
            return Box(self.type_atom())
        if t.kind == "<>":
            self.next()
            return Diamond(self.type_atom())
        if t.kind == "IDENT":
            self.next()
            return TypeName(t.value, self.index_args())
        self.fail("expected a type", "+", "&", "1", "()", "[]", "<>", "IDENT")

    def next_count(self) -> IndexExpr:
        if self.at("NAT"):
            return int(self.next().value)
        if self.at("IDENT"):
            return IVar(self.next().value)
        if self.at("{"):
            self.next()
            e = self.index_expr()
            self.expect("}")
            return e
        self.fail("expected a delay count", "NAT", "IDENT", "{")

    def branches(self) -> tuple[tuple[str, SessionType], ...]:
        self.expect("{")
        out = [self.branch()]
        seen = {out[0][0]}
        while self.at(","):
            self.next()
            lab, ty = self.branch()
            if lab in seen:
                self.fail(f"duplicate branch label {lab!r}")
            seen.add(lab)
            out.append((lab, ty))
        self.expect("}")
        return tuple(out)

    def branch(self) -> tuple[str, SessionType]:
        lab = self.expect("IDENT").value
        self.expect(":")
        return lab, self.type_()

    # Processes -----------------------------------------------------------------
    def proc(self) -> ProcExpr:
        t = self.peek()
        pos = (t.line, t.col)
        if t.kind == "case":
            self.next()
            chan = self.expect("IDENT").value
            self.expect("(")
            branches = [self.case_branch()]
            seen = {branches[0][0]}
            while self.at("|"):
                self.next()
                lab, body = self.case_branch()
                if lab in seen:
                    self.fail(f"duplicate case label {lab!r}")
                seen.add(lab)
                branches.append((lab, body))
            self.expect(")")
            return Case(chan, tuple(branches), pos=pos)
        if t.kind == "close":
            self.next()
            return Close(self.expect("IDENT").value, pos=pos)
        if t.kind == "wait":
            self.next()
            chan = self.expect("IDENT").value
            self.expect(";")
            return Wait(chan, self.proc(), pos=pos)
        if t.kind == "send":
            self.next()
            chan = self.expect("IDENT").value
            payload = self.expect("IDENT").value
            self.expect(";")
            return SendChan(chan, payload, self.proc(), pos=pos)
        if t.kind == "delay":
            self.next()
            count: ast.IndexExpr = 1
            if self.at("{"):
                self.next()
                count = self.index_expr()
                self.expect("}")
            self.expect(";")
            return Delay(count, Origin.SOURCE, self.proc(), pos=pos)
        if t.kind == "tick":
            self.next()
            self.expect(";")
            return Delay(1, Origin.TICK, self.proc(), pos=pos)
        if t.kind == "WHEN":
            self.next()
            chan = self.expect("IDENT").value
            self.expect(";")
            return When(chan, self.proc(), pos=pos)
        if t.kind == "NOW":
            self.next()
            chan = self.expect("IDENT").value
            self.expect(";")
            return Now(chan, self.proc(), pos=pos)
        if t.kind == "(":
            self.next()
            p = self.proc()
            self.expect(")")
            return p
        if t.kind == "IDENT":
            name = self.next().value
            if self.at("."):
                self.next()
                label = self.expect("IDENT").value
                self.expect(";")
                return SendLabel(name, label, self.proc(), pos=pos)
            if self.at(":"):
                self.next()
                annot = self.type_()
                self.expect("<-")
                body = self.cut_body()
                self.expect(";")
                return Cut(name, annot, body, self.proc(), pos=pos)
            if self.at("<-"):
                self.next()
                if self.at("recv"):
                    self.next()
                    chan = self.expect("IDENT").value
                    self.expect(";")
                    return RecvChan(name, chan, self.proc(), pos=pos)
                callee = self.expect("IDENT").value
                args = self.index_args()
                chans: list[str] = []
                has_chan_arrow = False
                if self.at("<-"):
                    has_chan_arrow = True
                    self.next()
                    while self.at("IDENT"):
                        chans.append(self.next().value)
                if self.at(";"):
                    self.next()
                    return Spawn(name, callee, args, tuple(chans), self.proc(), pos=pos)
                if has_chan_arrow or args:
                    return TailCall(name, callee, args, tuple(chans), pos=pos)
                # Bare `x <- y`: forward, unless y resolves to a process name.
                return Fwd(name, callee, pos=pos)
        self.fail("expected a process expression")

    def cut_body(self) -> ProcExpr:
        # Compound bodies must be parenthesized so `;` binds unambiguously.
        if self.at("("):
            self.next()
            p = self.proc()
            self.expect(")")
            return p
        t = self.peek()
        if t.kind == "close":
            self.next()
            return Close(self.expect("IDENT").value, pos=(t.line, t.col))
        if t.kind == "IDENT":
            name = self.next().value
            self.expect("<-")
            callee = self.expect("IDENT").value
            args = self.index_args()
            chans: list[str] = []
            if self.at("<-"):
                self.next()
                while self.at("IDENT"):
                    chans.append(self.next().value)
                return TailCall(name, callee, args, tuple(chans), pos=(t.line, t.col))
            if args:
                return TailCall(name, callee, args, (), pos=(t.line, t.col))
            return Fwd(name, callee, pos=(t.line, t.col))
        self.fail("expected a cut body (parenthesize compound processes)")

    def case_branch(self) -> tuple[str, ProcExpr]:
        lab = self.expect("IDENT").value
        self.expect("=>")
        return lab, self.proc()

    # Top level ---------------------------------------------------------------
    def program(self) -> Signature:
        sig = Signature()
        while not self.at("EOF"):
            t = self.peek()
            if t.kind == "type":
                self.next()
                name = self.expect("IDENT").value
                pats = self.index_patterns()
                self.expect("=")
                body = self.type_()
                clause = TypeClause(pats, body, pos=(t.line, t.col))
                td = sig.typedefs.setdefault(name, TypeDef(name, []))
                if td.clauses and len(td.clauses[0].patterns) != len(pats):
                    raise ParseError(f"clauses of '{name}' disagree on arity",
                                     t.line, t.col)
                td.clauses.append(clause)
            elif t.kind == "decl":
                self.next()
                name = self.expect("IDENT").value
                pats = self.index_patterns()
                self.expect(":")
                ctx: list[tuple[str, SessionType]] = []
                if self.at("."):
                    self.next()
                else:
                    while self.at("("):
                        self.next()
                        chan = self.expect("IDENT").value
                        self.expect(":")
                        ctx.append((chan, self.type_()))
                        self.expect(")")
                self.expect("|-")
                self.expect("(")
                offer_chan = self.expect("IDENT").value
                self.expect(":")
                offer_type = self.type_()
                self.expect(")")
                if len({c for c, _ in ctx} | {offer_chan}) != len(ctx) + 1:
                    raise ParseError(f"duplicate channel name in decl '{name}'",
                                     t.line, t.col)
                clause = DeclClause(pats, tuple(ctx), offer_chan, offer_type,
                                    pos=(t.line, t.col))
                pd = sig.procdecls.setdefault(name, ProcDecl(name, []))
                if pd.clauses and len(pd.clauses[0].patterns) != len(pats):
                    raise ParseError(f"decl clauses of '{name}' disagree on arity",
                                     t.line, t.col)
                pd.clauses.append(clause)
            elif t.kind == "proc":
                self.next()
                dest = self.expect("IDENT").value
                self.expect("<-")
                name = self.expect("IDENT").value
                pats = self.index_patterns()
                chans: list[str] = []
                if self.at("<-"):
                    self.next()
                    while self.at("IDENT"):
                        chans.append(self.next().value)
                self.expect("=")
                body = self.proc()
                clause = DefClause(pats, dest, tuple(chans), body, pos=(t.line, t.col))
                pdef = sig.procdefs.setdefault(name, ProcDef(name, []))
                pdef.clauses.append(clause)
            else:
                self.fail("expected a definition", "type", "decl", "proc")
        return sig


# ---------------------------------------------------------------------------
# Resolution: rewrite bare forwards to tail calls, check names and arities.

def _resolve_proc(p: ProcExpr, bound: frozenset[str], sig: Signature) -> ProcExpr:
    match p:
        case Fwd(dest, src):
            if src not in bound and src in sig.procdecls:
                return TailCall(dest, src, (), (), pos=p.pos)
            return p
        case Spawn(dest, proc, args, chans, cont, via):
            _check_call(proc, args, sig, p)
            return Spawn(dest, proc, args, chans,
                         _resolve_proc(cont, bound | {dest}, sig), via, p.pos)
        case TailCall(_, proc, args, _):
            _check_call(proc, args, sig, p)
            return p
        case Cut(dest, annot, body, cont):
            _check_type(annot, sig, p.pos)
            inner = bound | {dest}
            return Cut(dest, annot, _resolve_proc(body, inner, sig),
                       _resolve_proc(cont, inner, sig), p.pos)
        case Case(chan, branches):
            return Case(chan, tuple((lab, _resolve_proc(b, bound, sig))
                                    for lab, b in branches), p.pos)
        case SendLabel(chan, label, cont):
            return SendLabel(chan, label, _resolve_proc(cont, bound, sig), p.pos)
        case Close():
            return p
        case Wait(chan, cont):
            return Wait(chan, _resolve_proc(cont, bound, sig), p.pos)
        case SendChan(chan, payload, cont):
            return SendChan(chan, payload, _resolve_proc(cont, bound, sig), p.pos)
        case RecvChan(bind, chan, cont):
            return RecvChan(bind, chan, _resolve_proc(cont, bound | {bind}, sig), p.pos)
        case Delay(count, origin, cont):
            return Delay(count, origin, _resolve_proc(cont, bound, sig), p.pos)
        case When(chan, cont):
            return When(chan, _resolve_proc(cont, bound, sig), p.pos)
        case Now(chan, cont):
            return Now(chan, _resolve_proc(cont, bound, sig), p.pos)
    raise AssertionError(f"unknown node {p!r}")


def _check_call(name: str, args, sig: Signature, node) -> None:
    if name not in sig.procdecls:
        raise ScopeError(f"call to undeclared process '{name}'")
    arity = sig.procdecls[name].arity
    if len(args) != arity:
        raise ScopeError(f"process '{name}' takes {arity} index argument(s), "
                         f"got {len(args)}")


def _check_type(t: SessionType, sig: Signature, pos) -> None:
    match t:
        case Plus(bs) | With(bs):
            for _, u in bs:
                _check_type(u, sig, pos)
        case Tensor(a, b) | Lolli(a, b):
            _check_type(a, sig, pos)
            _check_type(b, sig, pos)
        case Next(_, inner) | Box(inner) | Diamond(inner):
            _check_type(inner, sig, pos)
        case TypeName(name, args):
            if name not in sig.typedefs:
                raise ScopeError(f"reference to undefined type '{name}'")
            arity = sig.typedefs[name].arity
            if len(args) != arity:
                raise ScopeError(f"type '{name}' takes {arity} index argument(s), "
                                 f"got {len(args)}")
        case _:
            pass


def resolve(sig: Signature) -> Signature:
    for td in sig.typedefs.values():
        for cl in td.clauses:
            _check_type(cl.body, sig, cl.pos)
    for pd in sig.procdecls.values():
        for cl in pd.clauses:
            for _, t in cl.ctx:
                _check_type(t, sig, cl.pos)
            _check_type(cl.offer_type, sig, cl.pos)
    for pdef in sig.procdefs.values():
        if pdef.name not in sig.procdecls:
            raise ScopeError(f"process '{pdef.name}' has a definition but no decl")
        decl = sig.procdecls[pdef.name]
        for cl in pdef.clauses:
            if len(cl.patterns) != decl.arity:
                raise ScopeError(f"def clause of '{pdef.name}' disagrees with its "
                                 f"decl on index arity")
            if any(len(cl.chans) != len(d.ctx) for d in decl.clauses):
                # All decl clauses of a name share the context length.
                lens = {len(d.ctx) for d in decl.clauses}
                if len(cl.chans) not in lens:
                    raise ScopeError(f"def of '{pdef.name}' binds {len(cl.chans)} "
                                     f"channels but the decl lists {sorted(lens)}")
            bound = frozenset(cl.chans) | {cl.dest}
            cl.body = _resolve_proc(cl.body, bound, sig)
    return sig


def parse_program(text: str) -> Signature:
    """Parse and resolve a whole program; raises ParseError/ScopeError."""
    return resolve(_Parser(text).program())
