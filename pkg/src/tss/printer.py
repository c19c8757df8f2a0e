"""Pretty-printer.  Output re-parses to a structurally equal Signature."""

from __future__ import annotations

from .ast import (Box, Case, Close, Cut, DeclClause, DefClause, Delay, Diamond,
                  Fwd, IVar, IndexExpr, Lolli, Next, Now, One, Origin, Plus,
                  ProcExpr, RecvChan, SendChan, SendLabel, SessionType,
                  Signature, Spawn, TailCall, Tensor, TypeClause, TypeName,
                  Wait, When, With, fmt_index, fmt_pat)

_LOLLI, _TENSOR, _ATOM = 0, 1, 2


def fmt_count(c: IndexExpr) -> str:
    if isinstance(c, int) or isinstance(c, IVar):
        return f"^{fmt_index(c)}"
    return f"^{{{fmt_index(c)}}}"


def fmt_type(t: SessionType, prec: int = _LOLLI) -> str:
    match t:
        case Plus(bs):
            inner = ", ".join(f"{lab} : {fmt_type(ty)}" for lab, ty in bs)
            return "+{" + inner + "}"
        case With(bs):
            inner = ", ".join(f"{lab} : {fmt_type(ty)}" for lab, ty in bs)
            return "&{" + inner + "}"
        case One():
            return "1"
        case Tensor(a, b):
            s = f"{fmt_type(a, _ATOM)} * {fmt_type(b, _TENSOR)}"
            return f"({s})" if prec > _TENSOR else s
        case Lolli(a, b):
            s = f"{fmt_type(a, _TENSOR)} -o {fmt_type(b, _LOLLI)}"
            return f"({s})" if prec > _LOLLI else s
        case Next(1, inner):
            return f"(){fmt_type(inner, _ATOM)}"
        case Next(count, inner):
            return f"(){fmt_count(count)} {fmt_type(inner, _ATOM)}"
        case Box(inner):
            return f"[]{fmt_type(inner, _ATOM)}"
        case Diamond(inner):
            return f"<>{fmt_type(inner, _ATOM)}"
        case TypeName(name, args):
            if args:
                return f"{name}[{', '.join(fmt_index(a) for a in args)}]"
            return name
    raise AssertionError(f"unknown type node {t!r}")


def _call_suffix(proc: str, args, chans) -> str:
    s = proc
    if args:
        s += f"[{', '.join(fmt_index(a) for a in args)}]"
    if chans:
        s += " <- " + " ".join(chans)
    return s


def fmt_proc(p: ProcExpr, indent: int = 0) -> str:
    pad = " " * indent
    lines: list[str] = []
    while True:
        match p:
            case SendLabel(chan, label, cont):
                lines.append(f"{pad}{chan}.{label} ;")
                p = cont
            case Wait(chan, cont):
                lines.append(f"{pad}wait {chan} ;")
                p = cont
            case SendChan(chan, payload, cont):
                lines.append(f"{pad}send {chan} {payload} ;")
                p = cont
            case RecvChan(bind, chan, cont):
                lines.append(f"{pad}{bind} <- recv {chan} ;")
                p = cont
            case Delay(count, origin, cont):
                if origin is Origin.TICK:
                    lines.append(f"{pad}tick ;")
                else:
                    tok = "delay" if count == 1 else f"delay{{{fmt_index(count)}}}"
                    marker = "  % reconstructed" if origin is Origin.RECON else ""
                    lines.append(f"{pad}{tok} ;{marker}")
                p = cont
            case When(chan, cont):
                lines.append(f"{pad}when? {chan} ;")
                p = cont
            case Now(chan, cont):
                lines.append(f"{pad}now! {chan} ;")
                p = cont
            case Spawn(dest, proc, args, chans, cont):
                lines.append(f"{pad}{dest} <- {_call_suffix(proc, args, chans)} ;")
                p = cont
            case Cut(dest, annot, body, cont):
                if isinstance(body, (Close, Fwd, TailCall)):
                    inner = fmt_proc(body, 0)
                    lines.append(f"{pad}{dest} : {fmt_type(annot)} <- {inner} ;")
                else:
                    lines.append(f"{pad}{dest} : {fmt_type(annot)} <- (")
                    lines.append(fmt_proc(body, indent + 2))
                    lines.append(f"{pad}) ;")
                p = cont
            case Close(chan):
                lines.append(f"{pad}close {chan}")
                return "\n".join(lines)
            case Fwd(dest, src):
                lines.append(f"{pad}{dest} <- {src}")
                return "\n".join(lines)
            case TailCall(dest, proc, args, chans):
                lines.append(f"{pad}{dest} <- {_call_suffix(proc, args, chans)}")
                return "\n".join(lines)
            case Case(chan, branches):
                lines.append(f"{pad}case {chan}")
                for i, (lab, body) in enumerate(branches):
                    opener = "(" if i == 0 else "|"
                    lines.append(f"{pad}  {opener} {lab} =>")
                    lines.append(fmt_proc(body, indent + 6))
                lines.append(f"{pad}  )")
                return "\n".join(lines)
            case _:
                raise AssertionError(f"unknown process node {p!r}")


def _fmt_pats(pats) -> str:
    return f"[{', '.join(fmt_pat(q) for q in pats)}]" if pats else ""


def _fmt_type_clause(name: str, cl: TypeClause) -> str:
    return f"type {name}{_fmt_pats(cl.patterns)} = {fmt_type(cl.body)}"


def _fmt_decl_clause(name: str, cl: DeclClause) -> str:
    if cl.ctx:
        ctx = " ".join(f"({c} : {fmt_type(t)})" for c, t in cl.ctx)
    else:
        ctx = "."
    return (f"decl {name}{_fmt_pats(cl.patterns)} : {ctx} "
            f"|- ({cl.offer_chan} : {fmt_type(cl.offer_type)})")


def _fmt_def_clause(name: str, cl: DefClause) -> str:
    head = f"proc {cl.dest} <- {name}{_fmt_pats(cl.patterns)}"
    if cl.chans:
        head += " <- " + " ".join(cl.chans)
    return f"{head} =\n{fmt_proc(cl.body, 2)}"


def pretty_print(sig: Signature) -> str:
    chunks: list[str] = []
    for name, td in sig.typedefs.items():
        for cl in td.clauses:
            chunks.append(_fmt_type_clause(name, cl))
    for name, pd in sig.procdecls.items():
        for cl in pd.clauses:
            chunks.append(_fmt_decl_clause(name, cl))
        if name in sig.procdefs:
            for dcl in sig.procdefs[name].clauses:
                chunks.append(_fmt_def_clause(name, dcl))
    return "\n".join(chunks) + "\n"
