"""Decision procedures for temporal subtyping and for the weak
configuration-level relation.

The main procedure tests reflexivity first, applies the always-safe rules
eagerly, and backtracks over the two genuine decision points (box-left
against a delayed right, delay-left against an eventually-right).  Revisiting
a goal on the current search path counts as failure: the rules are an
inductive system, so a derivation may not be self-supporting.
"""

from __future__ import annotations

from .ast import Box, Diamond, SessionType, TypeName, next_type
from .errors import BudgetExceededError
from .typeops import TypeOps


def is_subtype(ops: TypeOps, a: SessionType, b: SessionType,
               budget: int = 100_000, trace: list[str] | None = None,
               memo: dict | None = None) -> bool:
    """Decide the subtype relation.  A shared `memo` dict may be supplied
    when deciding many pairs; results whose search never ran into a cycle
    on the current path are recorded in it (a cycle-tainted failure is only
    valid for the path that produced it, so it is not)."""
    steps = [0]
    cycles = [0]
    path: set = set()
    yes: set = set()
    if memo is None:
        memo = {}

    def sub(a: SessionType, b: SessionType) -> bool:
        steps[0] += 1
        if steps[0] > budget:
            raise BudgetExceededError("subtyping budget exceeded")
        key = (a, b)
        if key in memo:
            return memo[key]
        if key in yes:
            return True
        if key in path:
            cycles[0] += 1
            return False
        if ops.type_equal(a, b):
            if trace is not None:
                trace.append("refl")
            memo[key] = True
            return True
        path.add(key)
        seen_cycles = cycles[0]
        try:
            ok = dispatch(a, b)
        finally:
            path.discard(key)
        if ok:
            yes.add(key)
            memo[key] = True
        elif cycles[0] == seen_cycles:
            memo[key] = False
        return ok

    def dispatch(a: SessionType, b: SessionType) -> bool:
        na, ta = ops.strip(a)
        nb, tb = ops.strip(b)
        # An infinite delay tower (x = ()x) never exposes an action but
        # absorbs any finite number of delay steps, so only rules acting
        # on the opposite side can fire.
        if isinstance(ta, TypeName) and isinstance(tb, TypeName):
            return False  # distinct towers; equal ones were caught by refl
        if isinstance(ta, TypeName):
            if isinstance(tb, Diamond):
                return rule("<>R", a, tb.inner)
            return False
        if isinstance(tb, TypeName):
            if isinstance(ta, Box):
                return rule("[]L", ta.inner, b)
            return False
        m = min(na, nb)
        if m and trace is not None:
            trace.append("()()")
        na, nb = na - m, nb - m

        if na == 0 and nb == 0:
            match ta, tb:
                case Box(), Box(ib):
                    return rule("[]R", ta, ib)
                case Box(ia), Diamond(ib):
                    return rule("[]L", ia, tb) or rule("<>R", ta, ib)
                case Box(ia), _:
                    return rule("[]L", ia, tb)
                case Diamond(ia), Diamond():
                    return rule("<>L", ia, tb)
                case Diamond(), _:
                    return False
                case _, Diamond(ib):
                    return rule("<>R", ta, ib)
                case _:
                    return False
        if na:  # left has leading delays, right does not
            if isinstance(tb, Diamond):
                return rule("()<>", next_type(na - 1, ta), tb) or \
                    rule("<>R", next_type(na, ta), tb.inner)
            if isinstance(tb, Box) and isinstance(ta, Box):
                return rule("[]R", next_type(na, ta), tb.inner)
            return False
        # right has leading delays, left does not
        if isinstance(ta, Box):
            return rule("[]()", ta, next_type(nb - 1, tb)) or \
                rule("[]L", ta.inner, next_type(nb, tb))
        if isinstance(ta, Diamond) and isinstance(tb, Diamond):
            return rule("<>L", ta.inner, next_type(nb, tb))
        return False

    def rule(name: str, a: SessionType, b: SessionType) -> bool:
        mark = len(trace) if trace is not None else 0
        if trace is not None:
            trace.append(name)
        if sub(a, b):
            return True
        if trace is not None:
            del trace[mark:]
        return False

    return sub(a, b)


def subtype_oracle(ops: TypeOps, a: SessionType, b: SessionType,
                   memo: dict | None = None) -> bool:
    """Naive exhaustive search over every rule of the subtyping system,
    with no eager commitments; the reference the fast procedure is tested
    against."""
    path: set = set()
    cycles = [0]
    if memo is None:
        memo = {}

    def sub(a: SessionType, b: SessionType) -> bool:
        key = (a, b)
        if key in memo:
            return memo[key]
        if key in path:
            cycles[0] += 1
            return False
        if ops.type_equal(a, b):
            memo[key] = True
            return True
        path.add(key)
        seen_cycles = cycles[0]
        try:
            na, ta = ops.strip(a)
            nb, tb = ops.strip(b)
            goals: list[tuple[SessionType, SessionType]] = []
            if isinstance(ta, TypeName) or isinstance(tb, TypeName):
                # Infinite delay towers: only the rules acting on the
                # opposite side remain applicable.
                if isinstance(ta, TypeName) and isinstance(tb, Diamond):
                    goals.append((a, tb.inner))
                if isinstance(tb, TypeName) and isinstance(ta, Box):
                    goals.append((ta.inner, b))
                ok = any(sub(x, y) for x, y in goals)
                if ok or cycles[0] == seen_cycles:
                    memo[key] = ok
                return ok
            if na >= 1 and nb >= 1:  # ()()
                goals.append((next_type(na - 1, ta), next_type(nb - 1, tb)))
            if na == 0 and isinstance(ta, Box) and nb >= 1:  # []()
                goals.append((a, next_type(nb - 1, tb)))
            if na >= 1 and nb == 0 and isinstance(tb, Diamond):  # ()<>
                goals.append((next_type(na - 1, ta), b))
            if isinstance(ta, Box) and nb == 0 and isinstance(tb, Box):  # []R
                goals.append((a, tb.inner))
            if na == 0 and isinstance(ta, Box):  # []L
                goals.append((ta.inner, b))
            if nb == 0 and isinstance(tb, Diamond):  # <>R
                goals.append((a, tb.inner))
            if na == 0 and isinstance(ta, Diamond) and isinstance(tb, Diamond):  # <>L
                goals.append((ta.inner, b))
            ok = any(sub(x, y) for x, y in goals)
            if ok or cycles[0] == seen_cycles:
                memo[key] = ok
            return ok
        finally:
            path.discard(key)

    return sub(a, b)


def is_weak_subtype(ops: TypeOps, a: SessionType, b: SessionType) -> bool:
    """Reflexivity plus sliding leading delays across a shared box or
    diamond: ()^m [] A <: ()^n [] A when m <= n, and dually for <> when
    m >= n."""
    if ops.type_equal(a, b):
        return True
    na, ta = ops.strip(a)
    nb, tb = ops.strip(b)
    if isinstance(ta, Box) and isinstance(tb, Box) and na <= nb:
        return ops.type_equal(ta.inner, tb.inner)
    if isinstance(ta, Diamond) and isinstance(tb, Diamond) and na >= nb:
        return ops.type_equal(ta.inner, tb.inner)
    return False
