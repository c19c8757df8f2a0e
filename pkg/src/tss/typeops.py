"""Semantic operations on ground session types: contractiveness,
equirecursive unfolding and equality, one-step time shifts, patience.

Equality is coinductive: a bisimulation over head-normalized states
(leading-delay count, base type), memoizing visited state pairs.  Revisiting
a pair means the infinite unfoldings agree, so it counts as success.
"""

from __future__ import annotations

from typing import Optional

from .ast import (Box, Diamond, Lolli, Next, One, Plus, SessionType, Signature,
                  Tensor, TypeName, With, next_type)
from .errors import BudgetExceededError, ContractivenessError


def check_contractive(sig: Signature):
    """A definition may not be a bare name (`X = Y` is rejected)."""
    for name, td in sig.typedefs.items():
        for cl in td.clauses:
            if isinstance(cl.body, TypeName):
                raise ContractivenessError(name)


class TypeOps:
    """Type-level judgments over one ground signature.

    A `budget` bounds the number of equality goals examined per query;
    exceeding it signals pathological input, not inequality.
    """

    def __init__(self, sig: Signature, budget: int = 10_000):
        self.sig = sig
        self.budget = budget
        self._eq_true: set = set()
        self._eq_false: set = set()

    # -- unfolding ----------------------------------------------------------

    def unfold(self, t: SessionType) -> SessionType:
        """Replace a defined name by its body (identity on other heads)."""
        if isinstance(t, TypeName):
            return self.sig.type_body(t.name)
        return t

    def strip(self, t: SessionType) -> tuple[int, SessionType]:
        """Head-normalize to (delay count, base) with base neither a Next nor
        a defined name, unless the type is an infinite delay tower
        (`x = ()x`), in which case base is the looping name."""
        n = 0
        seen: set[str] = set()
        while True:
            if isinstance(t, Next):
                n += t.count
                t = t.inner
            elif isinstance(t, TypeName):
                if t.name in seen:
                    return n, t
                seen.add(t.name)
                t = self.sig.type_body(t.name)
            else:
                return n, t

    def expose(self, t: SessionType) -> Optional[SessionType]:
        """The structural head usable right now: None if delayed (or an
        infinite delay tower)."""
        n, base = self.strip(t)
        if n > 0 or isinstance(base, TypeName):
            return None
        return base

    # -- equality -----------------------------------------------------------

    def type_equal(self, a: SessionType, b: SessionType) -> bool:
        """Coinductive equirecursive equality.

        Goals failing on this run are cached for good (assumptions can only
        add equalities, so a failure is unconditional).  Goals visited by a
        successful run form a bisimulation and are all cached as equal when
        the top-level query succeeds."""
        steps = [0]
        assumed: set = set()
        candidates: set = set()

        def states_eq(na: int, ta: SessionType, nb: int, tb: SessionType) -> bool:
            steps[0] += 1
            if steps[0] > self.budget:
                raise BudgetExceededError("type equality budget exceeded")
            m = min(na, nb)
            na, nb = na - m, nb - m
            la, lb = isinstance(ta, TypeName), isinstance(tb, TypeName)
            if la and lb:
                # Two infinite delay towers never communicate: equal.
                return True
            if la or lb:
                # One side loops on delays, the other reaches an action.
                return False
            if na != nb:
                return False
            if type(ta) is not type(tb):
                return False
            match ta, tb:
                case One(), One():
                    return True
                case (Plus(bs1), Plus(bs2)) | (With(bs1), With(bs2)):
                    d1, d2 = dict(bs1), dict(bs2)
                    if set(d1) != set(d2):
                        return False
                    return all(eq(d1[lab], d2[lab]) for lab in d1)
                case (Tensor(a1, b1), Tensor(a2, b2)) | (Lolli(a1, b1), Lolli(a2, b2)):
                    return eq(a1, a2) and eq(b1, b2)
                case (Box(i1), Box(i2)) | (Diamond(i1), Diamond(i2)):
                    return eq(i1, i2)
            return False

        def eq(a: SessionType, b: SessionType) -> bool:
            if a == b:
                return True
            na, ta = self.strip(a)
            nb, tb = self.strip(b)
            m = min(na, nb)
            key = (na - m, ta, nb - m, tb)
            if key in self._eq_true or key in assumed:
                return True
            if key in self._eq_false:
                return False
            assumed.add(key)
            ok = states_eq(na, ta, nb, tb)
            assumed.discard(key)
            if ok:
                candidates.add(key)
            else:
                self._eq_false.add(key)
            return ok

        result = eq(a, b)
        if result:
            self._eq_true |= candidates
        return result

    # -- one-step time shifts ------------------------------------------------

    def shift_left(self, t: SessionType) -> Optional[SessionType]:
        """[t] stepped back one unit on the left of a sequent; None when
        undefined (diamond or a basic constructor at the head)."""
        if isinstance(t, TypeName):
            t = self.unfold(t)
        match t:
            case Next(count, inner):
                return next_type(count - 1, inner)
            case Box():
                return t
            case _:
                return None

    def shift_right(self, t: SessionType) -> Optional[SessionType]:
        """Dual shift for the offered type: box is undefined, diamond passes."""
        if isinstance(t, TypeName):
            t = self.unfold(t)
        match t:
            case Next(count, inner):
                return next_type(count - 1, inner)
            case Diamond():
                return t
            case _:
                return None

    def shift_left_n(self, t: SessionType, n: int) -> Optional[SessionType]:
        for _ in range(n):
            t = self.shift_left(t)
            if t is None:
                return None
        return t

    def shift_right_n(self, t: SessionType, n: int) -> Optional[SessionType]:
        for _ in range(n):
            t = self.shift_right(t)
            if t is None:
                return None
        return t

    # -- patience ------------------------------------------------------------

    def patient(self, t: SessionType, side: str) -> bool:
        """side='box': t is ()^n [] _ (tolerates waiting as an antecedent);
        side='diamond': t is ()^n <> _ (tolerates waiting as the offer)."""
        assert side in ("box", "diamond")
        _, base = self.strip(t)
        if side == "box":
            return isinstance(base, Box)
        return isinstance(base, Diamond)
