"""Constructive content of the classical theorems on the exact core.

Computable cases (trisection IVT, maximum value, approximate fixed points)
are total algorithms with explicit budgets.  Non-computable ones (the
supremum of a Specker sequence, a cluster point) are exposed as
stage-indexed approximants.
"""

from __future__ import annotations

import heapq
import itertools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .errors import DomainError, PreconditionError, TrisectionStall
from .exact import CReal, Dyadic, Interval, MonotoneSeq
from .functions import CFunc, PLFunc, _level_for_width, add_constant
from .machines import StagePair, StageSet

__all__ = [
    "TreePredicate",
    "specker_term",
    "specker_seq",
    "TrisectionRun",
    "trisect",
    "ivt_trisect",
    "MaxSearch",
    "max_value",
    "max_creal",
    "argmax_point",
    "leftmost_zero",
    "kleene_tree",
    "kleene_witness",
    "family_tilt",
    "ivt_family",
    "IVT_FAMILY_BASE",
    "brouwer_dim1",
    "bwt_cluster_stage",
]

_ZERO = Dyadic(0)
_ONE = Dyadic(1)


# ---------------------------------------------------------------------------
# Specker sequences


def specker_term(s: StageSet, t: int) -> Dyadic:
    """``sum_{i in s_t} 2**-i``, exact."""
    return sum((Dyadic(1, -i) for i in s.enum_at(t)), _ZERO)


def specker_seq(s: StageSet) -> MonotoneSeq:
    return MonotoneSeq(lambda t: CReal.constant(specker_term(s, t)), Dyadic(2))


# ---------------------------------------------------------------------------
# Trisection


@dataclass(frozen=True)
class TrisectionRun:
    interval: Interval
    iterations: int
    sign_at_lo: int
    max_precision: int


def _sign_at(f: CFunc, x: Dyadic, level: int) -> int:
    j = f.at(x, level)
    if j.lo > 0:
        return 1
    if j.hi < 0:
        return -1
    return 0


def _endpoint_signs(f: CFunc, budget: int) -> tuple[int, int]:
    s0 = s1 = 0
    for p in range(budget + 1):
        if not s0:
            s0 = _sign_at(f, _ZERO, p)
        if not s1:
            s1 = _sign_at(f, _ONE, p)
        if s0 and s1:
            break
    return s0, s1


def trisect(
    f: CFunc,
    level: int,
    sign_budget: int = 64,
    precision_budget: Optional[int] = None,
    target: Optional[Dyadic] = None,
) -> TrisectionRun:
    """Shrink a certified sign change of ``f`` to width ``<= 2**-level``.

    Each step tests the points at 3/8 and 5/8 of the current interval,
    alternating between them at increasing precision, and keeps the
    subinterval (of length at most 5/8) bounded by the first point whose
    sign is certified.  A zero sitting exactly on one test point never
    blocks progress; zeros on both raise ``TrisectionStall``.
    """
    s_lo, s_hi = _endpoint_signs(f, sign_budget)
    if not (s_lo and s_hi):
        raise PreconditionError(
            f"could not certify the signs of f(0), f(1) within level {sign_budget}"
        )
    if s_lo == s_hi:
        raise PreconditionError("f(0) and f(1) have the same certified sign")
    if target is None:
        target = Dyadic(1, -level)
    pmax = precision_budget if precision_budget is not None else level + 64
    a, b = _ZERO, _ONE
    iterations = 0
    top = 0
    three_eighths, five_eighths = Dyadic(3, -3), Dyadic(5, -3)
    while b - a > target:
        width = b - a
        m1 = a + width * three_eighths
        m2 = a + width * five_eighths
        start = max(0, -(width.exponent + width.mantissa.bit_length())) + 2
        moved = False
        for p in range(start, max(start, pmax) + 1):
            top = max(top, p)
            s1 = _sign_at(f, m1, p)
            if s1:
                if s1 == s_lo:
                    a = m1
                else:
                    b = m1
                moved = True
                break
            s2 = _sign_at(f, m2, p)
            if s2:
                if s2 == s_hi:
                    b = m2
                else:
                    a = m2
                moved = True
                break
        if not moved:
            raise TrisectionStall(m1, Dyadic(1, -pmax), Interval(a, b))
        iterations += 1
    return TrisectionRun(Interval(a, b), iterations, s_lo, top)


def ivt_trisect(f: CFunc, level: int, sign_budget: int = 64) -> Interval:
    """Interval of width ``<= 2**-level`` with certified opposite endpoint signs."""
    return trisect(f, level, sign_budget=sign_budget).interval


# ---------------------------------------------------------------------------
# Maximum by branch and bound


class MaxSearch:
    """Incremental interval branch and bound for ``max f([0, 1])``.

    The search state persists between calls, so refining to a finer level
    continues from the current frontier.  Boxes whose upper enclosure is
    below the best certified lower bound are pruned.
    """

    def __init__(self, f: CFunc):
        self.f = f
        self._lock = threading.Lock()
        self._counter = itertools.count()
        self._heap: list = []
        self.best_lower: Optional[Dyadic] = None
        self.best_point: Optional[Dyadic] = None
        self.nodes = 0
        self.pruned = 0
        self._push(Interval(_ZERO, _ONE), 2)
        for x in (_ZERO, _ONE):
            self._probe(x, 2)

    def _push(self, box: Interval, precision: int) -> None:
        enc = self.f.ext(box, precision)
        self.nodes += 1
        heapq.heappush(self._heap, (-enc.hi, next(self._counter), box, enc.hi))

    def _probe(self, x: Dyadic, precision: int) -> None:
        lo = self.f.at(x, precision).lo
        if self.best_lower is None or lo > self.best_lower:
            self.best_lower = lo
            self.best_point = x

    def upper(self) -> Dyadic:
        return self._heap[0][3]

    def refine(self, level: int) -> tuple[Dyadic, Dyadic, Dyadic]:
        """Return ``(lower, upper, point)`` with ``upper - lower <= 2**-level``,
        ``lower <= f(point)`` and ``max f`` in ``[lower, upper]``."""
        gap = Dyadic(1, -level)
        with self._lock:
            while True:
                upper = self._heap[0][3]
                if upper - self.best_lower <= gap:
                    return self.best_lower, upper, self.best_point
                _, _, box, hi = heapq.heappop(self._heap)
                if hi < self.best_lower:
                    self.pruned += 1
                    continue
                precision = level + 2
                self._probe(box.midpoint, precision)
                for half in box.split():
                    self._push(half, precision)


def max_value(f: CFunc, level: int) -> Dyadic:
    """Dyadic within ``2**-level`` of ``max f([0, 1])``, by branch and bound."""
    lo, hi, _ = MaxSearch(f).refine(level)
    return (lo + hi).shift(-1)


def max_creal(f: CFunc) -> CReal:
    """``max f([0, 1])`` as a computable real backed by one shared search."""
    if isinstance(f, PLFunc):
        return CReal.constant(f.max())
    search = MaxSearch(f)

    def approx(n):
        lo, hi, _ = search.refine(n + 1)
        return (lo + hi).shift(-1)

    return CReal(approx, bound=f.magnitude_bound())


def argmax_point(f: CFunc, level: int, search: Optional[MaxSearch] = None) -> Dyadic:
    """A dyadic ``x`` with ``f(x) >= max f - 2**-level``."""
    search = search or MaxSearch(f)
    return search.refine(level)[2]


def leftmost_zero(f: CFunc, depth: int, max_nodes: int = 1 << 20) -> Optional[Dyadic]:
    """Midpoint of the leftmost depth-``depth`` dyadic box whose enclosure
    (at precision ``depth + 2``) contains 0, or ``None`` if every box is
    certified zero-free.  Depth-first with backtracking."""
    stack = [(0, _ZERO)]
    visited = 0
    while stack:
        d, lo = stack.pop()
        box = Interval(lo, lo + Dyadic(1, -d))
        enc = f.ext(box, d + 2)
        visited += 1
        if visited > max_nodes:
            raise PreconditionError(f"zero search exceeded {max_nodes} boxes")
        if enc.lo > 0 or enc.hi < 0:
            continue
        if d == depth:
            return box.midpoint
        half = Dyadic(1, -(d + 1))
        stack.append((d + 1, lo + half))
        stack.append((d + 1, lo))
    return None


# ---------------------------------------------------------------------------
# Kleene trees


class TreePredicate:
    """A prefix-closed set of binary words given by its membership test."""

    def __init__(self, member: Callable[[str], bool], label: str = ""):
        self._member = member
        self.label = label

    def member(self, word: str) -> bool:
        if word and set(word) - {"0", "1"}:
            raise ValueError(f"not a binary word: {word!r}")
        return self._member(word)

    __contains__ = member

    def __repr__(self):
        return f"TreePredicate({self.label})"


class _CumulativeConstraints:
    """Union of ``A_t`` (resp. ``B_t``) over all ``t <= L``, cached per L."""

    def __init__(self, pair: StagePair):
        self.pair = pair
        self._a: list[frozenset[int]] = []
        self._b: list[frozenset[int]] = []
        self._lock = threading.Lock()

    def upto(self, length: int) -> tuple[frozenset[int], frozenset[int]]:
        with self._lock:
            while len(self._a) <= length:
                t = len(self._a)
                prev_a = self._a[-1] if self._a else frozenset()
                prev_b = self._b[-1] if self._b else frozenset()
                self._a.append(prev_a | self.pair.a.enum_at(t))
                self._b.append(prev_b | self.pair.b.enum_at(t))
            return self._a[length], self._b[length]


def kleene_tree(pair: StagePair) -> TreePredicate:
    """Words ``w`` with ``w_i = 1`` for ``i in A`` and ``w_i = 0`` for ``i in B``,
    both sets read at every stage ``t <= |w|``.  An infinite path separates
    A from B."""
    constraints = _CumulativeConstraints(pair)

    def member(word: str) -> bool:
        n = len(word)
        a, b = constraints.upto(n)
        return all(word[i] == "1" for i in a if i < n) and all(word[i] == "0" for i in b if i < n)

    tree = TreePredicate(member, label="kleene")
    tree.constraints = constraints
    return tree


def kleene_witness(pair: StagePair, length: int) -> str:
    """The word with ``w_i = 1`` exactly for ``i in A_{<=length}``; a member
    whenever the pair is disjoint up to that stage."""
    a = set()
    for t in range(length + 1):
        a |= pair.a.enum_at(t)
    return "".join("1" if i in a else "0" for i in range(length))


# ---------------------------------------------------------------------------
# The sequential IVT family


IVT_FAMILY_BASE = PLFunc(
    [(0, -1), (Fraction(1, 3), 0), (Fraction(2, 3), 0), (1, 1)], label="base"
)


def family_tilt(s: StageSet, n: int) -> CReal:
    """``2**-t`` if ``n`` enters ``s`` at stage ``t`` (taken ``>= 1``), else 0.

    The level-k approximation only inspects stages ``<= k``; a later entry
    contributes less than ``2**-k``.
    """

    def approx(k):
        t = s.entry_stage(n, k)
        if t is None:
            return _ZERO
        return Dyadic(1, -max(t, 1))

    return CReal(approx, bound=Dyadic(1, -1))


def ivt_family(pair: StagePair, n: int) -> CFunc:
    """``f_n = base + alpha_n - beta_n``.

    n in A (entering at stage s): unique zero (1 - 2**-s)/3.
    n in B (entering at stage s): unique zero (2 + 2**-s)/3.
    otherwise: zero set [1/3, 2/3].  Always f_n(0) < 0 < f_n(1).
    """
    tilt = family_tilt(pair.a, n) - family_tilt(pair.b, n)
    f = add_constant(IVT_FAMILY_BASE, tilt)
    f.label = f"family[{n}]"
    return f


# ---------------------------------------------------------------------------
# Brouwer in dimension one


def _minus_identity(f: CFunc) -> CFunc:
    def ext(iv, level):
        return f.ext(iv, level + 1) - iv

    def modulus(level):
        return min(f.modulus(level + 1), Dyadic(1, -(level + 1)))

    return CFunc(ext, modulus, label=f"{f.label}-id")


def brouwer_dim1(f: CFunc, level: int) -> Dyadic:
    """A dyadic ``x`` with ``|f(x) - x| <= 2**-level`` for ``f: [0,1] -> [0,1]``.

    With certified strict signs of ``g = f - id`` at the endpoints the
    answer is the midpoint of a trisection enclosure of an exact fixed
    point; otherwise an approximate bisection on ``g`` is used, which only
    needs ``g(0) >= 0 >= g(1)``.
    """
    g = _minus_identity(f)
    tol = Dyadic(1, -level)
    s0, s1 = _endpoint_signs(g, level + 8)
    if s0 > 0 and s1 < 0:
        try:
            run = trisect(g, level, target=g.modulus(level + 1))
            return run.interval.midpoint
        except TrisectionStall:
            pass

    def verdict(x):
        j = g.at(x, level + 2)
        if -tol <= j.lo and j.hi <= tol:
            return 0
        if j.lo > 0:
            return 1
        if j.hi < 0:
            return -1
        # enclosure straddles the tolerance band but is narrower than it
        return 0

    a, b = _ZERO, _ONE
    for x, want in ((a, 1), (b, -1)):
        v = verdict(x)
        if v == 0:
            return x
        if v != want:
            raise DomainError("f does not map [0, 1] into itself")
    width = g.modulus(level + 2)
    while True:
        m = (a + b).shift(-1)
        v = verdict(m)
        if v == 0 or b - a <= width:
            return m
        if v > 0:
            a = m
        else:
            b = m


# ---------------------------------------------------------------------------
# Bolzano-Weierstrass stage oracle


def bwt_cluster_stage(seq: Callable[[int], CReal], stage: int, level: int) -> Dyadic:
    """Centre of a width-``2**-level`` dyadic box holding the most of the
    first ``stage`` terms, chosen by repeated halving (ties go left)."""
    eps = Dyadic(1, -(level + 2))
    terms = []
    for n in range(stage):
        q = seq(n).approx(level + 2)
        if q < -eps or q > 1 + eps:
            raise DomainError(f"term {n} certified outside [0, 1]")
        terms.append(min(max(q, _ZERO), _ONE))
    lo = _ZERO
    for step in range(level):
        half = Dyadic(1, -(step + 1))
        mid = lo + half
        hi = mid + half
        left = sum(1 for x in terms if lo <= x < mid)
        right = sum(1 for x in terms if mid <= x < hi or (hi == 1 and x == 1))
        terms = [x for x in terms if (lo <= x < mid) == (left >= right) and lo <= x <= hi]
        if right > left:
            lo = mid
    return lo + Dyadic(1, -(level + 1))
