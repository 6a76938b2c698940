"""Continuous functions on [0, 1] with certified range enclosures, and the
l2 vectors and functionals used for the Riesz-representation material.

``CFunc`` is the representation-independent interface: an interval
extension ``ext(I, level)`` whose output is a sound enclosure of ``f(I)``
and whose width is at most ``2**-level`` once ``width(I) <=
modulus(level)``.  ``PLFunc`` is the concrete exact class.
"""

from __future__ import annotations

import bisect
import itertools
import json
import math
import threading
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .errors import DomainError
from .exact import (
    CReal,
    Dyadic,
    Interval,
    _ceil_log2,
    as_exact,
    ceil_dyadic,
    creal_sum,
    floor_dyadic,
    round_dyadic,
)

__all__ = [
    "CFunc",
    "PLFunc",
    "plf_eval",
    "plf_range",
    "neg_abs",
    "sub_max",
    "add_constant",
    "EllTwoVec",
    "Functional",
    "dense_unit_ball",
    "unit_vector_index",
    "functional_from_vec",
    "functional_norm_stage",
]

UNIT = Interval(Dyadic(0), Dyadic(1))


def _clamp_to_unit(iv: Interval) -> Interval:
    clipped = iv.intersect(UNIT)
    if clipped is None:
        raise DomainError(f"{iv} lies outside [0, 1]")
    return clipped


def _level_for_width(w: Dyadic) -> int:
    """Smallest k >= 0 with 2**(1-k) <= w (w > 0)."""
    if w <= 0:
        raise ValueError("modulus must be positive")
    k = 1 - w.exponent - (w.mantissa.bit_length() - 1)
    return max(k, 0)


class CFunc:
    """A continuous function on [0, 1] presented by an interval extension.

    Subclasses override ``ext`` and ``modulus``; plain instances wrap two
    callables.
    """

    def __init__(
        self,
        ext: Optional[Callable[[Interval, int], Interval]] = None,
        modulus: Optional[Callable[[int], Dyadic]] = None,
        label: str = "",
    ):
        self._ext = ext
        self._modulus = modulus
        self.label = label

    def ext(self, iv: Interval, level: int) -> Interval:
        return self._ext(_clamp_to_unit(iv), level)

    def modulus(self, level: int) -> Dyadic:
        return self._modulus(level)

    def at(self, x, level: int) -> Interval:
        """Enclosure of ``f(x)`` for an exact point, width ``<= 2**-level``."""
        x = as_exact(x)
        return self.ext(Interval(x, x), level)

    def eval(self, x: CReal) -> CReal:
        """Evaluate at a computable point (domain error if certified outside [0, 1])."""

        def approx(n):
            k = _level_for_width(self.modulus(n + 1))
            q = x.approx(k)
            eps = Dyadic(1, -k)
            iv = Interval(q - eps, q + eps)
            if iv.hi < 0 or iv.lo > 1:
                raise DomainError(f"argument certified outside [0, 1] (approximation {q})")
            return self.ext(iv, n + 1).midpoint

        return CReal(approx, bound=self.magnitude_bound())

    def magnitude_bound(self) -> Dyadic:
        r = self.ext(UNIT, 0)
        return ceil_dyadic(max(abs(r.lo), abs(r.hi)), 0)

    def __repr__(self):
        return f"{type(self).__name__}({self.label})"


class PLFunc(CFunc):
    """Piecewise-linear interpolant of ``(x, y)`` breakpoints on [0, 1].

    Coordinates are exact rationals; dyadic input is the common case but
    values such as 1/3 are allowed so that breakpoint-exact examples can
    be stated directly.
    """

    def __init__(self, breakpoints: Iterable[Sequence], label: str = ""):
        pts = [(Fraction(as_exact(x)), Fraction(as_exact(y))) for x, y in breakpoints]
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        if pts[0][0] != 0 or pts[-1][0] != 1:
            raise ValueError("breakpoints must start at x = 0 and end at x = 1")
        if any(a[0] >= b[0] for a, b in zip(pts, pts[1:])):
            raise ValueError("breakpoint x-coordinates must be strictly increasing")
        super().__init__(label=label)
        self.breakpoints: tuple[tuple[Fraction, Fraction], ...] = tuple(pts)
        self._xs = [p[0] for p in pts]
        slopes = [(b[1] - a[1]) / (b[0] - a[0]) for a, b in zip(pts, pts[1:])]
        self.lipschitz: Fraction = max(abs(s) for s in slopes)
        self._shift = _ceil_log2(self.lipschitz)

    # -- exact evaluation -------------------------------------------------

    def value(self, x) -> Fraction:
        x = Fraction(x)
        if not 0 <= x <= 1:
            raise DomainError(f"{x} outside [0, 1]")
        j = bisect.bisect_right(self._xs, x)
        if j >= len(self._xs):
            return self.breakpoints[-1][1]
        (x0, y0), (x1, y1) = self.breakpoints[j - 1], self.breakpoints[j]
        return y0 + (x - x0) * (y1 - y0) / (x1 - x0)

    def exact_range(self, lo, hi) -> tuple[Fraction, Fraction]:
        lo, hi = Fraction(lo), Fraction(hi)
        if not 0 <= lo <= hi <= 1:
            raise DomainError(f"[{lo}, {hi}] not inside [0, 1]")
        vals = [self.value(lo), self.value(hi)]
        vals.extend(y for x, y in self.breakpoints if lo < x < hi)
        return min(vals), max(vals)

    def max(self) -> Fraction:
        return max(y for _, y in self.breakpoints)

    def min(self) -> Fraction:
        return min(y for _, y in self.breakpoints)

    def zero_set(self) -> list[tuple[Fraction, Fraction]]:
        """Zero set as a list of closed intervals (points are degenerate intervals)."""
        parts: list[tuple[Fraction, Fraction]] = []
        for (x0, y0), (x1, y1) in zip(self.breakpoints, self.breakpoints[1:]):
            if y0 == 0 and y1 == 0:
                piece = (x0, x1)
            elif y0 == 0:
                piece = (x0, x0)
            elif y1 == 0:
                piece = (x1, x1)
            elif (y0 < 0) != (y1 < 0):
                z = x0 - y0 * (x1 - x0) / (y1 - y0)
                piece = (z, z)
            else:
                continue
            if parts and piece[0] <= parts[-1][1]:
                parts[-1] = (parts[-1][0], max(parts[-1][1], piece[1]))
            else:
                parts.append(piece)
        return parts

    def argmax_set(self) -> list[tuple[Fraction, Fraction]]:
        return self.shifted(-self.max()).zero_set()

    # -- CFunc interface --------------------------------------------------

    def ext(self, iv: Interval, level: int) -> Interval:
        iv = _clamp_to_unit(iv)
        lo, hi = self.exact_range(iv.lo, iv.hi)
        return Interval(floor_dyadic(lo, level + 2), ceil_dyadic(hi, level + 2))

    def modulus(self, level: int) -> Dyadic:
        if self.lipschitz == 0:
            return Dyadic(1)
        return Dyadic(1, -(level + 1 + self._shift))

    def eval(self, x: CReal) -> CReal:
        return plf_eval(self, x)

    # -- exact transforms -------------------------------------------------

    def shifted(self, c) -> "PLFunc":
        c = Fraction(c)
        return PLFunc(((x, y + c) for x, y in self.breakpoints), label=self.label)

    def neg_abs(self) -> "PLFunc":
        pts: list[tuple[Fraction, Fraction]] = [self.breakpoints[0]]
        for (x0, y0), (x1, y1) in zip(self.breakpoints, self.breakpoints[1:]):
            if y0 != 0 and y1 != 0 and (y0 < 0) != (y1 < 0):
                pts.append((x0 - y0 * (x1 - x0) / (y1 - y0), Fraction(0)))
            pts.append((x1, y1))
        return PLFunc(((x, -abs(y)) for x, y in pts), label=f"-|{self.label}|")

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps([[_exact_str(x), _exact_str(y)] for x, y in self.breakpoints])

    @classmethod
    def from_json(cls, text) -> "PLFunc":
        data = json.loads(text) if isinstance(text, str) else text
        if not isinstance(data, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(v, str) for v in p) for p in data
        ):
            raise ValueError("expected a JSON array of [x, y] string pairs")
        return cls(((as_exact(x), as_exact(y)) for x, y in data))

    def __eq__(self, other):
        return isinstance(other, PLFunc) and self.breakpoints == other.breakpoints

    def __hash__(self):
        return hash(self.breakpoints)

    def __repr__(self):
        pts = ", ".join(f"({x}, {y})" for x, y in self.breakpoints)
        return f"PLFunc({pts})"


def _exact_str(q: Fraction) -> str:
    try:
        return str(Dyadic.from_fraction(q))
    except ValueError:
        return f"{q.numerator}/{q.denominator}"


def plf_eval(f: PLFunc, x: CReal) -> CReal:
    """Name of ``f(x)``: query x finely enough that the slope bound makes the
    interpolation error ``<= 2**-(n+1)``, then round."""
    shift = f._shift

    def approx(n):
        k = n + 1 + shift
        q = x.approx(k)
        eps = Dyadic(1, -k)
        if q < -eps or q > 1 + eps:
            raise DomainError(f"argument certified outside [0, 1] (approximation {q})")
        q = min(max(q, Dyadic(0)), Dyadic(1))
        return round_dyadic(f.value(q), n + 1)

    bound = ceil_dyadic(max(abs(y) for _, y in f.breakpoints), 0)
    return CReal(approx, bound=bound)


def plf_range(f: PLFunc, iv: Interval) -> Interval:
    """Exact ``[min f(I), max f(I)]``."""
    if not UNIT.contains(iv):
        raise DomainError(f"{iv} not inside [0, 1]")
    lo, hi = f.exact_range(iv.lo, iv.hi)
    return Interval(as_exact(lo), as_exact(hi))


def neg_abs(f: CFunc) -> CFunc:
    """``-|f|``: its maximum set is the zero set of ``f``."""
    if isinstance(f, PLFunc):
        return f.neg_abs()
    return CFunc(lambda iv, lv: -abs(f.ext(iv, lv)), f.modulus, label=f"-|{f.label}|")


def add_constant(f: CFunc, c: CReal) -> CFunc:
    """``f + c`` for a computable constant ``c``."""

    def ext(iv, level):
        return f.ext(iv, level + 1) + c.enclosure(level + 2)

    return CFunc(ext, lambda level: f.modulus(level + 1), label=f"{f.label}+c")


def sub_max(f: CFunc) -> CFunc:
    """``f - max f([0, 1])``; its zero set is the argmax set of ``f``.

    Exact for ``PLFunc``; otherwise the maximum enters as the computable
    real produced by branch and bound.
    """
    if isinstance(f, PLFunc):
        return f.shifted(-f.max())
    from .constructions import max_creal

    return add_constant(f, -max_creal(f))


# ---------------------------------------------------------------------------
# l2


class EllTwoVec:
    """A point of l2: coefficient names plus dyadic upper bounds on tails.

    ``tail_sq(N)`` bounds ``sum_{k >= N} c_k**2`` from above.  For a
    computable point it tends to 0; ``support``, when known, is an index
    past which every coefficient vanishes; ``exact`` (optional) maps the
    indices of nonzero coefficients to their exact rational values.
    """

    def __init__(
        self,
        coeff: Callable[[int], CReal],
        tail_sq: Callable[[int], Dyadic],
        support: Optional[int] = None,
        label: str = "",
        exact: Optional[tuple] = None,
    ):
        self._coeff = coeff
        self._tail_sq = tail_sq
        self.support = support
        self.label = label
        self.exact = exact
        self._cache: dict[int, CReal] = {}
        self._lock = threading.Lock()

    def coeff(self, n: int) -> CReal:
        with self._lock:
            hit = self._cache.get(n)
        if hit is None:
            hit = self._coeff(n)
            with self._lock:
                hit = self._cache.setdefault(n, hit)
        return hit

    def tail_sq(self, n: int) -> Dyadic:
        if self.support is not None and n >= self.support:
            return Dyadic(0)
        return self._tail_sq(n)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, label: str = "") -> "EllTwoVec":
        """Finitely supported vector with exact rational coefficients."""
        vals = [Fraction(as_exact(c)) for c in coeffs]
        while vals and vals[-1] == 0:
            vals.pop()
        return cls._sparse({i: v for i, v in enumerate(vals) if v}, len(vals), label)

    @classmethod
    def unit(cls, n: int) -> "EllTwoVec":
        """The unit vector ``e_n``."""
        return cls._sparse({n: Fraction(1)}, n + 1, f"e_{n}")

    @classmethod
    def _sparse(cls, entries: dict, support: int, label: str) -> "EllTwoVec":
        consts = {i: CReal.constant(v) for i, v in entries.items()}
        zero = CReal.constant(0)
        keys = sorted(entries)
        # suffix sums of squares over the nonzero entries, keyed by position
        suffix = []
        acc = Fraction(0)
        for i in reversed(keys):
            acc += entries[i] * entries[i]
            suffix.append((i, acc))
        suffix.reverse()

        def tail(n):
            for i, total in suffix:
                if i >= n:
                    return ceil_dyadic(total, 2 * n + 8)
            return Dyadic(0)

        return cls(
            lambda n: consts.get(n, zero),
            tail,
            support=support,
            label=label,
            exact=entries,
        )

    def norm_sq(self) -> CReal:
        """``sum c_k**2``, truncating where the tail bound is small enough."""

        def approx(n):
            big = self._truncation(2 * n + 2) if self.support is None else self.support
            terms = [self.coeff(k) * self.coeff(k) for k in range(big)]
            return creal_sum(terms).approx(n + 1)

        return CReal(approx, bound=ceil_dyadic(self.tail_sq(0), 0) if self.tail_sq(0) else Dyadic(0))

    def _truncation(self, level: int, cap: int = 1 << 20) -> int:
        target = Dyadic(1, -level)
        n = 0
        while self.tail_sq(n) > target:
            n += 1
            if n > cap:
                raise DomainError("tail bound does not decay; not a computable point of l2")
        return n

    def __repr__(self):
        if self.exact is not None:
            coeffs = (str(self.exact.get(i, 0)) for i in range(self.support))
            return f"EllTwoVec({', '.join(coeffs)})"
        return f"EllTwoVec({self.label})"


class _DenseBall:
    """Enumeration of finitely supported dyadic vectors in the closed unit ball.

    Block ``(s, d)`` holds the vectors whose last nonzero coordinate has
    index ``s - 1`` and whose coefficients have exact denominator
    ``2**d``.  Blocks are listed by ``s + d``, then ``s``; members of a
    block lexicographically.  Each vector lies in exactly one block.
    """

    def __init__(self):
        self._items: list[tuple[int, tuple[int, ...]]] = []
        self._blocks = self._block_order()
        self._lock = threading.Lock()

    @staticmethod
    def _block_order():
        for t in itertools.count():
            for s in range(t + 1):
                yield s, t - s

    @staticmethod
    def _block(s: int, d: int):
        if s == 0:
            if d == 0:
                yield ()
            return
        r = 1 << d
        limit = r * r
        for c in itertools.product(range(-r, r + 1), repeat=s):
            if c[-1] == 0:
                continue
            if d and not any(v & 1 for v in c):
                continue
            if sum(v * v for v in c) <= limit:
                yield c

    def get(self, j: int) -> tuple[int, tuple[int, ...]]:
        with self._lock:
            while len(self._items) <= j:
                s, d = next(self._blocks)
                self._items.extend((d, c) for c in self._block(s, d))
            return self._items[j]


_DENSE = _DenseBall()


def dense_unit_ball(i: int) -> EllTwoVec:
    """The ``i``-th member of a fixed sequence dense in the l2 unit ball.

    Even indices ``2n`` give the unit vectors ``e_n`` (so their index is
    computable); odd indices run through every finitely supported dyadic
    vector of norm at most 1.
    """
    if i % 2 == 0:
        return EllTwoVec.unit(i // 2)
    d, c = _DENSE.get(i // 2)
    return EllTwoVec.from_coeffs([Dyadic(v, -d) for v in c], label=f"x_{i}")


def unit_vector_index(n: int) -> int:
    return 2 * n


class Functional:
    """A bounded linear functional on l2 with an a-priori norm bound."""

    def __init__(self, evaluate: Callable[[EllTwoVec], CReal], bound: Dyadic, label: str = ""):
        self._evaluate = evaluate
        self.bound = bound
        self.label = label
        self._dense: dict[int, CReal] = {}
        self._lock = threading.Lock()

    def __call__(self, x: EllTwoVec) -> CReal:
        return self._evaluate(x)

    def on_dense(self, i: int) -> CReal:
        with self._lock:
            hit = self._dense.get(i)
        if hit is None:
            hit = self._evaluate(dense_unit_ball(i))
            with self._lock:
                hit = self._dense.setdefault(i, hit)
        return hit

    def on_unit(self, n: int) -> CReal:
        return self.on_dense(unit_vector_index(n))

    def __repr__(self):
        return f"Functional({self.label})"


def _sqrt_bound(t: Dyadic) -> Dyadic:
    """A power of two ``>= sqrt(t)``."""
    j = 0
    while Dyadic(1, 2 * j) < t:
        j += 1
    return Dyadic(1, j)


def _inner(x: EllTwoVec, y: EllTwoVec, n: int) -> Dyadic:
    """Level-n approximation of <x, y> with Cauchy-Schwarz tail control."""
    if x.support is not None and y.support is not None:
        cut = min(x.support, y.support)
    elif x.support is not None:
        cut = x.support
    elif y.support is not None:
        cut = y.support
    else:
        target = Dyadic(1, -2 * (n + 1))
        cut = 0
        while x.tail_sq(cut) * y.tail_sq(cut) > target:
            cut += 1
    if cut == 0:
        return Dyadic(0)
    if x.exact is not None and y.exact is not None:
        small, big = sorted((x.exact, y.exact), key=len)
        s = sum((v * big[i] for i, v in small.items() if i < cut and i in big), Fraction(0))
        return round_dyadic(s, n + 1)
    terms = [x.coeff(k) * y.coeff(k) for k in range(cut)]
    return creal_sum(terms).approx(n + 1)


def functional_from_vec(y: EllTwoVec) -> Functional:
    """``f_y(x) = <x, y>``."""
    bound = _sqrt_bound(y.tail_sq(0))

    def evaluate(x: EllTwoVec) -> CReal:
        return CReal(lambda n: _inner(x, y, n), bound=bound * _sqrt_bound(x.tail_sq(0)))

    return Functional(evaluate, bound, label=f"<., {y.label or y!r}>")


def functional_norm_stage(f: Functional, stage: int, level: int) -> Dyadic:
    """Level-``level`` approximation of ``max_{i <= stage} |f(x_i)|``."""
    return max(abs(f.on_dense(i).approx(level)) for i in range(stage + 1))
