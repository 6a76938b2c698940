"""Exact dyadic arithmetic, dyadic intervals and computable reals.

A computable real is represented by a *rapid Cauchy name*: a total map
``n -> q_n`` into the dyadics with ``|q_n - x| <= 2**-n``.  Every operation
in this module returns a valid name whenever its inputs are valid names.
"""

from __future__ import annotations

import enum
import math
import numbers
import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from .errors import DomainError, MalformedName

__all__ = [
    "Dyadic",
    "Interval",
    "CReal",
    "MonotoneSeq",
    "Ordering",
    "dyadic_arith",
    "creal_arith",
    "creal_cmp_partial",
    "creal_lim",
    "creal_sum",
    "creal_max",
    "creal_sqrt",
    "mct_stage",
    "floor_dyadic",
    "ceil_dyadic",
    "round_dyadic",
    "as_exact",
]

Exact = Union["Dyadic", Fraction, int]


class Dyadic:
    """An exact rational ``mantissa * 2**exponent``.

    Instances are canonical: the mantissa is odd, or the value is zero
    and stored as ``(0, 0)``.  Arithmetic with ``int`` and ``Dyadic``
    stays dyadic; mixing with ``Fraction`` yields a ``Fraction``.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        m = int(mantissa)
        e = int(exponent)
        if m == 0:
            e = 0
        else:
            tz = (m & -m).bit_length() - 1
            if tz:
                m >>= tz
                e += tz
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_fraction(cls, q) -> "Dyadic":
        """Exact conversion; raises ``ValueError`` for non-dyadic rationals."""
        if isinstance(q, Dyadic):
            return q
        q = Fraction(q)
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not a dyadic rational")
        return cls(q.numerator, -(den.bit_length() - 1))

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse ``"m*2^e"``, a plain integer, or a dyadic ``"p/q"``."""
        s = text.strip().replace(" ", "")
        match = re.fullmatch(r"([+-]?\d+)\*2\^\(?([+-]?\d+)\)?", s)
        if match:
            return cls(int(match.group(1)), int(match.group(2)))
        if re.fullmatch(r"[+-]?\d+(/\d+)?", s):
            return cls.from_fraction(Fraction(s))
        raise ValueError(f"cannot parse dyadic {text!r}")

    # -- conversions ------------------------------------------------------

    @property
    def numerator(self) -> int:
        if self.exponent >= 0:
            return self.mantissa << self.exponent
        return self.mantissa

    @property
    def denominator(self) -> int:
        if self.exponent >= 0:
            return 1
        return 1 << -self.exponent

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __str__(self) -> str:
        return f"{self.mantissa}*2^{self.exponent}"

    def __repr__(self) -> str:
        return f"Dyadic({self.mantissa}, {self.exponent})"

    def __hash__(self) -> int:
        if self.exponent >= 0:
            return hash(self.mantissa << self.exponent)
        return hash(self.to_fraction())

    def __bool__(self) -> bool:
        return self.mantissa != 0

    def __reduce__(self):
        return (Dyadic, (self.mantissa, self.exponent))

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, int):
            other = Dyadic(other)
        if isinstance(other, Dyadic):
            e = min(self.exponent, other.exponent)
            return Dyadic(
                (self.mantissa << (self.exponent - e))
                + (other.mantissa << (other.exponent - e)),
                e,
            )
        if isinstance(other, Fraction):
            return self.to_fraction() + other
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.mantissa, self.exponent)

    def __pos__(self) -> "Dyadic":
        return self

    def __abs__(self) -> "Dyadic":
        return self if self.mantissa >= 0 else -self

    def __sub__(self, other):
        if isinstance(other, (int, Dyadic, Fraction)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Dyadic, Fraction)):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, int):
            return Dyadic(self.mantissa * other, self.exponent)
        if isinstance(other, Dyadic):
            return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)
        if isinstance(other, Fraction):
            return self.to_fraction() * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Dyadic, Fraction)):
            q = self.to_fraction() / Fraction(other)
            try:
                return Dyadic.from_fraction(q)
            except ValueError:
                return q
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Fraction(other) / self.to_fraction()
        return NotImplemented

    def shift(self, k: int) -> "Dyadic":
        """Multiply by ``2**k`` exactly."""
        return Dyadic(self.mantissa, self.exponent + k)

    def floor(self, n: int) -> "Dyadic":
        """Largest multiple of ``2**-n`` that is ``<= self``."""
        return floor_dyadic(self, n)

    def ceil(self, n: int) -> "Dyadic":
        return ceil_dyadic(self, n)

    def round(self, n: int) -> "Dyadic":
        """Nearest multiple of ``2**-n`` (ties upward); error ``<= 2**-(n+1)``."""
        return round_dyadic(self, n)

    # -- ordering ---------------------------------------------------------

    def _cmp(self, other) -> int:
        if isinstance(other, int):
            other = Dyadic(other)
        if isinstance(other, Dyadic):
            d = (self - other).mantissa
        elif isinstance(other, Fraction):
            d = self.numerator * other.denominator - other.numerator * self.denominator
        else:
            raise TypeError
        return (d > 0) - (d < 0)

    def _compare(self, other, test):
        try:
            return test(self._cmp(other))
        except TypeError:
            return NotImplemented

    def __eq__(self, other):
        if isinstance(other, (int, Dyadic, Fraction)):
            return self._cmp(other) == 0
        return NotImplemented

    def __lt__(self, other):
        return self._compare(other, lambda c: c < 0)

    def __le__(self, other):
        return self._compare(other, lambda c: c <= 0)

    def __gt__(self, other):
        return self._compare(other, lambda c: c > 0)

    def __ge__(self, other):
        return self._compare(other, lambda c: c >= 0)


numbers.Rational.register(Dyadic)

ZERO = Dyadic(0)
ONE = Dyadic(1)


def as_exact(x) -> Union[Dyadic, Fraction]:
    """Coerce ints, strings and rationals to ``Dyadic`` when possible."""
    if isinstance(x, Dyadic):
        return x
    if isinstance(x, str):
        s = x.strip()
        if "*" in s:
            return Dyadic.parse(s)
        x = Fraction(s)
    q = Fraction(x)
    try:
        return Dyadic.from_fraction(q)
    except ValueError:
        return q


def _num_den(x) -> tuple[int, int]:
    if isinstance(x, int):
        return x, 1
    return x.numerator, x.denominator


def floor_dyadic(x, n: int) -> Dyadic:
    """``floor(x * 2**n) * 2**-n`` for any exact rational ``x``."""
    num, den = _num_den(x)
    if n >= 0:
        return Dyadic((num << n) // den, -n)
    return Dyadic(num // (den << -n), -n)


def ceil_dyadic(x, n: int) -> Dyadic:
    return -floor_dyadic(-x, n)


def round_dyadic(x, n: int) -> Dyadic:
    """Nearest multiple of ``2**-n``; ties go up."""
    num, den = _num_den(x)
    # floor((2 * num * 2**n + den) / (2 * den))
    if n >= 0:
        return Dyadic(((num << (n + 1)) + den) // (den << 1), -n)
    return Dyadic(((num << 1) + (den << -n)) // (den << (1 - n)), -n)


def _ceil_log2(x) -> int:
    """Smallest ``c >= 0`` with ``2**c >= x``."""
    num, den = _num_den(x)
    if num <= den:
        return 0
    c = max((num // den).bit_length() - 1, 0)
    while num > (den << c):
        c += 1
    return c


class DyadicOp(str, enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    MIN = "min"
    MAX = "max"
    CMP = "cmp"


def dyadic_arith(a: Dyadic, b: Dyadic, op: str):
    """Exact binary dyadic operation; ``cmp`` returns -1, 0 or 1."""
    op = DyadicOp(op)
    if op is DyadicOp.ADD:
        return a + b
    if op is DyadicOp.SUB:
        return a - b
    if op is DyadicOp.MUL:
        return a * b
    if op is DyadicOp.MIN:
        return min(a, b)
    if op is DyadicOp.MAX:
        return max(a, b)
    return a._cmp(b)


# ---------------------------------------------------------------------------
# Intervals


@dataclass(frozen=True)
class Interval:
    """A closed interval with exact rational endpoints (dyadic by default)."""

    lo: Exact
    hi: Exact

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x) -> "Interval":
        return cls(x, x)

    @classmethod
    def unit(cls) -> "Interval":
        return cls(ZERO, ONE)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def midpoint(self):
        s = self.lo + self.hi
        if isinstance(s, Dyadic):
            return s.shift(-1)
        return Fraction(s) / 2

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def split(self) -> tuple["Interval", "Interval"]:
        m = self.midpoint
        return Interval(self.lo, m), Interval(m, self.hi)

    def round_out(self, n: int) -> "Interval":
        """Smallest enclosing interval with endpoints in ``2**-n * Z``."""
        return Interval(floor_dyadic(self.lo, n), ceil_dyadic(self.hi, n))

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        if isinstance(other, Interval):
            return self + (-other)
        return Interval(self.lo - other, self.hi - other)

    def __abs__(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(ZERO, max(-self.lo, self.hi))

    def __mul__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        products = [a * b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


# ---------------------------------------------------------------------------
# Computable reals


class Ordering(enum.Enum):
    LESS = "less"
    GREATER = "greater"
    UNKNOWN = "unknown"


class CReal:
    """A rapid Cauchy name ``n -> q_n`` with ``|q_n - x| <= 2**-n``.

    ``bound``, when present, is a dyadic with ``|x| <= bound``; it is
    required by multiplication.  Queries are memoized under a lock so a
    value can be shared between threads.
    """

    __slots__ = ("_fn", "bound", "label", "_cache", "_lock")

    def __init__(
        self,
        approx: Callable[[int], Dyadic],
        bound: Optional[Dyadic] = None,
        label: Optional[str] = None,
    ):
        self._fn = approx
        self.bound = bound
        self.label = label
        self._cache: dict[int, Dyadic] = {}
        self._lock = threading.Lock()

    def approx(self, n: int) -> Dyadic:
        if n < 0:
            n = 0
        with self._lock:
            hit = self._cache.get(n)
        if hit is not None:
            return hit
        q = self._fn(n)
        if not isinstance(q, Dyadic):
            q = Dyadic.from_fraction(q)
        with self._lock:
            return self._cache.setdefault(n, q)

    def enclosure(self, n: int) -> Interval:
        q = self.approx(n)
        eps = Dyadic(1, -n)
        return Interval(q - eps, q + eps)

    def __repr__(self) -> str:
        if self.label:
            return f"CReal({self.label})"
        return f"CReal(~{float(self.approx(53))!r})"

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, x) -> "CReal":
        """Name of an exact rational (dyadic or not)."""
        x = as_exact(x)
        if isinstance(x, Dyadic):
            return cls(lambda n: x, bound=abs(x), label=str(x))
        return cls(
            lambda n: round_dyadic(x, n + 1),
            bound=ceil_dyadic(abs(x), 0),
            label=str(x),
        )

    from_dyadic = constant
    from_fraction = constant

    # -- operator sugar ---------------------------------------------------

    @staticmethod
    def _lift(x) -> "CReal":
        return x if isinstance(x, CReal) else CReal.constant(x)

    def __add__(self, other):
        return creal_arith(self, self._lift(other), "add")

    __radd__ = __add__

    def __sub__(self, other):
        return creal_arith(self, self._lift(other), "sub")

    def __rsub__(self, other):
        return creal_arith(self._lift(other), self, "sub")

    def __neg__(self):
        return creal_arith(self, None, "neg")

    def __abs__(self):
        return creal_arith(self, None, "abs")

    def __mul__(self, other):
        if isinstance(other, CReal):
            return creal_arith(self, other, "mul")
        return _scale(self, as_exact(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, CReal):
            raise TypeError("division by a computable real is not supported")
        return _divide(self, as_exact(other))


def _add_bounds(*bounds):
    if any(b is None for b in bounds):
        return None
    return sum(bounds, ZERO)


def _scale(x: CReal, c) -> CReal:
    """``c * x`` for an exact rational constant ``c``."""
    shift = _ceil_log2(abs(c)) + 1

    def approx(n):
        return round_dyadic(x.approx(n + shift) * c, n + 1)

    bound = None if x.bound is None else ceil_dyadic(x.bound * abs(c), 0)
    return CReal(approx, bound=bound)


def _divide(x: CReal, d) -> CReal:
    """``x / d`` for a nonzero exact rational ``d``."""
    if d == 0:
        raise ZeroDivisionError("division by zero")
    inv = 1 / Fraction(d)
    return _scale(x, inv)


class RealOp(str, enum.Enum):
    ADD = "add"
    SUB = "sub"
    NEG = "neg"
    ABS = "abs"
    MUL = "mul"


def creal_arith(x: CReal, y: Optional[CReal], op: str) -> CReal:
    """Arithmetic on names.  ``neg`` and ``abs`` ignore ``y``.

    ``add``/``sub`` query both operands one level deeper; ``mul`` needs a
    magnitude bound on both operands and raises ``MalformedName`` otherwise.
    """
    op = RealOp(op)
    if op is RealOp.NEG:
        return CReal(lambda n: -x.approx(n), bound=x.bound)
    if op is RealOp.ABS:
        return CReal(lambda n: abs(x.approx(n)), bound=x.bound)
    if y is None:
        raise TypeError(f"{op.value} needs two operands")
    if op is RealOp.ADD:
        return CReal(lambda n: x.approx(n + 1) + y.approx(n + 1), bound=_add_bounds(x.bound, y.bound))
    if op is RealOp.SUB:
        return CReal(lambda n: x.approx(n + 1) - y.approx(n + 1), bound=_add_bounds(x.bound, y.bound))
    if x.bound is None or y.bound is None:
        raise MalformedName("multiplication needs a magnitude bound on both operands")
    bx, by = x.bound, y.bound
    # |xy - x_k y_k| <= (bx + by + 1) 2^-k
    extra = _ceil_log2(bx + by + 1) + 1

    def approx(n):
        k = n + extra
        return round_dyadic(x.approx(k) * y.approx(k), n + 1)

    return CReal(approx, bound=bx * by)


def creal_sum(terms: Iterable[CReal]) -> CReal:
    """Sum of finitely many names, without the depth growth of nested ``add``."""
    terms = list(terms)
    if not terms:
        return CReal.constant(0)
    extra = _ceil_log2(len(terms))

    def approx(n):
        return sum((t.approx(n + extra) for t in terms), ZERO)

    return CReal(approx, bound=_add_bounds(*(t.bound for t in terms)))


def creal_max(*terms: CReal) -> CReal:
    """Pointwise maximum; max is 1-Lipschitz so no extra precision is needed."""
    if not terms:
        raise ValueError("max of no terms")
    bounds = [t.bound for t in terms]
    bound = None if any(b is None for b in bounds) else max(bounds)
    return CReal(lambda n: max(t.approx(n) for t in terms), bound=bound)


def creal_sqrt(x: CReal) -> CReal:
    """Square root of a nonnegative real.

    Uses ``|sqrt(a) - sqrt(b)| <= sqrt(|a - b|)``: with ``k = n + 2`` the
    approximation error of x at level ``2k``, the flooring of that
    approximation and the integer square root each cost at most ``2**-k``.
    """

    def approx(n):
        k = n + 2
        q = x.approx(2 * k)
        if q < -Dyadic(1, -2 * k):
            raise DomainError("square root of a negative real")
        q = max(q, ZERO)
        scaled = floor_dyadic(q.shift(2 * k), 0).numerator
        return Dyadic(math.isqrt(scaled), -k)

    bound = None
    if x.bound is not None:
        bound = ONE if x.bound <= 1 else x.bound
    return CReal(approx, bound=bound)


def creal_cmp_partial(x: CReal, y: CReal, level: int) -> Ordering:
    """Compare at one precision level; never returns a false verdict."""
    eps = Dyadic(1, -level)
    qx, qy = x.approx(level), y.approx(level)
    if qx + eps < qy - eps:
        return Ordering.LESS
    if qx - eps > qy + eps:
        return Ordering.GREATER
    return Ordering.UNKNOWN


def certify_sign(x: CReal, max_level: int, start: int = 0) -> int:
    """Search levels ``start..max_level`` for a certified sign; 0 if none found."""
    for level in range(start, max_level + 1):
        q = x.approx(level)
        eps = Dyadic(1, -level)
        if q > eps:
            return 1
        if q < -eps:
            return -1
    return 0


def creal_lim(
    seq: Callable[[int], CReal],
    modulus: Callable[[int], int],
    bound: Optional[Dyadic] = None,
) -> CReal:
    """Limit of a sequence with an explicit convergence modulus.

    Caller promise: ``|x_{modulus(k)} - x_m| <= 2**-k`` for every
    ``m >= modulus(k)``.  Level ``k`` reads term ``modulus(k+1)`` at
    level ``k+1``.
    """
    return CReal(lambda k: seq(modulus(k + 1)).approx(k + 1), bound=bound)


@dataclass(frozen=True)
class MonotoneSeq:
    """A nondecreasing sequence of names bounded above by ``bound``."""

    terms: Callable[[int], CReal]
    bound: Dyadic


def mct_stage(seq: MonotoneSeq, stage: int, level: int) -> Dyadic:
    """Level-``level`` approximation of ``max(x_0, ..., x_stage)``.

    The supremum itself is not computable in general; this is its
    stage-truncated approximant.  Exactly nondecreasing in ``stage``.
    """
    return max(seq.terms(n).approx(level) for n in range(stage + 1))
