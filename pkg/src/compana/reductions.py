"""Executable reduction witnesses and the problems they connect.

Each ``*_witness`` function returns ``ReductionWitness`` objects for
``weihrauch.reduce_check``; ``WITNESSES`` maps the command-line names to
(source problem, target problem, witness, default corpus) factories.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .coding import Name, pairing, real_to_name, seq_project, seq_tupling, name_to_real, unpair
from .constructions import specker_seq
from .errors import MalformedName
from .exact import CReal, Dyadic, MonotoneSeq, ceil_dyadic, creal_sum
from .functions import (
    EllTwoVec,
    Functional,
    PLFunc,
    _sqrt_bound,
    dense_unit_ball,
    functional_from_vec,
    neg_abs,
    sub_max,
)
from .machines import StageSet
from .weihrauch import (
    DomainStatus,
    Problem,
    ReductionWitness,
    Verdict,
    _real_verdict,
    cn_problem,
    cn_solve,
    combine,
    decode_cfunc,
    decode_functional,
    decode_monotone,
    decode_vec,
    encode_cfunc,
    encode_functional,
    encode_monotone,
    encode_vec,
    identity_problem,
    identity_witness,
    lim_problem,
    max_problem,
    mct_problem,
    parallelize,
    zero_problem,
)

__all__ = [
    "max_equiv_zero_witnesses",
    "frr_problem",
    "frr_le_mct_witness",
    "ec_problem",
    "enumeration_name",
    "ec_via_frr_witness",
    "mct_ec_bridge",
    "digit_readout",
    "DiagonalOperator",
    "BimResult",
    "bim_exclusions",
    "bim_via_cn",
    "lim_cnpar_witnesses",
    "WITNESSES",
    "WitnessSetup",
]


def _floor_int(d: Dyadic) -> int:
    return d.numerator // d.denominator


# ---------------------------------------------------------------------------
# MAX and Z


def max_equiv_zero_witnesses() -> tuple[ReductionWitness, ReductionWitness]:
    """``(Z <= MAX, MAX <= Z)``: pre-process with ``-|f|`` resp. ``f - max f``;
    solutions pass through unchanged."""
    z_le_max = ReductionWitness(
        lambda x: encode_cfunc(neg_abs(decode_cfunc(x))), lambda x, y: y, label="neg-abs"
    )
    max_le_z = ReductionWitness(
        lambda x: encode_cfunc(sub_max(decode_cfunc(x))), lambda x, y: y, label="sub-max"
    )
    return z_le_max, max_le_z


# ---------------------------------------------------------------------------
# Frechet-Riesz and monotone convergence


def frr_problem(checks: int = 32, precision: int = 64) -> Problem:
    """``FRR``: the representing vector of a bounded linear functional.

    The oracle at stage ``s`` returns ``y_n = f(e_n)`` for ``n < s`` (zero
    beyond); tails are bounded from upper approximations at ``precision``.
    The verifier compares ``<x_i, y>`` with ``f(x_i)`` on the first
    ``checks`` dense points.
    """

    def oracle(p, stage):
        f = decode_functional(p)
        eps = Dyadic(1, -precision)
        ups = []
        for n in range(stage):
            u = abs(f.on_unit(n).approx(precision)) + eps
            ups.append(u * u)
        suffix = [Dyadic(0)] * (stage + 1)
        for n in range(stage - 1, -1, -1):
            suffix[n] = suffix[n + 1] + ups[n]
        zero = CReal.constant(0)
        y = EllTwoVec(
            lambda n: f.on_unit(n) if n < stage else zero,
            lambda n: suffix[n] if n < stage else Dyadic(0),
            support=stage,
            label=f"frr@{stage}",
        )
        return encode_vec(y)

    def verifier(p, z, level):
        f = decode_functional(p)
        try:
            fy = functional_from_vec(decode_vec(z))
            verdicts = []
            for i in range(checks):
                diff = fy(dense_unit_ball(i)) - f.on_dense(i)
                verdicts.append(_real_verdict(diff, Dyadic(0), Dyadic(0), level))
        except MalformedName:
            return Verdict.REJECTED
        return combine(verdicts)

    return Problem("FRR", _ok, oracle, verifier)


def _ok(p, budget):
    return DomainStatus.OK


class _FrrNormSequence:
    """``t_n = max(max_{i <= n} |f(x_i)|, sqrt(sum_{j < n} f(e_j)**2))``.

    Both parts are lower bounds of ``||f||`` converging to it; running
    maxima and prefix sums are cached per precision so a whole column of
    terms costs linear time.
    """

    def __init__(self, f: Functional):
        self.f = f
        self.bound = f.bound
        self._slack = max(0, math.ceil(math.log2(2 * float(f.bound) + 1)))
        self._absmax: dict[int, list[Dyadic]] = {}
        self._sums: dict[int, list[Dyadic]] = {}
        self._lock = threading.Lock()

    def _running_max(self, n: int, prec: int) -> Dyadic:
        col = self._absmax.setdefault(prec, [])
        while len(col) <= n:
            v = abs(self.f.on_dense(len(col)).approx(prec))
            col.append(max(col[-1], v) if col else v)
        return col[n]

    def _prefix_sum(self, n: int, prec: int) -> Dyadic:
        col = self._sums.setdefault(prec, [Dyadic(0)])
        while len(col) <= n:
            q = self.f.on_unit(len(col) - 1).approx(prec)
            col.append(col[-1] + q * q)
        return col[n]

    def approx(self, n: int, k: int) -> Dyadic:
        with self._lock:
            a = self._running_max(n, k + 2)
            m = 2 * k + 4 + n.bit_length() + self._slack
            s = self._prefix_sum(n, m)
        scaled = s.shift(2 * (k + 2))
        b = Dyadic(math.isqrt(_floor_int(scaled)), -(k + 2))
        return max(a, b)

    def term(self, n: int) -> CReal:
        return CReal(lambda k: self.approx(n, k), bound=ceil_dyadic(self.bound, 0) + 1)

    def sequence(self) -> MonotoneSeq:
        cache: dict[int, CReal] = {}

        def term(n):
            if n not in cache:
                cache[n] = self.term(n)
            return cache[n]

        return MonotoneSeq(term, self.bound)


def frr_le_mct_witness() -> ReductionWitness:
    """``FRR <= MCT``: the norm is the supremum of a monotone sequence of
    lower bounds; ``y_n = f(e_n)`` and the norm supply tail bounds."""

    def k_pre(x):
        return encode_monotone(_FrrNormSequence(decode_functional(x)).sequence())

    def h_post(x, answer):
        f = decode_functional(x)
        norm = name_to_real(answer)
        norm_sq = norm * norm

        def tail(n):
            partial = creal_sum([f.on_unit(j) * f.on_unit(j) for j in range(n)])
            v = (norm_sq - partial).approx(n) + Dyadic(1, -n)
            return max(v, Dyadic(0))

        y = EllTwoVec(f.on_unit, tail, label="recovered")
        return encode_vec(y)

    return ReductionWitness(k_pre, h_post, label="frr-mct")


# ---------------------------------------------------------------------------
# Enumerations and characteristic functions


def enumeration_name(elements: Sequence[int], gaps: int = 0) -> Name:
    """Enumeration reporting ``elements`` in order, ``gaps`` silent
    positions before each report."""
    values = []
    for n in elements:
        values.extend([0] * gaps)
        values.append(n + 1)
    return Name.from_list(values)


def _enumerated_set(g: Name, limit: int) -> set[int]:
    return {v - 1 for v in (g.at(t) for t in range(limit)) if v}


def ec_problem(horizon: int = 4096) -> Problem:
    """``EC``: characteristic function of an enumerated set.

    The oracle at stage ``s`` marks elements reported before position
    ``s``.  The verifier checks positions ``0..level`` against the reports
    up to ``horizon``: a 0 for a reported element, or any value other than
    0 or 1, is rejected; a 1 for an element not reported yet is unknown.
    """

    def domain_check(g, budget):
        seen = set()
        for t in range(max(budget, 64)):
            v = g.at(t)
            if v:
                if v in seen:
                    return DomainStatus.VIOLATED
                seen.add(v)
        return DomainStatus.OK

    def oracle(g, stage):
        a = frozenset(_enumerated_set(g, stage))
        return Name(lambda n: int(n in a), label=f"chi@{stage}")

    def verifier(g, z, level):
        a = _enumerated_set(g, horizon)
        verdicts = []
        for n in range(level + 1):
            v = z.at(n)
            if v > 1 or (v == 0 and n in a):
                return Verdict.REJECTED
            verdicts.append(Verdict.UNKNOWN if v == 1 and n not in a else Verdict.ACCEPTED)
        return combine(verdicts)

    return Problem("EC", domain_check, oracle, verifier)


def digit_readout(x: CReal) -> Name:
    """Characteristic function from ``x = sum_{n in A} 4**-(n+1)``.

    Membership of ``n`` is the binary digit at place ``2n + 2`` after the
    point.  Only even places carry digits, so the fractional part of
    ``x * 4**(n+1)`` lies in ``[0, 1/3]`` and an approximation to within
    ``2**-(2n+4)`` decides the digit.
    """

    def fn(n):
        v = x.approx(2 * n + 4).shift(2 * n + 2) + Dyadic(1, -2)
        return _floor_int(v) & 1

    return Name(fn, label="digits")


class _EnumeratedVectorFunctional(Functional):
    """``f_a(x) = <x, a>`` with ``a_k = 2**-g(k)`` (0 when ``g(k) = 0``).

    ``a`` itself need not be a computable point of l2 (its norm encodes
    the enumerated set) but ``f_a`` is computable: coordinates are exact
    and ``||a||**2 <= 1/3`` controls every tail.
    """

    def __init__(self, g: Name):
        self.g = g
        super().__init__(self._evaluate_at, Dyadic(1), label="f_a")

    def coeff(self, k: int) -> Dyadic:
        v = self.g.at(k)
        return Dyadic(1, -v) if v else Dyadic(0)

    def _evaluate_at(self, x: EllTwoVec) -> CReal:
        if x.exact is not None:
            total = sum((c * self.coeff(k).to_fraction() for k, c in x.exact.items()), Fraction(0))
            return CReal.constant(total)

        def approx(n):
            cut = 0
            target = Dyadic(1, -2 * (n + 2))
            while x.tail_sq(cut) > target:
                cut += 1
            terms = [x.coeff(k) * CReal.constant(self.coeff(k)) for k in range(cut)]
            return creal_sum(terms).approx(n + 1) if terms else Dyadic(0)

        return CReal(approx, bound=_sqrt_bound(x.tail_sq(0)))


def ec_via_frr_witness() -> ReductionWitness:
    """``EC <= FRR`` via ``a_k = 2**-g(k)`` and the digits of ``||y||**2``."""

    def k_pre(g):
        return encode_functional(_EnumeratedVectorFunctional(g))

    def h_post(g, y_name):
        return digit_readout(decode_vec(y_name).norm_sq())

    return ReductionWitness(k_pre, h_post, label="ec-frr")


# ---------------------------------------------------------------------------
# MCT <-> EC


def _weighted_sum(s: StageSet, t: int) -> Dyadic:
    return sum((Dyadic(1, -2 * (n + 1)) for n in s.enum_at(t)), Dyadic(0))


def _reported_stage_set(g: Name) -> StageSet:
    return StageSet(lambda t: _enumerated_set(g, t), label="reported")


class _ThresholdEnumeration:
    """Enumeration of the bisection thresholds below ``sup x_n``.

    With ``L = q_0(x_0) - 1 <= sup`` and ``R`` a power of two with
    ``sup < L + R``, node ``(i, m)`` (``0 <= m < 2**i``) is the threshold
    ``L + (2m + 1) R 2**-(i+1)``; the set is ``{<i, m> : sup > T(i, m)}``.
    Round ``r`` certifies thresholds below ``max_{n <= 2r} q_{2r+4}(x_n) -
    2**-(2r+4)`` on levels ``i <= 2r`` and reports the new ones at
    positions ``<r, slot>``: first, for every level, the largest new
    threshold (the one a bisection for the supremum will query), then the
    rest.
    """

    def __init__(self, seq: MonotoneSeq):
        self.seq = seq
        self.low = seq.terms(0).approx(0) - 1
        span = seq.bound - self.low + 1
        self.e = 0
        while Dyadic(1, self.e) < span:
            self.e += 1
        self.r_span = Dyadic(1, self.e)
        self._lower: list[Dyadic] = []
        self._lock = threading.Lock()

    def threshold(self, i: int, m: int) -> Dyadic:
        return self.low + Dyadic(2 * m + 1, self.e - i - 1)

    def lower(self, r: int) -> Dyadic:
        with self._lock:
            while len(self._lower) <= r:
                rr = len(self._lower)
                prec = 2 * rr + 4
                best = max(self.seq.terms(n).approx(prec) for n in range(2 * rr + 1)) - Dyadic(1, -prec)
                if self._lower:
                    best = max(best, self._lower[-1])
                self._lower.append(best)
            return self._lower[r]

    def count(self, i: int, r: int) -> int:
        """Number of level-``i`` thresholds certified at round ``r``."""
        if r < 0 or i > 2 * r:
            return 0
        d = (self.lower(r) - self.low).shift(i + 1 - self.e)
        c = -_floor_int(-(d - 1) / 2) if d > 1 else 0
        return min(max(c, 0), 1 << i)

    def at(self, pos: int) -> int:
        r, slot = unpair(pos)
        levels = 2 * r + 1
        news = [(self.count(i, r - 1), self.count(i, r)) for i in range(levels)]
        if slot < levels:
            prev, cur = news[slot]
            return pairing(slot, cur - 1) + 1 if cur > prev else 0
        k = slot - levels
        for i, (prev, cur) in enumerate(news):
            rest = max(0, cur - 1 - prev)
            if k < rest:
                return pairing(i, prev + k) + 1
            k -= rest
        return 0

    def name(self) -> Name:
        return Name(self.at, label="thresholds")


def mct_ec_bridge() -> tuple[ReductionWitness, ReductionWitness]:
    """``(MCT <= EC, EC <= MCT)``.

    EC <= MCT: the partial sums ``sum_{n reported} 4**-(n+1)`` are monotone
    with bound 1/2 and their supremum carries the set in its even digits.
    MCT <= EC: enumerate the bisection thresholds below the supremum and
    bisect with the characteristic function.
    """

    def mct_k_pre(x):
        return _ThresholdEnumeration(decode_monotone(x)).name()

    def mct_h_post(x, chi):
        enum = _ThresholdEnumeration(decode_monotone(x))

        def approx(k):
            depth = k + enum.e + 1
            a = enum.low
            for i in range(depth):
                m = _floor_int((a - enum.low).shift(i - enum.e))
                if chi.at(pairing(i, m)) == 1:
                    a = enum.threshold(i, m)
            return a + Dyadic(1, enum.e - depth - 1)

        return real_to_name(CReal(approx, bound=ceil_dyadic(abs(enum.low) + enum.r_span, 0)))

    def ec_k_pre(g):
        s = _reported_stage_set(g)
        return encode_monotone(MonotoneSeq(lambda t: CReal.constant(_weighted_sum(s, t)), Dyadic(1, -1)))

    def ec_h_post(g, answer):
        return digit_readout(name_to_real(answer))

    return (
        ReductionWitness(mct_k_pre, mct_h_post, label="mct-ec"),
        ReductionWitness(ec_k_pre, ec_h_post, label="ec-mct"),
    )


# ---------------------------------------------------------------------------
# Banach inverse mapping on diagonal operators


@dataclass(frozen=True)
class DiagonalOperator:
    """``T e_n = d_n e_n`` with ``d_n = head[n]`` for ``n < len(head)``, else ``tail``."""

    head: tuple[Dyadic, ...]
    tail: Dyadic

    def __post_init__(self):
        head = tuple(Dyadic.from_fraction(Fraction(h)) if not isinstance(h, Dyadic) else h for h in self.head)
        tail = self.tail if isinstance(self.tail, Dyadic) else Dyadic.from_fraction(Fraction(self.tail))
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)
        if any(d <= 0 for d in head) or tail <= 0:
            raise ValueError("diagonal entries must be positive")

    def d(self, n: int) -> Dyadic:
        return self.head[n] if n < len(self.head) else self.tail

    @property
    def norm_bound(self) -> Dyadic:
        return max(self.head + (self.tail,))

    @property
    def minimum(self) -> Dyadic:
        return min(self.head + (self.tail,))

    def stabilization_index(self) -> int:
        """First index where the running minimum reaches its final value."""
        m = self.minimum
        for n in range(len(self.head) + 1):
            if self.d(n) == m:
                return n
        return len(self.head)

    def apply(self, x: EllTwoVec) -> EllTwoVec:
        b2 = self.norm_bound * self.norm_bound
        return EllTwoVec(
            lambda n: x.coeff(n) * self.d(n),
            lambda n: x.tail_sq(n) * b2,
            support=x.support,
            label="T x",
        )


def _doubling_count(d: Dyadic) -> int:
    """Least ``k >= 0`` with ``2**-k <= d``."""
    k = 0
    while Dyadic(1, -k) > d:
        k += 1
    return k


def bim_exclusions(t_op: DiagonalOperator) -> Name:
    """Exclusion stream for the least ``k`` with ``inf d_n >= 2**-k``.

    Position ``<t, j>`` carries the ``j``-th natural refuted by ``d_t``
    (a ``k`` with ``d_t < 2**-k`` not already refuted by an earlier
    entry), largest first, so each new minimum costs at most one revision
    of the least surviving ``k``.
    """
    prefix: list[int] = []
    lock = threading.Lock()

    def refuted_upto(t):
        with lock:
            while len(prefix) <= t:
                n = len(prefix)
                c = _doubling_count(t_op.d(n))
                prefix.append(max(c, prefix[-1]) if prefix else c)
            return prefix[t]

    def fn(pos):
        t, j = unpair(pos)
        prev = refuted_upto(t - 1) if t else 0
        cur = refuted_upto(t)
        new = list(range(cur - 1, prev - 1, -1))
        return new[j] + 1 if j < len(new) else 0

    return Name(fn, label="bim-exclusions")


@dataclass(frozen=True)
class BimResult:
    vec: EllTwoVec
    k: int
    mind_changes: int
    stage: int
    certified: bool


def bim_via_cn(t_op: DiagonalOperator, y: EllTwoVec, level: int, stage: int = 4096) -> BimResult:
    """``T^{-1} y`` for a diagonal ``T``; the norm bound ``2**k`` of the
    inverse comes from choice on N with finitely many mind changes.

    ``certified`` reports whether ``T(T^{-1} y)`` agrees with ``y`` within
    ``2**-level`` on the checked coordinates (the support of ``y`` when
    known, else ``0..level``).
    """
    k, changes = cn_solve(bim_exclusions(t_op), stage)
    scale = Dyadic(1, 2 * k)
    x = EllTwoVec(
        lambda n: y.coeff(n) / t_op.d(n),
        lambda n: y.tail_sq(n) * scale,
        support=y.support,
        label="T^-1 y",
    )
    back = t_op.apply(x)
    upto = y.support if y.support is not None else level + 1
    ok = all(
        _real_verdict(back.coeff(n) - y.coeff(n), Dyadic(0), Dyadic(0), level) is Verdict.ACCEPTED
        for n in range(upto)
    )
    return BimResult(x, k, changes, stage, ok)


# ---------------------------------------------------------------------------
# Choice on N, limits and parallelization


def _change_exclusions(p: Name, i: int) -> Name:
    """Exclude ``n`` at position ``<t, n>`` when ``t > n`` is the first index
    with ``p_t(i) != p_n(i)``."""

    def fn(pos):
        t, n = unpair(pos)
        if t <= n:
            return 0
        base = p.at(pairing(n, i))
        if p.at(pairing(t, i)) == base:
            return 0
        if any(p.at(pairing(u, i)) != base for u in range(n + 1, t)):
            return 0
        return n + 1

    return Name(fn, label=f"changes[{i}]")


def lim_cnpar_witnesses() -> tuple[ReductionWitness, ReductionWitness]:
    """``(C_N <= lim, lim <= par(C_N))``.

    C_N <= lim: the stage-wise guesses form a name sequence converging to
    the least never-excluded natural.  lim <= par(C_N): component ``i``
    asks for the index from which position ``i`` no longer changes.
    """

    def cn_k_pre(p):
        return seq_tupling(lambda s: Name.constant(cn_solve(p, s)[0]))

    def lim_k_pre(p):
        return seq_tupling(lambda i: _change_exclusions(p, i))

    def lim_h_post(p, y):
        return Name(lambda i: p.at(pairing(seq_project(y, i).at(0), i)), label="limit")

    return (
        ReductionWitness(cn_k_pre, lambda p, y: y, label="cn-lim"),
        ReductionWitness(lim_k_pre, lim_h_post, label="lim-cnpar"),
    )


# ---------------------------------------------------------------------------
# Registry used by the command line and the acceptance suite


@dataclass(frozen=True)
class WitnessSetup:
    source: Problem
    target: Problem
    witness: ReductionWitness
    corpus: Callable[[int], list[Name]]


def _plf_corpus(seed: int) -> list[Name]:
    from .corpora import plf_corpus

    return [encode_cfunc(f) for f in plf_corpus(seed)]


def _functional_corpus(seed: int) -> list[Name]:
    from .corpora import vector_corpus

    return [encode_functional(functional_from_vec(EllTwoVec.from_coeffs(v))) for v in vector_corpus(seed)]


def _enumeration_corpus(seed: int) -> list[Name]:
    from .corpora import set_corpus

    return [enumeration_name(sorted(a), gaps=1) for a in set_corpus(seed)]


def _monotone_corpus(seed: int) -> list[Name]:
    from .corpora import monotone_corpus

    return [encode_monotone(s) for s in monotone_corpus(seed)]


def _exclusion_corpus(seed: int) -> list[Name]:
    from .corpora import exclusion_corpus

    return [Name.from_list(e) for e in exclusion_corpus(seed)]


def _settling_corpus(seed: int) -> list[Name]:
    from .corpora import settling_corpus

    return [seq_tupling(lambda k, s=s: Name(lambda n, k=k: s(k, n))) for s in settling_corpus(seed)]


def _witness_table() -> dict[str, Callable[[], WitnessSetup]]:
    def max_zero():
        return WitnessSetup(max_problem(), zero_problem(), max_equiv_zero_witnesses()[1], _plf_corpus)

    def zero_max():
        return WitnessSetup(zero_problem(), max_problem(), max_equiv_zero_witnesses()[0], _plf_corpus)

    def frr_mct():
        return WitnessSetup(frr_problem(), mct_problem(), frr_le_mct_witness(), _functional_corpus)

    def ec_frr():
        return WitnessSetup(ec_problem(), frr_problem(), ec_via_frr_witness(), _enumeration_corpus)

    def mct_ec():
        return WitnessSetup(mct_problem(), ec_problem(), mct_ec_bridge()[0], _monotone_corpus)

    def ec_mct():
        return WitnessSetup(ec_problem(), mct_problem(), mct_ec_bridge()[1], _enumeration_corpus)

    def cn_lim():
        return WitnessSetup(cn_problem(), lim_problem(), lim_cnpar_witnesses()[0], _exclusion_corpus)

    def lim_cnpar():
        return WitnessSetup(lim_problem(), parallelize(cn_problem()), lim_cnpar_witnesses()[1], _settling_corpus)

    def identity():
        return WitnessSetup(zero_problem(), zero_problem(), identity_witness(), _plf_corpus)

    return {
        "max-zero": max_zero,
        "zero-max": zero_max,
        "frr-mct": frr_mct,
        "ec-frr": ec_frr,
        "mct-ec": mct_ec,
        "ec-mct": ec_mct,
        "cn-lim": cn_lim,
        "lim-cnpar": lim_cnpar,
        "identity": identity,
    }


WITNESSES = _witness_table()
