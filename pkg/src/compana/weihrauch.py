"""Multivalued problems on Baire space and an executable reduction harness.

A problem carries a domain check, a deterministic stage-indexed oracle and
a three-valued verifier.  ``reduce_check`` runs a reduction witness
``(K, H)`` against a corpus: ``z = H(x, g.oracle(K(x), stage))`` is judged
by ``f.verifier(x, z, level)``.

Instance encodings (all problems share the dyadic coding of
``coding.encode_dyadic``; ``<a, b>`` is Cantor pairing):

* real ``x``: position ``k`` is the code of ``q_k(x)``.
* function ``f`` on [0, 1]: position ``2p`` is the code of ``modulus(p)``;
  position ``2p + 1`` with ``p = <<code lo, code hi>, level>`` is
  ``<code J.lo, code J.hi>`` for ``J = ext([lo, hi], level)``.
* monotone sequence: position 0 is the code of the bound, position
  ``1 + <n, k>`` the code of ``q_k(x_n)``.
* real sequence: position ``<n, k>`` is the code of ``q_k(x_n)``.
* binary tree: position ``word_code(w)`` is 1 if ``w`` is in the tree.
* sequence of names (lim, jump, parallelization): position ``<k, n>`` is
  the ``n``-th value of the ``k``-th name.
* exclusion stream (choice on N): 0 means no report, ``n + 1`` excludes ``n``.
* l2 vector: position ``2 <n, k>`` is the code of ``q_k(c_n)``, position
  ``2N + 1`` the code of the tail bound for ``sum_{n >= N} c_n**2``.
* functional: position 0 is the code of the norm bound, position
  ``1 + <i, k>`` the code of ``q_k(f(dense_unit_ball(i)))``.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .coding import (
    Name,
    decode_dyadic,
    dyadic_name,
    encode_dyadic,
    name_to_real,
    pairing,
    real_to_name,
    seq_project,
    seq_tupling,
    unpair,
    word_code,
)
from .constructions import MaxSearch, TreePredicate, bwt_cluster_stage, leftmost_zero, max_value
from .errors import CompanaError, DomainError, MalformedName
from .exact import CReal, Dyadic, Interval, MonotoneSeq, ceil_dyadic, mct_stage
from .functions import CFunc, EllTwoVec, Functional, _sqrt_bound

__all__ = [
    "DomainStatus",
    "Verdict",
    "Problem",
    "ReductionWitness",
    "InstanceOutcome",
    "Report",
    "reduce_check",
    "identity_problem",
    "identity_witness",
    "cn_problem",
    "cn_solve",
    "cn_trace",
    "mct_problem",
    "lim_problem",
    "wkl_problem",
    "bwt_problem",
    "zero_problem",
    "max_problem",
    "parallelize",
    "jump",
    "encode_cfunc",
    "decode_cfunc",
    "encode_monotone",
    "decode_monotone",
    "encode_real_seq",
    "decode_real_seq",
    "encode_tree",
    "decode_tree",
    "encode_vec",
    "decode_vec",
    "encode_functional",
    "decode_functional",
    "combine",
]


class DomainStatus(enum.Enum):
    OK = "ok"
    UNKNOWN = "unknown"
    VIOLATED = "violated"


class Verdict(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    UNKNOWN = "unknown"


def combine(verdicts) -> Verdict:
    """Product semantics: any rejection rejects, all accepted accepts."""
    seen_unknown = False
    for v in verdicts:
        if v is Verdict.REJECTED:
            return Verdict.REJECTED
        if v is Verdict.UNKNOWN:
            seen_unknown = True
    return Verdict.UNKNOWN if seen_unknown else Verdict.ACCEPTED


def _always_ok(p: Name, budget: int) -> DomainStatus:
    return DomainStatus.OK


@dataclass(frozen=True)
class Problem:
    id: str
    domain_check: Callable[[Name, int], DomainStatus]
    oracle: Callable[[Name, int], Name]
    verifier: Callable[[Name, Name, int], Verdict]


@dataclass(frozen=True)
class ReductionWitness:
    """``f <=_W g`` via ``k_pre: x -> K(x)`` and ``h_post: (x, y) -> H(x, y)``."""

    k_pre: Callable[[Name], Name]
    h_post: Callable[[Name, Name], Name]
    label: str = ""

    def compose(self, inner: "ReductionWitness") -> "ReductionWitness":
        """``self`` witnesses f <= g and ``inner`` g <= h; result: f <= h."""

        def k_pre(x):
            return inner.k_pre(self.k_pre(x))

        def h_post(x, y):
            return self.h_post(x, inner.h_post(self.k_pre(x), y))

        return ReductionWitness(k_pre, h_post, label=f"{self.label};{inner.label}")


@dataclass(frozen=True)
class InstanceOutcome:
    index: int
    domain: DomainStatus
    verdict: Optional[Verdict]
    stage: int
    diagnostic: str = ""

    @property
    def skipped(self) -> bool:
        return self.verdict is None


@dataclass(frozen=True)
class Report:
    source: str
    target: str
    witness: str
    level: int
    stage: int
    outcomes: tuple[InstanceOutcome, ...] = field(default_factory=tuple)

    def count(self, verdict: Verdict) -> int:
        return sum(1 for o in self.outcomes if o.verdict is verdict)

    @property
    def skipped(self) -> int:
        return sum(1 for o in self.outcomes if o.skipped)

    @property
    def all_accepted(self) -> bool:
        checked = [o for o in self.outcomes if not o.skipped]
        return bool(checked) and all(o.verdict is Verdict.ACCEPTED for o in checked)


def reduce_check(
    f: Problem,
    g: Problem,
    w: ReductionWitness,
    instances: Sequence[Name],
    level: int,
    stage: int,
    budget: Optional[int] = None,
    workers: int = 1,
) -> Report:
    """Run ``w`` as a reduction of ``f`` to ``g`` on every instance.

    Instances whose domain check is violated are skipped with a
    diagnostic; errors raised by the witness or oracle are reported as
    rejections.  Outcomes are ordered by instance index.
    """
    budget = level if budget is None else budget

    def one(item):
        i, x = item
        try:
            status = f.domain_check(x, budget)
        except CompanaError as exc:
            return InstanceOutcome(i, DomainStatus.VIOLATED, None, stage, f"domain check: {exc}")
        if status is DomainStatus.VIOLATED:
            return InstanceOutcome(i, status, None, stage, "domain check violated")
        try:
            y = g.oracle(w.k_pre(x), stage)
            z = w.h_post(x, y)
            verdict = f.verifier(x, z, level)
            diag = ""
        except CompanaError as exc:
            verdict, diag = Verdict.REJECTED, f"{type(exc).__name__}: {exc}"
        return InstanceOutcome(i, status, verdict, stage, diag)

    items = list(enumerate(instances))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, items))
    else:
        outcomes = [one(item) for item in items]
    return Report(f.id, g.id, w.label, level, stage, tuple(outcomes))


# ---------------------------------------------------------------------------
# Encodings


def encode_cfunc(f: CFunc) -> Name:
    def fn(pos):
        p, odd = divmod(pos, 2)
        if not odd:
            return encode_dyadic(f.modulus(p))
        ends, level = unpair(p)
        lo, hi = (decode_dyadic(c) for c in unpair(ends))
        if lo > hi:
            lo, hi = hi, lo
        j = f.ext(Interval(lo, hi), level)
        return pairing(encode_dyadic(j.lo), encode_dyadic(j.hi))

    return Name(fn, label=f"cfunc({f.label})")


def decode_cfunc(p: Name) -> CFunc:
    def ext(iv, level):
        ends = pairing(encode_dyadic(iv.lo), encode_dyadic(iv.hi))
        lo, hi = (decode_dyadic(c) for c in unpair(p.at(2 * pairing(ends, level) + 1)))
        if lo > hi:
            raise MalformedName("function name returned an empty enclosure")
        return Interval(lo, hi)

    def modulus(level):
        m = decode_dyadic(p.at(2 * level))
        if m <= 0:
            raise MalformedName("function name has a non-positive modulus")
        return m

    return CFunc(ext, modulus, label=p.label or "decoded")


def encode_monotone(seq: MonotoneSeq) -> Name:
    bound = encode_dyadic(seq.bound)

    def fn(pos):
        if pos == 0:
            return bound
        n, k = unpair(pos - 1)
        return encode_dyadic(seq.terms(n).approx(k))

    return Name(fn, label="monotone")


def decode_monotone(p: Name) -> MonotoneSeq:
    bound = decode_dyadic(p.at(0))
    mag = ceil_dyadic(abs(bound) + 1, 0)

    def term(n):
        return CReal(lambda k: decode_dyadic(p.at(1 + pairing(n, k))), bound=mag)

    return MonotoneSeq(term, bound)


def encode_real_seq(xs: Callable[[int], CReal]) -> Name:
    def fn(pos):
        n, k = unpair(pos)
        return encode_dyadic(xs(n).approx(k))

    return Name(fn, label="real-seq")


def decode_real_seq(p: Name) -> Callable[[int], CReal]:
    cache: dict[int, CReal] = {}

    def term(n):
        if n not in cache:
            cache[n] = name_to_real(Name(lambda k: p.at(pairing(n, k))))
        return cache[n]

    return term


def encode_tree(tree: TreePredicate) -> Name:
    from .coding import word_decode

    return Name(lambda pos: int(tree.member(word_decode(pos))), label=f"tree({tree.label})")


def decode_tree(p: Name) -> TreePredicate:
    return TreePredicate(lambda w: p.at(word_code(w)) != 0, label="decoded")


def encode_vec(y: EllTwoVec) -> Name:
    def fn(pos):
        half, odd = divmod(pos, 2)
        if odd:
            return encode_dyadic(y.tail_sq(half))
        n, k = unpair(half)
        return encode_dyadic(y.coeff(n).approx(k))

    return Name(fn, label=f"vec({y.label})")


def decode_vec(p: Name) -> EllTwoVec:
    tail0 = decode_dyadic(p.at(1))
    if tail0 < 0:
        raise MalformedName("negative tail bound")
    mag = _sqrt_bound(tail0) if tail0 > 0 else Dyadic(1)

    def coeff(n):
        return CReal(lambda k: decode_dyadic(p.at(2 * pairing(n, k))), bound=mag)

    def tail(n):
        return decode_dyadic(p.at(2 * n + 1))

    return EllTwoVec(coeff, tail, label="decoded")


def encode_functional(f: Functional) -> Name:
    bound = encode_dyadic(f.bound)

    def fn(pos):
        if pos == 0:
            return bound
        i, k = unpair(pos - 1)
        return encode_dyadic(f.on_dense(i).approx(k))

    return Name(fn, label=f"functional({f.label})")


class _NamedFunctional(Functional):
    """A functional known only through its values on the dense sequence."""

    def __init__(self, p: Name):
        bound = decode_dyadic(p.at(0))
        super().__init__(self._no_eval, bound, label="decoded")
        self._name = p
        self._mag = ceil_dyadic(abs(bound) + 1, 0)

    @staticmethod
    def _no_eval(x):
        raise MalformedName("a decoded functional is only available on the dense sequence")

    def on_dense(self, i):
        with self._lock:
            hit = self._dense.get(i)
        if hit is None:
            p = self._name
            hit = CReal(lambda k: decode_dyadic(p.at(1 + pairing(i, k))), bound=self._mag)
            with self._lock:
                hit = self._dense.setdefault(i, hit)
        return hit


def decode_functional(p: Name) -> Functional:
    return _NamedFunctional(p)


# ---------------------------------------------------------------------------
# Identity


def identity_problem() -> Problem:
    """``id: x -> x``; verifier compares positions ``0..level``."""

    def verifier(x, z, level):
        ok = all(x.at(i) == z.at(i) for i in range(level + 1))
        return Verdict.ACCEPTED if ok else Verdict.REJECTED

    return Problem("id", _always_ok, lambda x, stage: x, verifier)


def identity_witness() -> ReductionWitness:
    return ReductionWitness(lambda x: x, lambda x, y: y, label="identity")


# ---------------------------------------------------------------------------
# Choice on the natural numbers


def cn_trace(excluded: Name, stage: int) -> list[int]:
    """Answers after reading positions ``0..t-1`` for ``t = 0..stage``."""
    seen: set[int] = set()
    answer = 0
    out = [answer]
    for t in range(stage):
        v = excluded.at(t)
        if v:
            seen.add(v - 1)
            while answer in seen:
                answer += 1
        out.append(answer)
    return out


def cn_solve(excluded: Name, stage: int) -> tuple[int, int]:
    """Least natural not excluded among the first ``stage`` reports, and the
    number of times that answer was revised."""
    trace = cn_trace(excluded, stage)
    changes = sum(1 for a, b in zip(trace, trace[1:]) if a != b)
    return trace[-1], changes


def cn_problem(horizon: int = 4096) -> Problem:
    """``C_N``.  The verifier accepts an answer not excluded within the
    first ``horizon`` reports and rejects an excluded one."""

    def oracle(p, stage):
        return Name.constant(cn_solve(p, stage)[0])

    def verifier(p, z, level):
        n = z.at(0)
        for t in range(horizon):
            if p.at(t) == n + 1:
                return Verdict.REJECTED
        return Verdict.ACCEPTED

    return Problem("C_N", _always_ok, oracle, verifier)


# ---------------------------------------------------------------------------
# Monotone convergence


def _real_verdict(z: CReal, target_lo: Dyadic, target_hi: Dyadic, level: int, slack: int = 2) -> Verdict:
    """Is ``z`` within ``2**-level`` of the interval ``[target_lo, target_hi]``?

    The target interval is exact; ``z`` is read at precision ``level + slack``.
    """
    q = z.approx(level + slack)
    eps = Dyadic(1, -(level + slack))
    tol = Dyadic(1, -level)
    if q - eps >= target_lo - tol and q + eps <= target_hi + tol:
        return Verdict.ACCEPTED
    if q + eps < target_lo - tol or q - eps > target_hi + tol:
        return Verdict.REJECTED
    return Verdict.UNKNOWN


def mct_problem(horizon: int = 256) -> Problem:
    """Supremum of a bounded monotone sequence (stage semantics).

    The oracle at stage ``s`` names ``max_{n <= s} x_n``; the verifier
    judges against the sequence truncated at ``horizon``.
    """

    def domain_check(p, budget):
        try:
            seq = decode_monotone(p)
        except CompanaError:
            return DomainStatus.VIOLATED
        k = max(budget, 4)
        slack = Dyadic(1, 1 - k)
        prev = None
        for n in range(min(budget, 32) + 1):
            q = seq.terms(n).approx(k)
            if q > seq.bound + slack:
                return DomainStatus.VIOLATED
            if prev is not None and prev > q + 2 * slack:
                return DomainStatus.VIOLATED
            prev = q
        return DomainStatus.OK

    def oracle(p, stage):
        seq = decode_monotone(p)
        return real_to_name(CReal(lambda k: mct_stage(seq, stage, k), bound=ceil_dyadic(abs(seq.bound) + 1, 0)))

    def verifier(p, z, level):
        seq = decode_monotone(p)
        k = level + 2
        m = mct_stage(seq, horizon, k)
        eps = Dyadic(1, -k)
        return _real_verdict(name_to_real(z), m - eps, m + eps, level)

    return Problem("MCT", domain_check, oracle, verifier)


# ---------------------------------------------------------------------------
# Limit


def lim_problem(horizon: int = 256) -> Problem:
    """Pointwise limit of a converging sequence of names.

    The oracle at stage ``s`` outputs the ``s``-th name.  The verifier
    checks positions ``0..level`` against the window of approximations
    ``horizon..2*horizon``: constant and equal accepts, constant and
    different rejects.
    """

    def oracle(p, stage):
        return seq_project(p, stage)

    def verifier(p, z, level):
        verdicts = []
        for i in range(level + 1):
            window = {p.at(pairing(k, i)) for k in range(horizon, 2 * horizon + 1)}
            if len(window) > 1:
                verdicts.append(Verdict.UNKNOWN)
            elif z.at(i) in window:
                verdicts.append(Verdict.ACCEPTED)
            else:
                verdicts.append(Verdict.REJECTED)
        return combine(verdicts)

    return Problem("lim", _always_ok, oracle, verifier)


# ---------------------------------------------------------------------------
# Weak Koenig


def _leftmost_word(tree: TreePredicate, depth: int, node_budget: int) -> tuple[str, bool]:
    """Leftmost member of length ``depth`` by depth-first search.

    Returns ``(word, complete)``; when the budget runs out the longest
    member found so far is returned with ``complete = False``.
    """
    if not tree.member(""):
        return "", False
    best = ""
    stack = [""]
    nodes = 0
    while stack:
        w = stack.pop()
        if len(w) > len(best):
            best = w
        if len(w) == depth:
            return w, True
        nodes += 1
        if nodes > node_budget:
            return best, False
        for b in "10":
            child = w + b
            if tree.member(child):
                stack.append(child)
    return best, False


def wkl_problem(node_budget: int = 1 << 16) -> Problem:
    """Infinite path through an infinite binary tree (stage semantics).

    The oracle at stage ``s`` outputs the leftmost member of length ``s``
    padded with zeros.  The verifier checks that the prefix of length
    ``level`` is in the tree.
    """

    def domain_check(p, budget):
        tree = decode_tree(p)
        word, complete = _leftmost_word(tree, budget, node_budget)
        if complete:
            return DomainStatus.OK
        return DomainStatus.VIOLATED if len(word) < budget and _exhausted(tree, budget, node_budget) else DomainStatus.UNKNOWN

    def oracle(p, stage):
        word, _ = _leftmost_word(decode_tree(p), stage, node_budget)
        bits = tuple(int(c) for c in word)
        return Name(lambda i: bits[i] if i < len(bits) else 0, label="path")

    def verifier(p, z, level):
        tree = decode_tree(p)
        word = "".join("1" if z.at(i) else "0" for i in range(level))
        if any(z.at(i) > 1 for i in range(level)):
            return Verdict.REJECTED
        return Verdict.ACCEPTED if tree.member(word) else Verdict.REJECTED

    return Problem("WKL", domain_check, oracle, verifier)


def _exhausted(tree: TreePredicate, depth: int, node_budget: int) -> bool:
    """True if breadth-first search certifies no member of length ``depth``."""
    frontier = [""] if tree.member("") else []
    nodes = 0
    for _ in range(depth):
        nxt = []
        for w in frontier:
            for b in "01":
                if tree.member(w + b):
                    nxt.append(w + b)
        nodes += len(nxt)
        if nodes > node_budget:
            return False
        frontier = nxt
        if not frontier:
            return True
    return False


# ---------------------------------------------------------------------------
# Bolzano-Weierstrass


def bwt_problem(resolution: int = 20, horizon: int = 512, quorum: int = 16) -> Problem:
    """Cluster point of a sequence in [0, 1] (stage semantics).

    The oracle at stage ``s`` names the centre of the box chosen by
    ``bwt_cluster_stage(seq, s, resolution)``.  The verifier accepts when
    at least ``1/quorum`` of the terms with index in ``[horizon, 2*horizon)``
    lie within ``2**-level`` of the answer, and rejects answers certified
    outside [0, 1].
    """

    def oracle(p, stage):
        return dyadic_name(bwt_cluster_stage(decode_real_seq(p), stage, resolution))

    def verifier(p, z, level):
        seq = decode_real_seq(p)
        zr = name_to_real(z)
        k = level + 2
        q = zr.approx(k)
        tol = Dyadic(1, -level)
        eps = Dyadic(1, -k)
        if q + eps < -tol or q - eps > 1 + tol:
            return Verdict.REJECTED
        close = sum(
            1 for n in range(horizon, 2 * horizon) if abs(seq(n).approx(k) - q) + 2 * eps <= tol
        )
        return Verdict.ACCEPTED if close * quorum >= horizon else Verdict.UNKNOWN

    return Problem("BWT", _always_ok, oracle, verifier)


# ---------------------------------------------------------------------------
# Zero and maximum problems


def _extremes(f: CFunc, budget: int) -> tuple[Dyadic, Dyadic]:
    hi = max_value(f, budget)
    neg = CFunc(lambda iv, lv: -f.ext(iv, lv), f.modulus, label="neg")
    lo = -max_value(neg, budget)
    return lo, hi


def zero_problem(max_depth: int = 96) -> Problem:
    """``Z``: a zero of a continuous function on [0, 1] that has one.

    The oracle at stage ``s`` returns the midpoint of the leftmost box of
    depth ``min(s, max_depth)`` whose enclosure contains 0.  The verifier
    accepts ``z`` with ``|f(z)| <= 2**-level`` certified.
    """

    def domain_check(p, budget):
        f = decode_cfunc(p)
        lo, hi = _extremes(f, budget)
        tol = Dyadic(1, -budget)
        if lo > tol or hi < -tol:
            return DomainStatus.VIOLATED
        return DomainStatus.OK

    def oracle(p, stage):
        z = leftmost_zero(decode_cfunc(p), min(stage, max_depth))
        return dyadic_name(z if z is not None else Dyadic(0))

    def verifier(p, z, level):
        f = decode_cfunc(p)
        try:
            return _real_verdict(f.eval(name_to_real(z)), Dyadic(0), Dyadic(0), level)
        except DomainError:
            return Verdict.REJECTED

    return Problem("Z", domain_check, oracle, verifier)


def max_problem(max_level: int = 96) -> Problem:
    """``MAX``: a point where ``f`` attains its maximum on [0, 1].

    The oracle at stage ``s`` returns the best point of a branch-and-bound
    search refined to level ``min(s, max_level)``.  The verifier accepts
    ``z`` with ``f(z) >= max f - 2**-level`` certified.
    """

    def oracle(p, stage):
        f = decode_cfunc(p)
        return dyadic_name(MaxSearch(f).refine(min(stage, max_level))[2])

    def verifier(p, z, level):
        f = decode_cfunc(p)
        k = level + 2
        m = max_value(f, k)
        eps = Dyadic(1, -k)
        try:
            return _real_verdict(f.eval(name_to_real(z)), m - eps, m + eps, level)
        except DomainError:
            return Verdict.REJECTED

    return Problem("MAX", _always_ok, oracle, verifier)


# ---------------------------------------------------------------------------
# Combinators


def parallelize(g: Problem, components: Optional[int] = None) -> Problem:
    """``g^``: componentwise on tupled instances.

    The verifier checks components ``0..level`` (or ``0..components-1``
    when given).
    """

    def width(level):
        return components if components is not None else level + 1

    def domain_check(p, budget):
        statuses = [g.domain_check(seq_project(p, k), budget) for k in range(width(budget))]
        if DomainStatus.VIOLATED in statuses:
            return DomainStatus.VIOLATED
        if DomainStatus.UNKNOWN in statuses:
            return DomainStatus.UNKNOWN
        return DomainStatus.OK

    def oracle(p, stage):
        cache: dict[int, Name] = {}

        def component(k):
            if k not in cache:
                cache[k] = g.oracle(seq_project(p, k), stage)
            return cache[k]

        return seq_tupling(component)

    def verifier(p, z, level):
        return combine(
            g.verifier(seq_project(p, k), seq_project(z, k), level) for k in range(width(level))
        )

    return Problem(f"par({g.id})", domain_check, oracle, verifier)


def jump(f: Problem, horizon: int = 64) -> Problem:
    """``f'``: the instance arrives as a sequence of names converging to an
    ``f``-instance.  The oracle at stage ``s`` treats the ``s``-th name as
    settled; domain check and verifier use the ``horizon``-th name."""

    def domain_check(p, budget):
        return f.domain_check(seq_project(p, horizon), budget)

    def oracle(p, stage):
        return f.oracle(seq_project(p, stage), stage)

    def verifier(p, z, level):
        return f.verifier(seq_project(p, horizon), z, level)

    return Problem(f"jump({f.id})", domain_check, oracle, verifier)
