"""Deterministic instance corpora for demonstrations and reduction checks.

Every generator takes a seed and returns the same list for the same seed.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable

from .exact import CReal, Dyadic, MonotoneSeq
from .functions import PLFunc
from .machines import StageSet
from .constructions import specker_seq

__all__ = [
    "random_plfunc",
    "plf_corpus",
    "vector_corpus",
    "set_corpus",
    "monotone_corpus",
    "exclusion_corpus",
    "settling_corpus",
]


def random_plfunc(rng: random.Random, pieces: int = 4, denom_bits: int = 4, sign_change: bool = False) -> PLFunc:
    """Random PL function with dyadic breakpoints on a ``2**-denom_bits`` grid."""
    grid = 1 << denom_bits
    inner = sorted(rng.sample(range(1, grid), min(pieces - 1, grid - 1)))
    xs = [0] + inner + [grid]
    ys = [rng.randint(-grid, grid) for _ in xs]
    if sign_change and not (min(ys) <= 0 <= max(ys)):
        ys[rng.randrange(len(ys))] = 0
    return PLFunc([(Dyadic(x, -denom_bits), Dyadic(y, -denom_bits)) for x, y in zip(xs, ys)])


def plf_corpus(seed: int = 0, size: int = 10) -> list[PLFunc]:
    """Functions with a zero: fixed examples first, then random ones."""
    fixed = [
        PLFunc([(0, -1), (1, 1)], label="line"),
        PLFunc([(0, -1), (Fraction(1, 2), 1), (1, -1)], label="tent-shift"),
        PLFunc([(0, 0), (1, 0)], label="zero"),
        PLFunc([(0, -1), (Fraction(1, 4), -1), (Fraction(3, 4), 1), (1, 1)], label="ramp"),
        PLFunc([(0, -1), (Fraction(1, 3), 0), (Fraction(2, 3), 0), (1, 1)], label="plateau"),
    ]
    rng = random.Random(seed)
    out = fixed[:size]
    while len(out) < size:
        f = random_plfunc(rng, pieces=rng.randint(2, 5), sign_change=True)
        f.label = f"random-{len(out)}"
        out.append(f)
    return out


def vector_corpus(seed: int = 0, size: int = 10) -> list[list[Fraction]]:
    """Finitely supported vectors with norm at most 2."""
    fixed = [
        [Fraction(1)],
        [],
        [Fraction(3, 5), Fraction(4, 5)],
        [Fraction(0), Fraction(1, 2), Fraction(0), Fraction(-1, 4)],
    ]
    rng = random.Random(seed)
    out = fixed[:size]
    while len(out) < size:
        n = rng.randint(1, 6)
        v = [Fraction(rng.randint(-8, 8), 16) for _ in range(n)]
        out.append(v)
    return out


def set_corpus(seed: int = 0, size: int = 10, universe: int = 16) -> list[frozenset[int]]:
    fixed = [frozenset({1, 3}), frozenset(), frozenset({0})]
    rng = random.Random(seed)
    out = fixed[:size]
    while len(out) < size:
        out.append(frozenset(n for n in range(universe) if rng.random() < 0.4))
    return out


def monotone_corpus(seed: int = 0, size: int = 6) -> list[MonotoneSeq]:
    half = CReal.constant(Dyadic(1, -1))
    fixed = [
        MonotoneSeq(lambda n: half, Dyadic(1)),
        specker_seq(StageSet.injected({1: 2, 3: 5})),
        MonotoneSeq(lambda n: CReal.constant(1 - Dyadic(1, -n)), Dyadic(1)),
    ]
    rng = random.Random(seed)
    out = fixed[:size]
    while len(out) < size:
        entries = {n: rng.randint(0, 12) for n in range(8) if rng.random() < 0.5}
        out.append(specker_seq(StageSet.injected(entries)))
    return out


def exclusion_corpus(seed: int = 0, size: int = 8) -> list[list[int]]:
    """Exclusion streams (0 = silence, n + 1 excludes n) with a survivor."""
    fixed = [
        [1, 2, 3],
        [],
        [n + 1 for n in range(0, 100, 2)],
    ]
    rng = random.Random(seed)
    out = fixed[:size]
    while len(out) < size:
        survivor = rng.randint(0, 6)
        excluded = [n for n in range(survivor + 4) if n != survivor and rng.random() < 0.7]
        rng.shuffle(excluded)
        stream = []
        for n in excluded:
            stream.extend([0] * rng.randint(0, 3))
            stream.append(n + 1)
        out.append(stream)
    return out


def settling_corpus(seed: int = 0, size: int = 10, width: int = 64) -> list[Callable[[int, int], int]]:
    """Name sequences ``(k, n) -> value`` where position ``n`` settles by index
    ``<= 8``; positions ``>= width`` are constant."""
    rng = random.Random(seed)
    out = []
    for _ in range(size):
        limit = [rng.randint(0, 9) for _ in range(width)]
        settle = [rng.randint(0, 8) for _ in range(width)]
        salt = rng.randrange(1 << 30)

        def seq(k, n, limit=limit, settle=settle, salt=salt):
            if n >= len(limit):
                return 0
            if k >= settle[n]:
                return limit[n]
            return (limit[n] + 1 + (k * 7919 + n * 104729 + salt) % 5) % 10

        out.append(seq)
    return out
