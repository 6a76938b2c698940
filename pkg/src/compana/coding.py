"""Baire-space plumbing: pairing, names, and the fixed codings of dyadics,
binary words and reals onto natural numbers.

Byte layout of every instance encoding used by the registered problems is
documented here and in ``docs/encodings.md``.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Iterable, Sequence, Union

from .exact import CReal, Dyadic, ceil_dyadic

__all__ = [
    "pairing",
    "unpair",
    "tuple_encode",
    "tuple_decode",
    "zigzag",
    "unzigzag",
    "encode_dyadic",
    "decode_dyadic",
    "word_code",
    "word_decode",
    "Name",
    "seq_tupling",
    "seq_project",
    "real_to_name",
    "name_to_real",
    "dyadic_name",
    "iter_nonzero",
]


def pairing(n: int, m: int) -> int:
    """Cantor pairing, a bijection N x N -> N."""
    s = n + m
    return s * (s + 1) // 2 + m


def unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    m = z - w * (w + 1) // 2
    return w - m, m


def tuple_encode(values: Sequence[int]) -> int:
    """Bijection N^L -> N for a fixed length ``L >= 1`` (right-nested pairing)."""
    if not values:
        raise ValueError("empty tuple")
    code = values[-1]
    for v in reversed(values[:-1]):
        code = pairing(v, code)
    return code


def tuple_decode(code: int, length: int) -> tuple[int, ...]:
    out = []
    for _ in range(length - 1):
        head, code = unpair(code)
        out.append(head)
    out.append(code)
    return tuple(out)


def zigzag(z: int) -> int:
    """0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ..."""
    return 2 * z if z >= 0 else -2 * z - 1


def unzigzag(n: int) -> int:
    return n // 2 if n % 2 == 0 else -(n + 1) // 2


def encode_dyadic(d: Dyadic) -> int:
    return pairing(zigzag(d.mantissa), zigzag(d.exponent))


def decode_dyadic(code: int) -> Dyadic:
    """Total: codes of non-canonical pairs decode to their canonical value."""
    m, e = unpair(code)
    return Dyadic(unzigzag(m), unzigzag(e))


def word_code(word: str) -> int:
    """Binary words in shortlex order: '' -> 0, '0' -> 1, '1' -> 2, '00' -> 3, ..."""
    return int("1" + word, 2) - 1


def word_decode(code: int) -> str:
    return bin(code + 1)[3:]


class Name:
    """A point of Baire space: a total, deterministic map N -> N.

    Values are memoized (bounded) under a lock; the underlying function
    must be pure.
    """

    __slots__ = ("_fn", "_cache", "_lock", "label")

    _CACHE_LIMIT = 1 << 16

    def __init__(self, fn: Callable[[int], int], label: str = ""):
        self._fn = fn
        self._cache: dict[int, int] = {}
        self._lock = threading.Lock()
        self.label = label

    def at(self, n: int) -> int:
        with self._lock:
            hit = self._cache.get(n)
        if hit is not None:
            return hit
        v = int(self._fn(n))
        if v < 0:
            raise ValueError(f"name value at {n} is negative")
        with self._lock:
            if len(self._cache) >= self._CACHE_LIMIT:
                self._cache.clear()
            self._cache[n] = v
        return v

    __call__ = at

    def prefix(self, n: int) -> list[int]:
        return [self.at(i) for i in range(n)]

    @classmethod
    def constant(cls, value: int) -> "Name":
        return cls(lambda n: value, label=f"const({value})")

    @classmethod
    def from_list(cls, values: Sequence[int], default: int = 0) -> "Name":
        values = tuple(values)
        return cls(lambda n: values[n] if n < len(values) else default)

    def __repr__(self) -> str:
        head = ", ".join(str(self.at(i)) for i in range(6))
        return f"Name({self.label or head + ', ...'})"


def seq_tupling(names: Union[Callable[[int], Name], Sequence[Name]]) -> Name:
    """Tuple a sequence of names: position <k, n> carries names[k].at(n)."""
    get = names.__getitem__ if isinstance(names, Sequence) else names

    def fn(z):
        k, n = unpair(z)
        return get(k).at(n)

    return Name(fn)


def seq_project(p: Name, k: int) -> Name:
    return Name(lambda n: p.at(pairing(k, n)))


def real_to_name(x: CReal) -> Name:
    """Position k carries the code of the level-k approximation."""
    return Name(lambda k: encode_dyadic(x.approx(k)))


def name_to_real(p: Name) -> CReal:
    """Inverse of ``real_to_name``; the magnitude bound ``|q_0| + 1`` is stored."""
    q0 = decode_dyadic(p.at(0))
    bound = ceil_dyadic(abs(q0) + 1, 0)
    return CReal(lambda k: decode_dyadic(p.at(k)), bound=bound)


def dyadic_name(d: Dyadic) -> Name:
    """Name of an exact dyadic (every level carries the value itself)."""
    code = encode_dyadic(d)
    return Name(lambda k: code, label=f"dyadic({d})")


def iter_nonzero(p: Name, limit: int) -> Iterable[tuple[int, int]]:
    for i in range(limit):
        v = p.at(i)
        if v:
            yield i, v
