"""A small counter-machine universe.

Programs are lists of ``INC r``, ``DECJZ r label`` and ``HALT v`` with
``v`` in {0, 1}.  The input is placed in register 0; control that falls
off the end of the program never halts.  ``godel`` is a fixed bijection
from the naturals onto all valid programs, and the diagonal runs
``godel(i)`` on input ``i`` give the stage-enumerated halting set and the
stage-enumerated disjoint pair used for Kleene trees.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Union

from .coding import pairing, tuple_decode, tuple_encode, unpair
from .errors import MalformedProgram

__all__ = [
    "Inc",
    "DecJz",
    "Halt",
    "MachineProgram",
    "Halted",
    "RUNNING",
    "run_bounded",
    "godel",
    "godel_index",
    "StageSet",
    "StagePair",
    "halting_stage",
    "inseparable_stage",
    "halting_set",
    "inseparable_pair",
]


@dataclass(frozen=True)
class Inc:
    register: int

    def __str__(self):
        return f"INC {self.register}"


@dataclass(frozen=True)
class DecJz:
    register: int
    label: int

    def __str__(self):
        return f"DECJZ {self.register} {self.label}"


@dataclass(frozen=True)
class Halt:
    value: int

    def __str__(self):
        return f"HALT {self.value}"


Instruction = Union[Inc, DecJz, Halt]


@dataclass(frozen=True)
class MachineProgram:
    instructions: tuple[Instruction, ...]

    def __post_init__(self):
        ins = tuple(self.instructions)
        object.__setattr__(self, "instructions", ins)
        if not ins:
            raise MalformedProgram("a program needs at least one instruction")
        for pc, op in enumerate(ins):
            if isinstance(op, Inc):
                if op.register < 0:
                    raise MalformedProgram(f"line {pc}: negative register")
            elif isinstance(op, DecJz):
                if op.register < 0:
                    raise MalformedProgram(f"line {pc}: negative register")
                if not 0 <= op.label < len(ins):
                    raise MalformedProgram(f"line {pc}: jump label {op.label} out of range")
            elif isinstance(op, Halt):
                if op.value not in (0, 1):
                    raise MalformedProgram(f"line {pc}: HALT value must be 0 or 1")
            else:
                raise MalformedProgram(f"line {pc}: unknown instruction {op!r}")

    def __len__(self):
        return len(self.instructions)

    @classmethod
    def parse(cls, text: str) -> "MachineProgram":
        """One instruction per line; line numbers (0-based) are the labels."""
        out: list[Instruction] = []
        for lineno, raw in enumerate(text.strip().splitlines()):
            parts = raw.split()
            try:
                if parts[0] == "INC" and len(parts) == 2:
                    out.append(Inc(int(parts[1])))
                elif parts[0] == "DECJZ" and len(parts) == 3:
                    out.append(DecJz(int(parts[1]), int(parts[2])))
                elif parts[0] == "HALT" and len(parts) == 2:
                    out.append(Halt(int(parts[1])))
                else:
                    raise ValueError
            except (ValueError, IndexError):
                raise MalformedProgram(f"line {lineno}: cannot parse {raw!r}") from None
        return cls(tuple(out))

    def __str__(self):
        return "\n".join(str(op) for op in self.instructions)


@dataclass(frozen=True)
class Halted:
    value: int
    steps: int = field(default=0, compare=False)


@dataclass(frozen=True)
class _Running:
    def __repr__(self):
        return "RUNNING"


RUNNING = _Running()


class _Execution:
    """Resumable machine state, so a diagonal run is never replayed."""

    __slots__ = ("program", "pc", "regs", "steps", "result")

    def __init__(self, program: MachineProgram, inp: int):
        self.program = program
        self.pc = 0
        self.regs = {0: inp}
        self.steps = 0
        self.result: Optional[Halted] = None

    def advance(self, budget: int) -> None:
        ins = self.program.instructions
        n = len(ins)
        regs = self.regs
        pc = self.pc
        steps = self.steps
        while self.result is None and steps < budget:
            if pc >= n:
                # falls off the end: diverges, budget is irrelevant
                steps = budget
                break
            op = ins[pc]
            steps += 1
            if type(op) is Inc:
                regs[op.register] = regs.get(op.register, 0) + 1
                pc += 1
            elif type(op) is DecJz:
                v = regs.get(op.register, 0)
                if v == 0:
                    pc = op.label
                else:
                    regs[op.register] = v - 1
                    pc += 1
            else:
                self.result = Halted(op.value, steps)
        self.pc = pc
        self.steps = steps

    def status(self, budget: int):
        if self.result is not None and self.result.steps <= budget:
            return self.result
        return RUNNING


def run_bounded(p: MachineProgram, inp: int, steps: int):
    """Run ``p`` on ``inp`` for at most ``steps`` steps.

    Executing ``HALT`` costs one step, so ``HALT 0`` needs a budget of 1.
    """
    ex = _Execution(p, inp)
    ex.advance(steps)
    return ex.status(steps)


def _decode_instruction(code: int, length: int) -> Instruction:
    if code < 2:
        return Halt(code)
    reg, kind = divmod(code - 2, length + 1)
    if kind == 0:
        return Inc(reg)
    return DecJz(reg, kind - 1)


def _encode_instruction(op: Instruction, length: int) -> int:
    if isinstance(op, Halt):
        return op.value
    if isinstance(op, Inc):
        return 2 + op.register * (length + 1)
    return 2 + op.register * (length + 1) + op.label + 1


def godel(i: int) -> MachineProgram:
    """The ``i``-th program of a fixed bijective enumeration.

    ``i`` unpairs to (length - 1, c); ``c`` decodes to a tuple of
    instruction codes, each a bijection onto the instructions that are
    valid for that program length.
    """
    k, rest = unpair(i)
    length = k + 1
    codes = tuple_decode(rest, length)
    return MachineProgram(tuple(_decode_instruction(c, length) for c in codes))


def godel_index(p: MachineProgram) -> int:
    length = len(p)
    codes = [_encode_instruction(op, length) for op in p.instructions]
    return pairing(length - 1, tuple_encode(codes))


# ---------------------------------------------------------------------------
# Stage-enumerated sets


class StageSet:
    """A c.e. set given by a monotone stage enumeration ``t -> finite set``."""

    def __init__(
        self,
        enum_at: Callable[[int], Iterable[int]],
        entry: Optional[Callable[[int, int], Optional[int]]] = None,
        label: str = "",
    ):
        self._enum_at = enum_at
        self._entry = entry
        self._cache: dict[int, frozenset[int]] = {}
        self._lock = threading.Lock()
        self.label = label

    def enum_at(self, t: int) -> frozenset[int]:
        with self._lock:
            hit = self._cache.get(t)
        if hit is not None:
            return hit
        s = frozenset(self._enum_at(t))
        with self._lock:
            return self._cache.setdefault(t, s)

    def entry_stage(self, n: int, horizon: int) -> Optional[int]:
        """Least stage ``t <= horizon`` with ``n`` enumerated, else ``None``."""
        if self._entry is not None:
            return self._entry(n, horizon)
        if n not in self.enum_at(horizon):
            return None
        lo, hi = 0, horizon
        while lo < hi:
            mid = (lo + hi) // 2
            if n in self.enum_at(mid):
                hi = mid
            else:
                lo = mid + 1
        return lo

    @classmethod
    def injected(cls, entries: Mapping[int, int], label: str = "injected") -> "StageSet":
        """A finite set where element ``n`` appears from stage ``entries[n]`` on."""
        entries = {int(n): int(t) for n, t in entries.items()}
        if any(t < 0 or n < 0 for n, t in entries.items()):
            raise ValueError("stages and elements must be natural numbers")

        def enum_at(t):
            return (n for n, s in entries.items() if s <= t)

        def entry(n, horizon):
            s = entries.get(n)
            return s if s is not None and s <= horizon else None

        return cls(enum_at, entry, label=label)

    @classmethod
    def empty(cls) -> "StageSet":
        return cls.injected({}, label="empty")

    @classmethod
    def from_json(cls, obj) -> "StageSet":
        """``{"stages": [[t, [members...]], ...]}``; members enumerated at stage t."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or not isinstance(obj.get("stages"), list):
            raise ValueError('expected an object with a "stages" list')
        entries: dict[int, int] = {}
        for item in obj["stages"]:
            if not (isinstance(item, list) and len(item) == 2 and isinstance(item[1], list)):
                raise ValueError(f"malformed stage entry {item!r}")
            t, members = item
            if not isinstance(t, int) or not all(isinstance(m, int) for m in members):
                raise ValueError(f"malformed stage entry {item!r}")
            for m in members:
                entries[m] = min(entries.get(m, t), t)
        return cls.injected(entries)

    def to_json(self, horizon: int) -> dict:
        seen: set[int] = set()
        stages = []
        for t in range(horizon + 1):
            new = sorted(self.enum_at(t) - seen)
            if new:
                stages.append([t, new])
                seen.update(new)
        return {"stages": stages}

    def __repr__(self):
        return f"StageSet({self.label})"


@dataclass(frozen=True)
class StagePair:
    """Two stage sets that are disjoint at every stage."""

    a: StageSet
    b: StageSet

    def disjoint_at(self, t: int) -> bool:
        return not (self.a.enum_at(t) & self.b.enum_at(t))

    @classmethod
    def from_json(cls, obj) -> "StagePair":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "a" not in obj or "b" not in obj:
            raise ValueError('expected an object with "a" and "b" stage sets')
        return cls(StageSet.from_json(obj["a"]), StageSet.from_json(obj["b"]))


class _Diagonal:
    """Shared cache of the diagonal runs ``godel(i)`` on input ``i``."""

    def __init__(self):
        self._runs: dict[int, _Execution] = {}
        self._lock = threading.Lock()

    def status(self, i: int, budget: int):
        with self._lock:
            ex = self._runs.get(i)
            if ex is None:
                ex = self._runs[i] = _Execution(godel(i), i)
            if ex.result is None and ex.steps < budget:
                ex.advance(budget)
            return ex.status(budget)


_DIAGONAL = _Diagonal()


def halting_stage(t: int) -> frozenset[int]:
    """``K_t = {i <= t : godel(i) halts on input i within t steps}``."""
    return frozenset(i for i in range(t + 1) if isinstance(_DIAGONAL.status(i, t), Halted))


def inseparable_stage(t: int) -> tuple[frozenset[int], frozenset[int]]:
    """``(A_t, B_t)``: diagonal runs halting with output 0, resp. 1, by stage t."""
    a, b = set(), set()
    for i in range(t + 1):
        st = _DIAGONAL.status(i, t)
        if isinstance(st, Halted):
            (a if st.value == 0 else b).add(i)
    return frozenset(a), frozenset(b)


def halting_set() -> StageSet:
    return StageSet(halting_stage, label="K")


def inseparable_pair() -> StagePair:
    return StagePair(
        StageSet(lambda t: inseparable_stage(t)[0], label="A"),
        StageSet(lambda t: inseparable_stage(t)[1], label="B"),
    )
